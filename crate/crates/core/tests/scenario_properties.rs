use std::sync::OnceLock;

use symverify::scenario::{
    builtin, check_coverage, manifest, run_scenario, run_suite, CheckVerdict, CoverageEntry, RunOptions, Scenario, ScenarioError, Status,
    VerificationReport,
};

fn suite() -> &'static [VerificationReport] {
    static REPORTS: OnceLock<Vec<VerificationReport>> = OnceLock::new();
    REPORTS.get_or_init(|| run_suite(&builtin(), &RunOptions::default()).unwrap())
}

#[test]
fn eight_builtin_scenarios_pass() {
    let names: Vec<&str> = suite().iter().map(|r| r.scenario.as_str()).collect();
    assert_eq!(
        names,
        [
            "backlund-sine-gordon",
            "cond-sym-14d1",
            "eq2-reduction",
            "eq8d-solution",
            "eq9d-reduction",
            "hodograph-17d",
            "lb29d-family",
            "wave19d-invariance"
        ]
    );
    for r in suite() {
        let failed: Vec<&str> = r.checks.iter().filter(|c| c.verdict == CheckVerdict::Fail).map(|c| c.id.as_str()).collect();
        assert!(r.passed(), "{}: {failed:?}", r.scenario);
    }
}

#[test]
fn same_seed_gives_identical_reports() {
    let again = run_suite(&builtin(), &RunOptions::default()).unwrap();
    for (a, b) in suite().iter().zip(&again) {
        assert_eq!(a.to_json(), b.to_json());
    }
    let sc = builtin().into_iter().find(|s| s.name == "cond-sym-14d1").unwrap();
    let opts = RunOptions { seed: Some(7) };
    assert_eq!(run_scenario(&sc, &opts).unwrap().to_json(), run_scenario(&sc, &opts).unwrap().to_json());
}

#[test]
fn another_seed_keeps_verdicts() {
    let other = run_suite(&builtin(), &RunOptions { seed: Some(1) }).unwrap();
    for (a, b) in suite().iter().zip(&other) {
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.verdict, y.verdict, "{}/{}", a.scenario, x.id);
        }
        assert!(b.checks.iter().all(|c| c.seed == 1));
    }
}

#[test]
fn reports_round_trip_through_json() {
    for r in suite() {
        let back = VerificationReport::from_json(&r.to_json()).unwrap();
        assert_eq!(&back, r);
        assert_eq!(back.to_json(), r.to_json());
    }
}

#[test]
fn report_json_has_the_documented_shape() {
    let v: serde_json::Value = serde_json::from_str(&suite()[0].to_json()).unwrap();
    let top: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(top, ["checks", "scenario", "status"]);
    for c in v["checks"].as_array().unwrap() {
        for k in ["id", "kind", "verdict", "max_residual", "details", "seed"] {
            assert!(c.get(k).is_some(), "missing {k}");
        }
        assert!(c.get("wall_time_ms").is_none());
        assert!(["pass", "fail", "report-only"].contains(&c["verdict"].as_str().unwrap()));
    }
}

#[test]
fn symbolic_zeros_survive_the_numeric_cross_check() {
    let mut seen = 0;
    for r in suite() {
        for c in &r.checks {
            if let Some(x) = c.cross_check {
                assert!(x < 1e-12, "{}/{}: {x:e}", r.scenario, c.id);
                seen += 1;
            }
        }
    }
    assert!(seen >= 10, "only {seen} records carry a cross-check");
}

#[test]
fn scenarios_round_trip_through_json() {
    for sc in builtin() {
        assert_eq!(Scenario::from_json(&sc.to_json()).unwrap(), sc);
    }
}

#[test]
fn empty_scenario_passes() {
    let sc = Scenario::from_json(r#"{ "name": "empty" }"#).unwrap();
    let r = run_scenario(&sc, &RunOptions::default()).unwrap();
    assert!(r.checks.is_empty());
    assert_eq!(r.status, Status::Pass);
}

#[test]
fn report_only_failures_do_not_fail_the_status() {
    let text = r#"{
        "name": "policy",
        "declarations": { "independents": ["x"], "dependents": ["u"] },
        "checks": [
            { "id": "wrong", "kind": "identity", "expressions": ["x + 1"], "policy": "report-only" },
            { "id": "right", "kind": "identity", "expressions": ["(x + 1)^2 - x^2 - 2*x - 1"] }
        ]
    }"#;
    let mut sc = Scenario::from_json(text).unwrap();
    let r = run_scenario(&sc, &RunOptions::default()).unwrap();
    assert_eq!(r.status, Status::Pass);
    assert_eq!(r.check("wrong").unwrap().verdict, CheckVerdict::ReportOnly);
    assert!(r.check("wrong").unwrap().details.starts_with("expectation does not hold"));
    sc.checks[0].policy = Default::default();
    let r = run_scenario(&sc, &RunOptions::default()).unwrap();
    assert_eq!(r.status, Status::Fail);
    assert_eq!(r.check("right").unwrap().verdict, CheckVerdict::Pass);
}

#[test]
fn undeclared_symbols_and_dangling_references_are_rejected() {
    let undeclared = r#"{ "name": "s", "checks": [ { "id": "a", "kind": "identity", "expressions": ["y"] } ] }"#;
    assert!(run_scenario(&Scenario::from_json(undeclared).unwrap(), &RunOptions::default()).is_err());
    let dangling = r#"{ "name": "s", "checks": [ { "id": "a", "kind": "check-symmetry", "operator": "Q", "system": "S" } ] }"#;
    assert!(matches!(run_scenario(&Scenario::from_json(dangling).unwrap(), &RunOptions::default()), Err(ScenarioError::Reference(..))));
    assert!(Scenario::from_json(r#"{ "name": "s", "colour": 1 }"#).is_err());
}

#[test]
fn coverage_manifest_is_complete() {
    let m = manifest();
    assert!(m.len() >= 20);
    check_coverage(&m, &builtin()).unwrap();
    for sc in builtin() {
        assert!(m.iter().any(|e| e.scenario == sc.name), "{} is not in the manifest", sc.name);
    }
    let mut bad = m.clone();
    bad.push(CoverageEntry { claim: "missing".into(), scenario: "no-such-scenario".into(), checks: vec![] });
    assert!(matches!(check_coverage(&bad, &builtin()), Err(ScenarioError::Coverage(..))));
    let mut bad = m;
    bad[0].checks.push("no-such-check".into());
    assert!(check_coverage(&bad, &builtin()).is_err());
}
