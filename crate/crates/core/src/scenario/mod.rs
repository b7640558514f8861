//! Data-driven verification scenarios, their runner and reports.

pub mod builtin;
mod checks;
pub mod env;
pub mod report;
pub mod schema;

use std::time::Instant;

use thiserror::Error;

pub use builtin::{builtin, builtin_named, check_coverage, manifest, CoverageEntry};
pub use checks::{describe, lift, verdict_name, Outcome};
pub use env::Env;
pub use report::{CheckRecord, CheckVerdict, Status, VerificationReport};
pub use schema::*;

use checks::Failure;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario JSON: {0}")]
    Json(String),
    #[error("schema violation in {0}: {1}")]
    Schema(String, String),
    #[error("unresolvable reference to {0} '{1}'")]
    Reference(&'static str, String),
    #[error("undeclared symbol '{0}' in \"{1}\"")]
    Undeclared(String, String),
    #[error("cannot parse \"{0}\": {1}")]
    Parse(String, String),
    #[error("coverage manifest entry '{0}' has no scenario or check '{1}'")]
    Coverage(String, String),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
}

fn record(env: &Env, spec: &CheckSpec) -> Result<CheckRecord, ScenarioError> {
    let start = Instant::now();
    let out = match checks::execute(env, spec) {
        Ok(o) => o,
        Err(Failure::Scenario(e)) => return Err(e),
        Err(Failure::Compute(msg)) => {
            Outcome { ok: spec.expect == Expectation::Error, max_residual: None, details: format!("error: {msg}"), cross_check: None }
        }
    };
    let max_residual = out.max_residual.filter(|v| v.is_finite());
    let (verdict, details) = match spec.policy {
        Policy::MustPass => (if out.ok { CheckVerdict::Pass } else { CheckVerdict::Fail }, out.details),
        Policy::ReportOnly => {
            let would = if out.ok { "holds" } else { "does not hold" };
            (CheckVerdict::ReportOnly, format!("expectation {would}; {}", out.details))
        }
    };
    Ok(CheckRecord {
        id: spec.id.clone(),
        kind: spec.body.kind().to_string(),
        verdict,
        max_residual,
        details,
        seed: env.seed,
        cross_check: out.cross_check,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every check in order; a failing check does not stop the others.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Result<VerificationReport, ScenarioError> {
    let env = Env::new(sc, opts.seed)?;
    env.validate()?;
    let mut records = Vec::new();
    for spec in &sc.checks {
        records.push(record(&env, spec)?);
    }
    Ok(VerificationReport::new(&sc.name, records))
}

/// Runs the scenarios concurrently; reports are ordered by scenario name.
pub fn run_suite(scenarios: &[Scenario], opts: &RunOptions) -> Result<Vec<VerificationReport>, ScenarioError> {
    let results: Vec<Result<VerificationReport, ScenarioError>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios.iter().map(|sc| s.spawn(move || run_scenario(sc, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let mut reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    Ok(reports)
}
