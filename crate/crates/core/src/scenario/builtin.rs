use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError};

const FILES: [(&str, &str); 8] = [
    ("backlund-sine-gordon", include_str!("../../scenarios/backlund-sine-gordon.json")),
    ("cond-sym-14d1", include_str!("../../scenarios/cond-sym-14d1.json")),
    ("eq2-reduction", include_str!("../../scenarios/eq2-reduction.json")),
    ("eq8d-solution", include_str!("../../scenarios/eq8d-solution.json")),
    ("eq9d-reduction", include_str!("../../scenarios/eq9d-reduction.json")),
    ("hodograph-17d", include_str!("../../scenarios/hodograph-17d.json")),
    ("lb29d-family", include_str!("../../scenarios/lb29d-family.json")),
    ("wave19d-invariance", include_str!("../../scenarios/wave19d-invariance.json")),
];

const MANIFEST: &str = include_str!("../../scenarios/manifest.json");

/// The shipped scenarios, sorted by name.
pub fn builtin() -> Vec<Scenario> {
    FILES.iter().map(|(n, text)| Scenario::from_json(text).unwrap_or_else(|e| panic!("builtin scenario {n}: {e}"))).collect()
}

pub fn builtin_named(name: &str) -> Option<Scenario> {
    builtin().into_iter().find(|s| s.name == name)
}

/// One claim and the checks that cover it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub claim: String,
    pub scenario: String,
    pub checks: Vec<String>,
}

pub fn manifest() -> Vec<CoverageEntry> {
    serde_json::from_str(MANIFEST).expect("coverage manifest parses")
}

/// Fails on the first manifest entry whose scenario or checks are missing.
pub fn check_coverage(entries: &[CoverageEntry], scenarios: &[Scenario]) -> Result<(), ScenarioError> {
    for e in entries {
        let sc = scenarios.iter().find(|s| s.name == e.scenario).ok_or_else(|| ScenarioError::Coverage(e.claim.clone(), e.scenario.clone()))?;
        for id in &e.checks {
            if !sc.checks.iter().any(|c| &c.id == id) {
                return Err(ScenarioError::Coverage(e.claim.clone(), id.clone()));
            }
        }
    }
    Ok(())
}
