use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckVerdict {
    Pass,
    Fail,
    ReportOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub kind: String,
    pub verdict: CheckVerdict,
    pub max_residual: Option<f64>,
    pub details: String,
    pub seed: u64,
    /// Largest numeric value, over the cross-check points, of residuals
    /// decided symbolic-zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    /// Not serialized, so that reports are reproducible.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl PartialEq for CheckRecord {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id
            && self.kind == o.kind
            && self.verdict == o.verdict
            && self.max_residual == o.max_residual
            && self.details == o.details
            && self.seed == o.seed
            && self.cross_check == o.cross_check
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub checks: Vec<CheckRecord>,
    pub status: Status,
}

impl VerificationReport {
    pub fn new(scenario: &str, checks: Vec<CheckRecord>) -> Self {
        let ok = checks.iter().all(|c| c.verdict != CheckVerdict::Fail);
        VerificationReport { scenario: scenario.to_string(), checks, status: if ok { Status::Pass } else { Status::Fail } }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
