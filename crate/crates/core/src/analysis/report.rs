use serde::{Deserialize, Serialize};

/// One checked case: an observed quantity against a bound or threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub label: String,
    pub observed: f64,
    pub bound: f64,
    /// `bound − observed`; negative means the case failed.
    pub margin: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl CaseResult {
    /// `observed ≤ bound`.
    pub fn upper(label: impl Into<String>, observed: f64, bound: f64) -> Self {
        let margin = bound - observed;
        Self {
            label: label.into(),
            observed,
            bound,
            margin,
            pass: margin >= 0.0 && observed.is_finite(),
            extra: serde_json::Value::Null,
        }
    }

    /// `observed ≥ bound`.
    pub fn lower(label: impl Into<String>, observed: f64, bound: f64) -> Self {
        let margin = observed - bound;
        Self {
            label: label.into(),
            observed,
            bound,
            margin,
            pass: margin >= 0.0,
            extra: serde_json::Value::Null,
        }
    }

    /// `lo ≤ observed ≤ hi`; the margin is the distance to the nearer end.
    pub fn within(label: impl Into<String>, observed: f64, lo: f64, hi: f64) -> Self {
        let margin = (observed - lo).min(hi - observed);
        Self {
            label: label.into(),
            observed,
            bound: if observed > hi { hi } else { lo },
            margin,
            pass: margin >= 0.0,
            extra: serde_json::Value::Null,
        }
    }

    pub fn with_extra(mut self, extra: serde_json::Value) -> Self {
        self.extra = extra;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub cases_run: usize,
    pub worst_margin: f64,
    pub pass: bool,
    /// Non-asserted observations.
    #[serde(default)]
    pub notes: Vec<String>,
    pub cases: Vec<CaseResult>,
}

impl VerificationReport {
    pub fn from_cases(suite: impl Into<String>, cases: Vec<CaseResult>) -> Self {
        let worst_margin = cases.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
        Self {
            suite: suite.into(),
            cases_run: cases.len(),
            worst_margin,
            pass: !cases.is_empty() && cases.iter().all(|c| c.pass),
            notes: Vec::new(),
            cases,
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.pass)
    }
}
