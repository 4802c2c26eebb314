use std::fmt::Write as _;

use faceqvec::quality::{Decision, QualityVector, RawScore};
use serde::Serialize;

use crate::hints::hint;

/// Version of the `assess --json` document.
pub const ASSESS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct TestEntry {
    pub id: u8,
    pub name: &'static str,
    /// `null` when the test could not be computed.
    pub raw_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub threshold: f64,
    pub decision: Decision,
}

#[derive(Debug, Serialize)]
pub struct Hint {
    pub id: u8,
    pub hint: &'static str,
}

#[derive(Debug, Serialize)]
pub struct AssessReport {
    pub schema_version: u32,
    pub image: String,
    pub tests: Vec<TestEntry>,
    /// No computable test failed; undetermined tests never flip it.
    pub overall_pass: bool,
    pub undetermined: Vec<u8>,
    pub hints: Vec<Hint>,
}

impl AssessReport {
    pub fn new(image: String, vector: &QualityVector) -> Self {
        let tests = vector
            .tests
            .iter()
            .map(|t| TestEntry {
                id: t.id,
                name: t.name,
                raw_score: t.raw.value(),
                reason: match &t.raw {
                    RawScore::NotComputable { reason } => Some(reason.clone()),
                    RawScore::Computable { .. } => None,
                },
                threshold: t.threshold,
                decision: t.decision,
            })
            .collect();
        let with = |d: Decision| vector.tests.iter().filter(move |t| t.decision == d).map(|t| t.id);
        Self {
            schema_version: ASSESS_SCHEMA_VERSION,
            image,
            tests,
            overall_pass: vector.overall_pass(),
            undetermined: with(Decision::Undetermined).collect(),
            hints: with(Decision::Fail).map(|id| Hint { id, hint: hint(id) }).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.image);
        let _ = writeln!(out, "{:>4}  {:<30} {:>7} {:>9}  Decision", "Test", "Name", "Score", "Threshold");
        for t in &self.tests {
            let score = t.raw_score.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
            let decision = match t.decision {
                Decision::Pass => "pass",
                Decision::Fail => "FAIL",
                Decision::Undetermined => "undetermined",
            };
            let _ = writeln!(out, "{:>4}  {:<30} {:>7} {:>9.3}  {decision}", t.id, t.name, score, t.threshold);
        }
        let _ = writeln!(out, "overall: {}", if self.overall_pass { "pass" } else { "fail" });
        if !self.undetermined.is_empty() {
            let ids: Vec<String> = self.undetermined.iter().map(u8::to_string).collect();
            let _ = writeln!(out, "undetermined: {}", ids.join(", "));
        }
        for h in &self.hints {
            let _ = writeln!(out, "  test {}: {}", h.id, h.hint);
        }
        out
    }
}
