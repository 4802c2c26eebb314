//! ROC analysis and per-test decision thresholds.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quality::{RawScore, REGISTRY, TEST_COUNT};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_FPR: f64 = 0.5;
pub const THRESHOLD_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("score set needs at least one positive and one negative label")]
    SingleClassOnly,
    #[error("score set is empty")]
    EmptySet,
    #[error("score {0} is not a finite number")]
    InvalidScore(f64),
    #[error("no ROC point has FPR below {0}")]
    NoFeasibleThreshold(f64),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid threshold file: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scores of one test paired with binary ground truth (true = compliant).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledScoreSet {
    pub test_id: u8,
    pub entries: Vec<(f64, bool)>,
}

impl LabeledScoreSet {
    pub fn new(test_id: u8, entries: Vec<(f64, bool)>) -> Self {
        Self { test_id, entries }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.entries.iter().filter(|e| e.1).count();
        (pos, self.entries.len() - pos)
    }
}

/// `(TPR, FPR)` of the rule `score >= threshold`.
///
/// Shared by calibration and evaluation so persisted statistics reproduce exactly.
pub fn rates_at(entries: &[(f64, bool)], threshold: f64) -> (f64, f64) {
    let (mut tp, mut p, mut fp, mut n) = (0usize, 0usize, 0usize, 0usize);
    for &(s, label) in entries {
        let accept = s >= threshold;
        if label {
            p += 1;
            tp += accept as usize;
        } else {
            n += 1;
            fp += accept as usize;
        }
    }
    (ratio(tp, p), ratio(fp, n))
}

/// `num / den` as used for every rate in reports; 0 when `den` is 0.
pub fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocCurve {
    /// Ordered by threshold, descending; starts at +inf and ends at -inf.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC over midpoints between consecutive distinct scores plus ±inf sentinels.
pub fn compute_roc(set: &LabeledScoreSet) -> Result<RocCurve, CalibrationError> {
    if set.entries.is_empty() {
        return Err(CalibrationError::EmptySet);
    }
    if let Some(&(s, _)) = set.entries.iter().find(|e| !e.0.is_finite()) {
        return Err(CalibrationError::InvalidScore(s));
    }
    let (pos, neg) = set.class_counts();
    if pos == 0 || neg == 0 {
        return Err(CalibrationError::SingleClassOnly);
    }
    let mut sorted = set.entries.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut distinct: Vec<f64> = sorted.iter().map(|e| e.0).collect();
    distinct.dedup();

    let mut thresholds = Vec::with_capacity(distinct.len() + 1);
    thresholds.push(f64::INFINITY);
    thresholds.extend(distinct.windows(2).map(|w| w[0] / 2.0 + w[1] / 2.0));
    thresholds.push(f64::NEG_INFINITY);

    // Single descending sweep: `accepted` counts scores >= threshold.
    let (mut tp, mut fp, mut k) = (0usize, 0usize, 0usize);
    let points: Vec<RocPoint> = thresholds
        .into_iter()
        .map(|t| {
            while k < sorted.len() && sorted[k].0 >= t {
                if sorted[k].1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                k += 1;
            }
            RocPoint {
                threshold: t,
                tpr: ratio(tp, pos),
                fpr: ratio(fp, neg),
            }
        })
        .collect();
    let mut curve = RocCurve { points, auc: 0.0 };
    curve.auc = compute_auc(&curve);
    Ok(curve)
}

/// Trapezoidal area under the curve over the FPR axis.
pub fn compute_auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Highest TPR among points with FPR strictly below `max_fpr`; ties go to the
/// lower FPR, then to the higher threshold.
pub fn select_threshold(curve: &RocCurve, max_fpr: f64) -> Result<RocPoint, CalibrationError> {
    curve
        .points
        .iter()
        .filter(|p| p.fpr < max_fpr)
        .copied()
        .reduce(|best, p| {
            let better = p.tpr > best.tpr
                || (p.tpr == best.tpr && p.fpr < best.fpr)
                || (p.tpr == best.tpr && p.fpr == best.fpr && p.threshold > best.threshold);
            if better {
                p
            } else {
                best
            }
        })
        .ok_or(CalibrationError::NoFeasibleThreshold(max_fpr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerformanceClass {
    High,
    Medium,
    Low,
}

impl PerformanceClass {
    pub fn from_auc(auc: f64) -> Self {
        if auc >= 0.75 {
            PerformanceClass::High
        } else if auc >= 0.65 {
            PerformanceClass::Medium
        } else {
            PerformanceClass::Low
        }
    }
}

impl fmt::Display for PerformanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerformanceClass::High => "High",
            PerformanceClass::Medium => "Medium",
            PerformanceClass::Low => "Low",
        })
    }
}

pub fn classify_performance(auc: f64) -> PerformanceClass {
    PerformanceClass::from_auc(auc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Calibrated,
    Default,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdEntry {
    pub id: u8,
    pub threshold: f64,
    pub provenance: Provenance,
    /// Rates on the calibration data at `threshold`; absent for defaults.
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

/// One decision threshold per test, persisted as versioned JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub version: u32,
    pub tests: Vec<ThresholdEntry>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            version: THRESHOLD_FILE_VERSION,
            tests: REGISTRY
                .iter()
                .map(|t| ThresholdEntry {
                    id: t.id,
                    threshold: DEFAULT_THRESHOLD,
                    provenance: Provenance::Default,
                    tpr: None,
                    fpr: None,
                })
                .collect(),
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        let bad = |m: String| Err(CalibrationError::Schema(m));
        if self.version != THRESHOLD_FILE_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.tests.len() != TEST_COUNT {
            return bad(format!("expected {TEST_COUNT} entries, found {}", self.tests.len()));
        }
        for (i, e) in self.tests.iter().enumerate() {
            if e.id as usize != i + 1 {
                return bad(format!("entry {} has id {}, expected {}", i + 1, e.id, i + 1));
            }
            if !(e.threshold.is_finite() && (0.0..=1.0).contains(&e.threshold)) {
                return bad(format!("test {} threshold {} outside [0,1]", e.id, e.threshold));
            }
            for (name, v) in [("tpr", e.tpr), ("fpr", e.fpr)] {
                if let Some(v) = v {
                    if !(0.0..=1.0).contains(&v) {
                        return bad(format!("test {} {name} {v} outside [0,1]", e.id));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn threshold(&self, id: u8) -> f64 {
        self.tests
            .get((id as usize).wrapping_sub(1))
            .map_or(DEFAULT_THRESHOLD, |e| e.threshold)
    }

    pub fn entry(&self, id: u8) -> Option<&ThresholdEntry> {
        self.tests.get((id as usize).wrapping_sub(1))
    }

    pub fn from_json(text: &str) -> Result<Self, CalibrationError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CalibrationError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("thresholds serialize")
    }

    pub fn save(&self, path: &Path) -> Result<(), CalibrationError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Ground truth for one test on one image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Compliant,
    NonCompliant,
    NotAvailable,
}

impl Label {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Label::Compliant => Some(true),
            Label::NonCompliant => Some(false),
            Label::NotAvailable => None,
        }
    }
}

/// Raw scores and labels of one corpus image.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSample {
    pub image: String,
    pub scores: Vec<RawScore>,
    pub labels: Vec<Label>,
}

/// Per-test calibration summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestCalibration {
    pub id: u8,
    pub name: &'static str,
    pub n_positive: usize,
    pub n_negative: usize,
    pub auc: Option<f64>,
    pub class: Option<PerformanceClass>,
    pub entry: ThresholdEntry,
    #[serde(skip)]
    pub roc: Option<RocCurve>,
    /// Why the default threshold was kept, when it was.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationOutcome {
    pub thresholds: ThresholdConfig,
    pub tests: Vec<TestCalibration>,
}

impl CalibrationOutcome {
    /// Per-test ROC summary: counts, AUC and its class, chosen operating point.
    pub fn to_text(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
        let mut out = format!(
            "{:>4}  {:<30} {:>5} {:>5} {:>6} {:<7} {:>9} {:>6} {:>6}  {}\n",
            "Test", "Name", "N+", "N-", "AUC", "Class", "Threshold", "TPR", "FPR", "Provenance"
        );
        for t in &self.tests {
            let provenance = match t.entry.provenance {
                Provenance::Calibrated => "calibrated",
                Provenance::Default => "default",
            };
            let _ = writeln!(
                out,
                "{:>4}  {:<30} {:>5} {:>5} {:>6} {:<7} {:>9.4} {:>6} {:>6}  {}",
                t.id,
                t.name,
                t.n_positive,
                t.n_negative,
                cell(t.auc),
                t.class.map_or_else(|| "n/a".to_string(), |c| c.to_string()),
                t.entry.threshold,
                cell(t.entry.tpr),
                cell(t.entry.fpr),
                provenance
            );
        }
        out
    }
}

/// Computable, labeled scores of test `id` across the corpus.
pub fn gather(samples: &[ScoredSample], id: u8) -> LabeledScoreSet {
    let k = id as usize - 1;
    let entries = samples
        .iter()
        .filter_map(|s| Some((s.scores.get(k)?.value()?, s.labels.get(k)?.as_bool()?)))
        .collect();
    LabeledScoreSet::new(id, entries)
}

/// Calibrate every test; tests without both classes keep the default threshold.
pub fn calibrate_corpus(samples: &[ScoredSample], max_fpr: f64) -> Result<CalibrationOutcome, CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::EmptyCorpus);
    }
    let tests: Vec<TestCalibration> = REGISTRY
        .iter()
        .map(|spec| {
            let set = gather(samples, spec.id);
            let (n_positive, n_negative) = set.class_counts();
            let default_entry = ThresholdEntry {
                id: spec.id,
                threshold: DEFAULT_THRESHOLD,
                provenance: Provenance::Default,
                tpr: None,
                fpr: None,
            };
            let mut out = TestCalibration {
                id: spec.id,
                name: spec.name,
                n_positive,
                n_negative,
                auc: None,
                class: None,
                entry: default_entry,
                roc: None,
                note: None,
            };
            let roc = match compute_roc(&set) {
                Ok(roc) => roc,
                Err(e) => {
                    out.note = Some(e.to_string());
                    return out;
                }
            };
            out.auc = Some(roc.auc);
            out.class = Some(PerformanceClass::from_auc(roc.auc));
            match select_threshold(&roc, max_fpr) {
                Ok(point) => {
                    // Sentinels persist as the ends of the score range.
                    let threshold = point.threshold.clamp(0.0, 1.0);
                    let (tpr, fpr) = rates_at(&set.entries, threshold);
                    out.entry = ThresholdEntry {
                        id: spec.id,
                        threshold,
                        provenance: Provenance::Calibrated,
                        tpr: Some(tpr),
                        fpr: Some(fpr),
                    };
                }
                Err(e) => out.note = Some(e.to_string()),
            }
            out.roc = Some(roc);
            out
        })
        .collect();
    let thresholds = ThresholdConfig {
        version: THRESHOLD_FILE_VERSION,
        tests: tests.iter().map(|t| t.entry.clone()).collect(),
    };
    Ok(CalibrationOutcome { thresholds, tests })
}
