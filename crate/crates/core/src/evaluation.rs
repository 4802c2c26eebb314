//! Per-test accuracy, TPR and FPR of frozen thresholds on a labeled corpus,
//! plus label-balance diagnostics.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use crate::calibration::Label;
use crate::calibration::ratio;
use crate::quality::{Decision, REGISTRY, TEST_COUNT};

/// Share of negatives below which a test's labels count as underrepresented.
pub const UNDERREPRESENTED_SHARE: f64 = 0.05;
/// Default tolerance of the accuracy consistency check (two-decimal rounding of three inputs).
pub const CONSISTENCY_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("label file schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Label {
    pub fn parse(text: &str) -> Option<Label> {
        match text.trim() {
            "1" => Some(Label::Compliant),
            "0" => Some(Label::NonCompliant),
            "NA" => Some(Label::NotAvailable),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Compliant => "1",
            Label::NonCompliant => "0",
            Label::NotAvailable => "NA",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRow {
    /// Path relative to the corpus directory.
    pub image: String,
    pub labels: Vec<Label>,
}

/// Ground-truth CSV: header `image,t1,...,t25`, values `0|1|NA`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub rows: Vec<LabelRow>,
}

pub fn label_header() -> Vec<String> {
    std::iter::once("image".to_string())
        .chain((1..=TEST_COUNT).map(|i| format!("t{i}")))
        .collect()
}

impl LabelTable {
    pub fn parse(reader: impl Read) -> Result<Self, EvaluationError> {
        let mismatch = |m: String| EvaluationError::SchemaMismatch(m);
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| mismatch(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header != label_header() {
            return Err(mismatch(format!("header must be image,t1,...,t{TEST_COUNT}; got {}", header.join(","))));
        }
        let mut rows = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, record) in rdr.records().enumerate() {
            let line = n + 2;
            let record = record.map_err(|e| mismatch(format!("line {line}: {e}")))?;
            let image = record[0].trim().to_string();
            if image.is_empty() {
                return Err(mismatch(format!("line {line}: empty image path")));
            }
            if !seen.insert(image.clone()) {
                return Err(mismatch(format!("line {line}: duplicate image {image}")));
            }
            let labels = record
                .iter()
                .skip(1)
                .map(|v| Label::parse(v).ok_or_else(|| mismatch(format!("line {line}: label {v:?} is not 0, 1 or NA"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(LabelRow { image, labels });
        }
        Ok(Self { rows })
    }

    pub fn load(path: &Path) -> Result<Self, EvaluationError> {
        Self::parse(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = label_header().join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.image);
            for l in &row.labels {
                out.push(',');
                out.push_str(l.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), EvaluationError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Decisions of one image next to its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOutcome {
    pub image: String,
    pub decisions: Vec<Decision>,
    pub labels: Vec<Label>,
}

/// Confusion counts of one test; merging is associative and commutative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub not_computable: usize,
    pub unlabeled: usize,
}

impl Tally {
    pub fn record(&mut self, decision: Decision, label: Label) {
        match (label.as_bool(), decision) {
            (None, _) => self.unlabeled += 1,
            (Some(_), Decision::Undetermined) => self.not_computable += 1,
            (Some(true), Decision::Pass) => self.tp += 1,
            (Some(true), Decision::Fail) => self.fn_ += 1,
            (Some(false), Decision::Pass) => self.fp += 1,
            (Some(false), Decision::Fail) => self.tn += 1,
        }
    }

    pub fn merge(self, o: Tally) -> Tally {
        Tally {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            not_computable: self.not_computable + o.not_computable,
            unlabeled: self.unlabeled + o.unlabeled,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_ + self.not_computable + self.unlabeled
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestPerformance {
    pub id: u8,
    pub name: &'static str,
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_not_computable: usize,
    pub n_unlabeled: usize,
    pub tally: Tally,
}

impl TestPerformance {
    fn from_tally(id: u8, name: &'static str, t: Tally) -> Self {
        let n_positive = t.tp + t.fn_;
        let n_negative = t.fp + t.tn;
        let decided = n_positive + n_negative;
        Self {
            id,
            name,
            accuracy: (decided > 0).then(|| ratio(t.tp + t.tn, decided)),
            tpr: (n_positive > 0).then(|| ratio(t.tp, n_positive)),
            fpr: (n_negative > 0).then(|| ratio(t.fp, n_negative)),
            n_positive,
            n_negative,
            n_not_computable: t.not_computable,
            n_unlabeled: t.unlabeled,
            tally: t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusMeta {
    pub name: String,
    pub size: usize,
    pub date: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub corpus: CorpusMeta,
    pub tests: Vec<TestPerformance>,
}

/// Tally every test over the corpus. `meta.size` is overwritten with the outcome count.
pub fn evaluate(outcomes: &[LabeledOutcome], mut meta: CorpusMeta) -> Result<PerformanceReport, EvaluationError> {
    if outcomes.is_empty() {
        return Err(EvaluationError::EmptyCorpus);
    }
    let mut tallies = [Tally::default(); TEST_COUNT];
    for o in outcomes {
        if o.decisions.len() != TEST_COUNT || o.labels.len() != TEST_COUNT {
            return Err(EvaluationError::SchemaMismatch(format!("{}: expected {TEST_COUNT} entries", o.image)));
        }
        for (k, tally) in tallies.iter_mut().enumerate() {
            tally.record(o.decisions[k], o.labels[k]);
        }
    }
    meta.size = outcomes.len();
    let tests = REGISTRY
        .iter()
        .zip(tallies)
        .map(|(spec, t)| TestPerformance::from_tally(spec.id, spec.name, t))
        .collect();
    Ok(PerformanceReport { corpus: meta, tests })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

impl PerformanceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "corpus: {}  images: {}  date: {}\n",
            self.corpus.name, self.corpus.size, self.corpus.date
        );
        let _ = writeln!(
            out,
            "{:>4}  {:<30} {:>8} {:>6} {:>6} {:>6} {:>6} {:>6}",
            "Test", "Name", "Accuracy", "TPR", "FPR", "N+", "N-", "NC"
        );
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{:>4}  {:<30} {:>8} {:>6} {:>6} {:>6} {:>6} {:>6}",
                t.id,
                t.name,
                cell(t.accuracy),
                cell(t.tpr),
                cell(t.fpr),
                t.n_positive,
                t.n_negative,
                t.n_not_computable
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BalanceEntry {
    pub id: u8,
    pub name: &'static str,
    pub positives: usize,
    pub negatives: usize,
    pub not_available: usize,
    pub underrepresented: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabelBalance {
    pub tests: Vec<BalanceEntry>,
}

/// True when negatives make up less than 5% of the labeled images.
pub fn underrepresented(positives: usize, negatives: usize) -> bool {
    (negatives as f64) < UNDERREPRESENTED_SHARE * (positives + negatives) as f64
}

pub fn balance_report(labels: &LabelTable) -> LabelBalance {
    let tests = REGISTRY
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let (mut positives, mut negatives, mut not_available) = (0, 0, 0);
            for row in &labels.rows {
                match row.labels.get(k) {
                    Some(Label::Compliant) => positives += 1,
                    Some(Label::NonCompliant) => negatives += 1,
                    _ => not_available += 1,
                }
            }
            BalanceEntry {
                id: spec.id,
                name: spec.name,
                positives,
                negatives,
                not_available,
                underrepresented: underrepresented(positives, negatives),
            }
        })
        .collect();
    LabelBalance { tests }
}

impl LabelBalance {
    pub fn to_text(&self) -> String {
        let mut out = format!("{:>4}  {:<30} {:>6} {:>6} {:>6}  {}\n", "Test", "Name", "Pos", "Neg", "NA", "Flag");
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{:>4}  {:<30} {:>6} {:>6} {:>6}  {}",
                t.id,
                t.name,
                t.positives,
                t.negatives,
                t.not_available,
                if t.underrepresented { "underrepresented" } else { "" }
            );
        }
        out
    }
}

/// A published (possibly rounded) performance row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportedRow {
    pub id: u8,
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl ReportedRow {
    /// Accuracy implied by the rates and the class balance.
    pub fn implied_accuracy(&self) -> f64 {
        let (p, n) = (self.n_positive as f64, self.n_negative as f64);
        (self.tpr * p + (1.0 - self.fpr) * n) / (p + n)
    }
}

/// Ids of rows whose accuracy disagrees with their own TPR, FPR and balance.
pub fn check_consistency(rows: &[ReportedRow], tolerance: f64) -> Vec<u8> {
    rows.iter()
        .filter(|r| r.n_positive + r.n_negative > 0)
        .filter(|r| (r.accuracy - r.implied_accuracy()).abs() > tolerance)
        .map(|r| r.id)
        .collect()
}

impl From<&TestPerformance> for Option<ReportedRow> {
    fn from(t: &TestPerformance) -> Self {
        Some(ReportedRow {
            id: t.id,
            accuracy: t.accuracy?,
            tpr: t.tpr.unwrap_or(0.0),
            fpr: t.fpr.unwrap_or(0.0),
            n_positive: t.n_positive,
            n_negative: t.n_negative,
        })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn outcome(image: &str, k: usize, d: Decision, l: Label) -> LabeledOutcome {
        let mut decisions = vec![Decision::Pass; TEST_COUNT];
        let mut labels = vec![Label::Compliant; TEST_COUNT];
        decisions[k] = d;
        labels[k] = l;
        LabeledOutcome { image: image.into(), decisions, labels }
    }

    fn meta() -> CorpusMeta {
        CorpusMeta { name: "unit".into(), size: 0, date: "2026-01-01".into() }
    }

    #[test]
    fn hand_counted_four_images() {
        use Decision::*;
        use Label::*;
        let rows = [(Pass, Compliant), (Pass, NonCompliant), (Fail, NonCompliant), (Fail, NonCompliant)];
        let outs: Vec<_> = rows.iter().enumerate().map(|(i, &(d, l))| outcome(&format!("{i}"), 4, d, l)).collect();
        let r = evaluate(&outs, meta()).unwrap();
        let t = &r.tests[4];
        assert_eq!(t.accuracy, Some(0.75));
        assert_eq!(t.tpr, Some(1.0));
        assert_eq!(t.fpr, Some(1.0 / 3.0));
        assert_eq!(r.corpus.size, 4);
        assert!(r.to_text().contains("0.33"));
    }

    #[test]
    fn perfect_agreement_and_exclusions() {
        let outs = vec![
            outcome("a", 0, Decision::Pass, Label::Compliant),
            outcome("b", 0, Decision::Fail, Label::NonCompliant),
            outcome("c", 0, Decision::Undetermined, Label::NonCompliant),
            outcome("d", 0, Decision::Fail, Label::NotAvailable),
        ];
        let r = evaluate(&outs, meta()).unwrap();
        let t = &r.tests[0];
        assert_eq!(t.accuracy, Some(1.0));
        assert_eq!((t.n_not_computable, t.n_unlabeled), (1, 1));
        assert_eq!(t.tally.total(), 4);
        // Test 2 saw only positives: FPR unavailable.
        assert_eq!(r.tests[1].fpr, None);
        assert!(matches!(evaluate(&[], meta()), Err(EvaluationError::EmptyCorpus)));
    }

    #[test]
    fn label_csv_round_trip_and_schema_errors() {
        let table = LabelTable {
            rows: vec![
                LabelRow { image: "images/a.png".into(), labels: vec![Label::Compliant; TEST_COUNT] },
                LabelRow { image: "images/b.png".into(), labels: vec![Label::NotAvailable; TEST_COUNT] },
            ],
        };
        let csv = table.to_csv();
        assert!(csv.starts_with("image,t1,t2,"));
        assert_eq!(LabelTable::parse(csv.as_bytes()).unwrap(), table);
        let bad_header = csv.replacen("t25", "t26", 1);
        assert!(matches!(LabelTable::parse(bad_header.as_bytes()), Err(EvaluationError::SchemaMismatch(_))));
        let bad_value = csv.replacen(",NA", ",maybe", 1);
        assert!(LabelTable::parse(bad_value.as_bytes()).is_err());
        let short = format!("{}\nx.png,1,0\n", label_header().join(","));
        assert!(LabelTable::parse(short.as_bytes()).is_err());
        let dup = format!("{csv}images/a.png{}\n", ",1".repeat(TEST_COUNT));
        assert!(LabelTable::parse(dup.as_bytes()).is_err());
    }

    #[test]
    fn balance_flags() {
        assert!(underrepresented(1031, 31));
        assert!(underrepresented(50, 0));
        assert!(!underrepresented(50, 50));
        let rows = (0..100)
            .map(|i| LabelRow {
                image: format!("{i}.png"),
                labels: (0..TEST_COUNT)
                    .map(|k| match (k, i % 2) {
                        (0, _) => Label::Compliant,
                        (_, 0) => Label::Compliant,
                        _ => Label::NonCompliant,
                    })
                    .collect(),
            })
            .collect();
        let b = balance_report(&LabelTable { rows });
        assert!(b.tests[0].underrepresented);
        assert!(b.tests[1..].iter().all(|t| !t.underrepresented));
    }

    #[test]
    fn consistency_check_flags_impossible_rows() {
        let bad = ReportedRow { id: 10, accuracy: 0.93, tpr: 0.0, fpr: 1.0, n_positive: 332, n_negative: 22 };
        let good = ReportedRow { id: 1, accuracy: 0.9, tpr: 0.95, fpr: 0.2, n_positive: 80, n_negative: 20 };
        assert_eq!(good.implied_accuracy(), 0.92);
        assert_eq!(check_consistency(&[bad, good], 0.03), vec![10]);
    }

    fn arb_outcomes() -> impl Strategy<Value = Vec<LabeledOutcome>> {
        let d = prop_oneof![Just(Decision::Pass), Just(Decision::Fail), Just(Decision::Undetermined)];
        let l = prop_oneof![Just(Label::Compliant), Just(Label::NonCompliant), Just(Label::NotAvailable)];
        proptest::collection::vec(
            (proptest::collection::vec(d, TEST_COUNT), proptest::collection::vec(l, TEST_COUNT)),
            1..40,
        )
        .prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (decisions, labels))| LabeledOutcome { image: i.to_string(), decisions, labels })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn conservation_and_merge_order(outs in arb_outcomes()) {
            let r = evaluate(&outs, meta()).unwrap();
            for t in &r.tests {
                prop_assert_eq!(t.tally.total(), outs.len());
                if let Some(a) = t.accuracy {
                    prop_assert!((0.0..=1.0).contains(&a));
                }
                if let Some(row) = Option::<ReportedRow>::from(t) {
                    prop_assert!(check_consistency(&[row], 1e-9).is_empty());
                }
            }
            let mut rev = outs.clone();
            rev.reverse();
            prop_assert_eq!(evaluate(&rev, meta()).unwrap(), r);
        }
    }
}
