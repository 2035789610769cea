//! Feature extraction and effect-size screening.
//!
//! Two encodings of a [`Scenario`] are provided: the symbolic vector
//! `(1, frame, 1[p<0.2], (R-S)/100, 1[pR>S])` whose components map onto
//! prospect-theory constructs, and the raw vector `(1, S, R, p, frame)` used
//! by the black-box baseline. Candidate features are screened by Cramér's V
//! (categorical) or η² (continuous) against per-metric thresholds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

pub const INTERCEPT: &str = "intercept";
pub const SYMBOLIC_NAMES: [&str; 5] = [INTERCEPT, "frame", "low_prob", "magnitude", "dominance"];
pub const RAW_NAMES: [&str; 5] = [INTERCEPT, "safe", "risky", "p", "frame"];

/// Probability below which an event counts as rare.
pub const LOW_PROB_CUTOFF: f64 = 0.2;
/// Payoff scale of the magnitude feature.
pub const MAGNITUDE_SCALE: f64 = 100.0;

pub const DEFAULT_TAU_V: f64 = 0.1;
pub const DEFAULT_TAU_ETA: f64 = 0.01;

/// Named predictor vector for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub includes_intercept: bool,
}

impl FeatureVector {
    fn from_parts(names: &[&str], values: [f64; 5]) -> Self {
        Self {
            names: names.iter().map(|n| n.to_string()).collect(),
            values: values.to_vec(),
            includes_intercept: names.first() == Some(&INTERCEPT),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    /// Projects onto `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<FeatureVector> {
        let values = names
            .iter()
            .map(|n| {
                self.get(n)
                    .ok_or_else(|| Error::Input(format!("feature `{n}` not available")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureVector {
            names: names.to_vec(),
            values,
            includes_intercept: names.first().map(String::as_str) == Some(INTERCEPT),
        })
    }
}

pub fn low_prob(s: &Scenario) -> f64 {
    indicator(s.p < LOW_PROB_CUTOFF)
}

pub fn magnitude(s: &Scenario) -> f64 {
    (s.risky - s.safe) / MAGNITUDE_SCALE
}

/// Expected-value dominance of the risky option, `1[pR > S]`.
pub fn dominance(s: &Scenario) -> f64 {
    indicator(s.p * s.risky > s.safe)
}

/// The sure option is always certain in the two-option design.
pub fn certainty(_s: &Scenario) -> f64 {
    1.0
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn symbolic_row(s: &Scenario) -> [f64; 5] {
    [1.0, f64::from(s.frame), low_prob(s), magnitude(s), dominance(s)]
}

pub(crate) fn raw_row(s: &Scenario) -> [f64; 5] {
    [1.0, s.safe, s.risky, s.p, f64::from(s.frame)]
}

pub fn symbolic_features(s: &Scenario) -> FeatureVector {
    FeatureVector::from_parts(&SYMBOLIC_NAMES, symbolic_row(s))
}

pub fn raw_features(s: &Scenario) -> FeatureVector {
    FeatureVector::from_parts(&RAW_NAMES, raw_row(s))
}

/// Distinct levels of a categorical column, keyed by bit pattern.
fn level_index(x: &[f64]) -> (Vec<usize>, usize) {
    let mut levels = BTreeMap::new();
    let codes = x
        .iter()
        .map(|v| {
            let key = (v + 0.0).to_bits();
            let next = levels.len();
            *levels.entry(key).or_insert(next)
        })
        .collect();
    (codes, levels.len())
}

/// Cramér's V between a categorical column and a categorical outcome, from
/// the uncorrected Pearson χ² of their contingency table.
pub fn cramers_v(x: &[f64], y: &[u8]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} feature values vs {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Input("need at least two observations".into()));
    }
    let (rows, r) = level_index(x);
    let ys: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let (cols, c) = level_index(&ys);
    if r < 2 {
        return Err(Error::UndefinedMetric("feature is constant".into()));
    }
    if c < 2 {
        return Err(Error::UndefinedMetric("outcome is constant".into()));
    }

    let mut table = vec![vec![0.0f64; c]; r];
    for (&i, &j) in rows.iter().zip(&cols) {
        table[i][j] += 1.0;
    }
    let n = x.len() as f64;
    let row_tot: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();

    let mut chi2 = 0.0;
    for i in 0..r {
        for j in 0..c {
            let expected = row_tot[i] * col_tot[j] / n;
            let d = table[i][j] - expected;
            chi2 += d * d / expected;
        }
    }
    let k = (r.min(c) - 1) as f64;
    Ok((chi2 / (n * k)).sqrt().min(1.0))
}

/// η² = SS_between / SS_total of a continuous column grouped by a binary
/// outcome.
pub fn eta_squared(x: &[f64], y: &[u8]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} feature values vs {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("feature values must be finite".into()));
    }
    let (mut sum, mut cnt) = ([0.0f64; 2], [0usize; 2]);
    for (&v, &g) in x.iter().zip(y) {
        if g > 1 {
            return Err(Error::Input(format!("label {g} is not binary")));
        }
        sum[g as usize] += v;
        cnt[g as usize] += 1;
    }
    if cnt[0] == 0 || cnt[1] == 0 {
        return Err(Error::UndefinedMetric("outcome has a single class".into()));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::UndefinedMetric("feature is constant".into()));
    }

    let n = x.len() as f64;
    let mean = (sum[0] + sum[1]) / n;
    let ss_total: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_between: f64 = (0..2)
        .map(|g| {
            let m = sum[g] / cnt[g] as f64;
            cnt[g] as f64 * (m - mean).powi(2)
        })
        .sum();
    Ok((ss_between / ss_total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    CramersV,
    EtaSquared,
}

impl From<FeatureKind> for MetricKind {
    fn from(kind: FeatureKind) -> Self {
        match kind {
            FeatureKind::Categorical => MetricKind::CramersV,
            FeatureKind::Continuous => MetricKind::EtaSquared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_v: f64,
    pub tau_eta: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_v: DEFAULT_TAU_V,
            tau_eta: DEFAULT_TAU_ETA,
        }
    }
}

impl Thresholds {
    pub fn for_metric(&self, metric: MetricKind) -> f64 {
        match metric {
            MetricKind::CramersV => self.tau_v,
            MetricKind::EtaSquared => self.tau_eta,
        }
    }
}

/// A candidate symbolic feature computed from a scenario.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub name: &'static str,
    pub kind: FeatureKind,
    pub extract: fn(&Scenario) -> f64,
}

pub fn default_candidates() -> Vec<Candidate> {
    vec![
        Candidate {
            name: "frame",
            kind: FeatureKind::Categorical,
            extract: |s| f64::from(s.frame),
        },
        Candidate {
            name: "low_prob",
            kind: FeatureKind::Categorical,
            extract: low_prob,
        },
        Candidate {
            name: "magnitude",
            kind: FeatureKind::Continuous,
            extract: magnitude,
        },
        Candidate {
            name: "dominance",
            kind: FeatureKind::Categorical,
            extract: dominance,
        },
        Candidate {
            name: "certainty",
            kind: FeatureKind::Categorical,
            extract: certainty,
        },
    ]
}

/// A materialized feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeEntry {
    pub name: String,
    pub metric: MetricKind,
    /// `None` when the effect size is undefined (constant column).
    pub value: Option<f64>,
    pub threshold: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EffectSizeReport {
    pub entries: Vec<EffectSizeEntry>,
}

impl EffectSizeReport {
    /// Retained feature names, intercept first.
    pub fn retained_features(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string())
            .chain(
                self.entries
                    .iter()
                    .filter(|e| e.retained)
                    .map(|e| e.name.clone()),
            )
            .collect()
    }

    pub fn entry(&self, name: &str) -> Option<&EffectSizeEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// One message per feature dropped for an undefined effect size.
    pub fn warnings(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.value.is_none())
            .map(|e| format!("feature `{}` is constant; effect size undefined, dropped", e.name))
            .collect()
    }
}

/// Screens precomputed columns against the outcome.
pub fn select_columns(columns: &[Column], y: &[u8], thresholds: &Thresholds) -> Result<EffectSizeReport> {
    if y.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    let mut entries = Vec::with_capacity(columns.len());
    for col in columns {
        let metric = MetricKind::from(col.kind);
        let threshold = thresholds.for_metric(metric);
        let value = match metric {
            MetricKind::CramersV => cramers_v(&col.values, y),
            MetricKind::EtaSquared => eta_squared(&col.values, y),
        };
        let value = match value {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        entries.push(EffectSizeEntry {
            name: col.name.clone(),
            metric,
            value,
            threshold,
            retained: value.is_some_and(|v| v >= threshold),
        });
    }
    Ok(EffectSizeReport { entries })
}

pub fn select_features(
    data: &[Scenario],
    candidates: &[Candidate],
    thresholds: &Thresholds,
) -> Result<EffectSizeReport> {
    if data.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    let y: Vec<u8> = data.iter().map(|s| s.choice).collect();
    let columns: Vec<Column> = candidates
        .iter()
        .map(|c| Column {
            name: c.name.to_string(),
            kind: c.kind,
            values: data.iter().map(c.extract).collect(),
        })
        .collect();
    select_columns(&columns, &y, thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scenario(safe: f64, risky: f64, p: f64, frame: i8) -> Scenario {
        Scenario {
            id: 0,
            safe,
            risky,
            p,
            frame,
            choice: 0,
        }
    }

    #[test]
    fn symbolic_vector_example() {
        let fv = symbolic_features(&scenario(50.0, 120.0, 0.15, 1));
        assert_eq!(fv.names, SYMBOLIC_NAMES);
        assert!(fv.includes_intercept);
        assert_eq!(fv.values[..3], [1.0, 1.0, 1.0]);
        assert!((fv.values[3] - 0.7).abs() < 1e-15);
        assert_eq!(fv.values[4], 0.0);
    }

    #[test]
    fn symbolic_boundaries() {
        assert_eq!(magnitude(&scenario(42.0, 42.0, 0.5, 1)), 0.0);
        assert_eq!(low_prob(&scenario(1.0, 2.0, 0.2, 1)), 0.0);
        assert_eq!(low_prob(&scenario(1.0, 2.0, 0.19999, 1)), 1.0);
        // pR == S is not dominance.
        assert_eq!(dominance(&scenario(50.0, 100.0, 0.5, 1)), 0.0);
    }

    #[test]
    fn raw_vector_passthrough() {
        let fv = raw_features(&scenario(50.0, 120.0, 0.15, -1));
        assert_eq!(fv.names, RAW_NAMES);
        assert_eq!(fv.values, vec![1.0, 50.0, 120.0, 0.15, -1.0]);
    }

    #[test]
    fn select_projects_by_name() {
        let fv = symbolic_features(&scenario(50.0, 120.0, 0.15, 1));
        let sub = fv
            .select(&["intercept".to_string(), "magnitude".to_string()])
            .unwrap();
        assert_eq!(sub.values.len(), 2);
        assert!(sub.includes_intercept);
        assert!(fv.select(&["safe".to_string()]).is_err());
    }

    #[test]
    fn cramers_v_extremes() {
        let x = [0.0, 0.0, 1.0, 1.0];
        assert!((cramers_v(&x, &[0, 0, 1, 1]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cramers_v(&x, &[0, 1, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn cramers_v_regression_value() {
        // Table: x=0 -> y (0,0,1); x=1 -> y (1,1,0). Cells [[2,1],[1,2]],
        // all expected counts 1.5, chi2 = 4 * 0.25 / 1.5 = 2/3, V = sqrt(1/9).
        let v = cramers_v(&[0.0, 0.0, 1.0, 1.0, 0.0, 1.0], &[0, 0, 1, 1, 1, 0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn cramers_v_undefined_for_constants() {
        assert!(matches!(
            cramers_v(&[1.0, 1.0, 1.0], &[0, 1, 0]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            cramers_v(&[0.0, 1.0, 1.0], &[1, 1, 1]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(cramers_v(&[0.0], &[1]), Err(Error::Input(_))));
    }

    #[test]
    fn eta_squared_examples() {
        let e = eta_squared(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]).unwrap();
        assert!((e - 0.8).abs() < 1e-12);
        assert_eq!(eta_squared(&[1.0, 3.0, 3.0, 1.0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!((eta_squared(&[2.0, 2.0, 5.0, 5.0], &[0, 0, 1, 1]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            eta_squared(&[2.0, 2.0, 2.0], &[0, 1, 1]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn selection_marks_constant_certainty_undefined() {
        let data: Vec<Scenario> = (0..40)
            .map(|i| Scenario {
                id: i,
                safe: (i * 7 % 100) as f64,
                risky: (i * 13 % 150) as f64,
                p: 0.1 + 0.02 * (i % 40) as f64,
                frame: if i % 2 == 0 { 1 } else { -1 },
                choice: (i % 3 == 0) as u8,
            })
            .collect();
        let report = select_features(&data, &default_candidates(), &Thresholds::default()).unwrap();
        let cert = report.entry("certainty").unwrap();
        assert_eq!(cert.value, None);
        assert!(!cert.retained);
        assert_eq!(report.warnings().len(), 1);
        assert_eq!(report.retained_features()[0], INTERCEPT);
        assert!(select_features(&[], &default_candidates(), &Thresholds::default()).is_err());
    }

    #[test]
    fn report_json_shape() {
        let report = EffectSizeReport {
            entries: vec![EffectSizeEntry {
                name: "certainty".into(),
                metric: MetricKind::CramersV,
                value: None,
                threshold: 0.1,
                retained: false,
            }],
        };
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"[{"name":"certainty","metric":"cramers_v","value":null,"threshold":0.1,"retained":false}]"#
        );
    }

    fn labeled(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2..max_len).prop_flat_map(|n| {
            (
                prop::collection::vec(-50.0f64..50.0, n),
                prop::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn eta_squared_affine_invariant((x, y) in labeled(40), a in 0.01f64..100.0, b in -100.0f64..100.0) {
            if let Ok(e) = eta_squared(&x, &y) {
                let t: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let e2 = eta_squared(&t, &y).unwrap();
                prop_assert!((e - e2).abs() < 1e-9);
            }
        }

        #[test]
        fn cramers_v_relabel_invariant(codes in prop::collection::vec(0u8..3, 2..60), y in prop::collection::vec(0u8..2, 60)) {
            let y = &y[..codes.len()];
            let x: Vec<f64> = codes.iter().map(|&c| f64::from(c)).collect();
            let relabeled: Vec<f64> = codes.iter().map(|&c| [7.5, -2.0, 100.0][c as usize]).collect();
            match (cramers_v(&x, y), cramers_v(&relabeled, y)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "definedness changed under relabeling"),
            }
        }
    }
}
