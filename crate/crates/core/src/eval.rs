//! Train/test splitting and classification metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_FRAC: f64 = 0.8;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Seeded shuffle followed by a prefix/suffix split with
/// `round(train_frac · n)` training rows.
pub fn split<T: Clone>(data: &[T], train_frac: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if data.is_empty() {
        return Err(Error::Input("cannot split an empty dataset".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!("train_frac must be in (0, 1), got {train_frac}")));
    }
    let n_train = (train_frac * data.len() as f64).round() as usize;
    if n_train == 0 || n_train == data.len() {
        return Err(Error::Input(format!(
            "train_frac {train_frac} leaves an empty side for n = {}",
            data.len()
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train].iter().map(|&i| data[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, test))
}

/// Fraction of rows where `prob ≥ threshold` agrees with the label.
pub fn accuracy(probs: &[f64], y: &[u8], threshold: f64) -> Result<f64> {
    if probs.len() != y.len() {
        return Err(Error::Input(format!("{} scores vs {} labels", probs.len(), y.len())));
    }
    if probs.is_empty() {
        return Err(Error::Input("accuracy of an empty set".into()));
    }
    let hits = probs
        .iter()
        .zip(y)
        .filter(|(&p, &label)| (p >= threshold) == (label == 1))
        .count();
    Ok(hits as f64 / probs.len() as f64)
}

/// Mann-Whitney AUC with midranks for tied scores.
pub fn auc(scores: &[f64], y: &[u8]) -> Result<f64> {
    if scores.len() != y.len() {
        return Err(Error::Input(format!("{} scores vs {} labels", scores.len(), y.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Input("scores contain NaN".into()));
    }
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share their mean.
        let midrank = (i + 1 + j) as f64 / 2.0;
        let positives = order[i..j].iter().filter(|&&k| y[k] == 1).count();
        pos_rank_sum += midrank * positives as f64;
        i = j;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Static interpretability rating of a model family (not computed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpretability {
    High,
    Low,
    Moderate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub model_name: String,
    pub accuracy: f64,
    /// `None` when the test slice has a single class.
    pub auc: Option<f64>,
    pub n_test: usize,
    pub interpretability_label: Interpretability,
}

impl EvalMetrics {
    pub fn compute(
        model_name: &str,
        interpretability_label: Interpretability,
        probs: &[f64],
        y: &[u8],
    ) -> Result<Self> {
        let auc = match auc(probs, y) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            model_name: model_name.to_string(),
            accuracy: accuracy(probs, y, DEFAULT_THRESHOLD)?,
            auc,
            n_test: y.len(),
            interpretability_label,
        })
    }
}
