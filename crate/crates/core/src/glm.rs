//! Binary logistic regression by Newton/IRLS.
//!
//! Maximizes `Σ y ln σ(xᵀβ) + (1-y) ln(1-σ(xᵀβ)) - (l2/2)‖β̃‖²`, where `β̃`
//! is β with the intercept zeroed. Steps are halved until the penalized
//! objective does not decrease. The covariance is the inverse of the negative
//! penalized Hessian at the optimum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, INTERCEPT};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 40;
const ROUNDING_SLACK: f64 = 1e-13;
/// Linear predictor beyond which σ is 0 or 1 in double precision.
const SATURATION: f64 = 35.0;

/// Logistic function, split by sign so `exp` never overflows.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(z)` without cancellation or overflow.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of label `y` given linear predictor `z`.
pub(crate) fn bernoulli_log_lik(z: f64, y: u8) -> f64 {
    if y == 1 {
        log_sigmoid(z)
    } else {
        log_sigmoid(-z)
    }
}

fn check_shapes(coeffs: &DVector<f64>, x: &DMatrix<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Input(format!(
            "design has {} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != coeffs.len() {
        return Err(Error::Input(format!(
            "design has {} columns but {} coefficients",
            x.ncols(),
            coeffs.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Input(format!("label {bad} is not binary")));
    }
    Ok(())
}

pub fn log_likelihood(coeffs: &DVector<f64>, x: &DMatrix<f64>, y: &[u8]) -> Result<f64> {
    check_shapes(coeffs, x, y)?;
    let z = x * coeffs;
    Ok(z.iter().zip(y).map(|(&z, &y)| bernoulli_log_lik(z, y)).sum())
}

fn penalty_mask(len: usize, intercept: Option<usize>) -> DVector<f64> {
    DVector::from_fn(len, |i, _| if Some(i) == intercept { 0.0 } else { 1.0 })
}

/// Penalized objective `ℓ(β) - (l2/2)‖β̃‖²`.
fn objective(coeffs: &DVector<f64>, x: &DMatrix<f64>, y: &[u8], l2: f64, mask: &DVector<f64>) -> f64 {
    let z = x * coeffs;
    let ll: f64 = z.iter().zip(y).map(|(&z, &y)| bernoulli_log_lik(z, y)).sum();
    ll - 0.5 * l2 * coeffs.component_mul(mask).norm_squared()
}

/// Analytic gradient `Xᵀ(y - σ(Xβ)) - l2·β̃` and Hessian `-XᵀWX - l2·Ĩ` of the
/// penalized log-likelihood. `intercept` names the unpenalized column.
pub fn gradient_and_hessian(
    coeffs: &DVector<f64>,
    x: &DMatrix<f64>,
    y: &[u8],
    l2: f64,
    intercept: Option<usize>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_shapes(coeffs, x, y)?;
    let k = coeffs.len();
    let mask = penalty_mask(k, intercept);
    let z = x * coeffs;
    let mut resid = DVector::zeros(y.len());
    let mut weights = DVector::zeros(y.len());
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let p = sigmoid(zi);
        resid[i] = f64::from(yi) - p;
        weights[i] = p * (1.0 - p);
    }
    let grad = x.tr_mul(&resid) - coeffs.component_mul(&mask) * l2;

    let mut weighted = x.clone();
    for (mut row, w) in weighted.row_iter_mut().zip(weights.iter()) {
        row *= *w;
    }
    let mut hess = -(x.tr_mul(&weighted));
    for i in 0..k {
        hess[(i, i)] -= l2 * mask[i];
    }
    // Symmetrize against rounding in the product.
    let hess = (&hess + hess.transpose()) * 0.5;
    Ok((grad, hess))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fit on z-scored non-intercept columns and map the estimates back.
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            standardize: false,
        }
    }
}

/// A fitted logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLogistic {
    #[serde(rename = "features")]
    pub feature_names: Vec<String>,
    pub coeffs: Vec<f64>,
    /// NaN entries (serialized as `null`) mark undefined values.
    #[serde(deserialize_with = "nullable::vec")]
    pub std_errors: Vec<f64>,
    #[serde(deserialize_with = "nullable::matrix")]
    pub covariance: Vec<Vec<f64>>,
    /// Unpenalized log-likelihood at the returned coefficients.
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(rename = "l2")]
    pub l2_strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FittedLogistic {
    pub fn coeff(&self, name: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coeffs[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.std_errors[i])
    }

    pub fn linear_predictor(&self, x: &FeatureVector) -> Result<f64> {
        if x.names != self.feature_names {
            return Err(Error::Input(format!(
                "feature mismatch: model expects {:?}, got {:?}",
                self.feature_names, x.names
            )));
        }
        Ok(self.coeffs.iter().zip(&x.values).map(|(b, v)| b * v).sum())
    }
}

mod nullable {
    use serde::{Deserialize, Deserializer};

    pub fn vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
    }

    pub fn matrix<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let raw = Vec::<Vec<Option<f64>>>::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
            .collect())
    }
}

pub fn predict_prob(model: &FittedLogistic, x: &FeatureVector) -> Result<f64> {
    model.linear_predictor(x).map(sigmoid)
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// True when every row is fitted to within numerical saturation on the
/// correct side, which only happens when the classes are (quasi-)separable.
fn looks_separated(z: &DVector<f64>, y: &[u8]) -> bool {
    let mut saturated = false;
    for (&zi, &yi) in z.iter().zip(y) {
        let correct = (zi > 0.0) == (yi == 1);
        if zi.abs() > SATURATION {
            if !correct {
                return false;
            }
            saturated = true;
        }
    }
    let all_fit = z
        .iter()
        .zip(y)
        .all(|(&zi, &yi)| (f64::from(yi) - sigmoid(zi)).abs() < 1e-6);
    saturated || all_fit
}

struct Scaling {
    /// Maps standardized coefficients to the original parameterization.
    to_original: DMatrix<f64>,
}

fn standardize(x: &DMatrix<f64>, intercept: Option<usize>) -> (DMatrix<f64>, Scaling) {
    let (n, k) = x.shape();
    let mut xs = x.clone();
    let mut a = DMatrix::identity(k, k);
    for j in 0..k {
        if Some(j) == intercept {
            continue;
        }
        let col = x.column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        if sd == 0.0 {
            continue;
        }
        let shift = if intercept.is_some() { mean } else { 0.0 };
        for i in 0..n {
            xs[(i, j)] = (x[(i, j)] - shift) / sd;
        }
        a[(j, j)] = 1.0 / sd;
        if let Some(c) = intercept {
            a[(c, j)] = -shift / sd;
        }
    }
    (xs, Scaling { to_original: a })
}

/// Fits a logistic model on the design `x` with column labels `names`.
///
/// The column named `intercept`, if any, is not penalized. Complete or
/// quasi-complete separation with `l2 = 0` yields a non-converged fit whose
/// `diagnostic` reports possible separation.
pub fn fit_logistic(
    x: &DMatrix<f64>,
    y: &[u8],
    names: &[String],
    l2: f64,
    options: &FitOptions,
) -> Result<FittedLogistic> {
    let (n, k) = x.shape();
    if names.len() != k {
        return Err(Error::Input(format!("{} names for {k} columns", names.len())));
    }
    if n < k {
        return Err(Error::Input(format!("{n} rows cannot identify {k} coefficients")));
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Config(format!("l2 strength must be finite and >= 0, got {l2}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("design matrix contains non-finite values".into()));
    }
    let intercept = names.iter().position(|n| n == INTERCEPT);
    let (design, scaling) = if options.standardize {
        let (xs, s) = standardize(x, intercept);
        (xs, Some(s))
    } else {
        (x.clone(), None)
    };
    let mask = penalty_mask(k, intercept);

    let mut beta = DVector::zeros(k);
    check_shapes(&beta, &design, y)?;
    let mut obj = objective(&beta, &design, y, l2, &mask);
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;
    let (mut grad, mut hess) = gradient_and_hessian(&beta, &design, y, l2, intercept)?;

    loop {
        if grad.amax() < options.tol {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let info = -&hess;
        let step = match info.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                if l2 == 0.0 && looks_separated(&(&design * &beta), y) {
                    diagnostic = Some("possible separation: coefficients diverging".into());
                    break;
                }
                return Err(Error::Numerical(format!(
                    "singular Hessian (condition number {:.3e})",
                    condition_number(&info)
                )));
            }
        };

        // Predicted ascent below rounding noise: the objective cannot rank
        // the candidates, so take the full Newton step.
        let predicted_gain = 0.5 * grad.dot(&step);
        if predicted_gain <= ROUNDING_SLACK * obj.abs().max(1.0) {
            beta += &step;
            obj = objective(&beta, &design, y, l2, &mask);
            (grad, hess) = gradient_and_hessian(&beta, &design, y, l2, intercept)?;
            continue;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &step * t;
            let cand_obj = objective(&cand, &design, y, l2, &mask);
            if cand_obj >= obj {
                accepted = Some((cand, cand_obj));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_obj)) = accepted else {
            // No ascent along the Newton direction; gradient test decides.
            break;
        };
        beta = next;
        obj = next_obj;
        (grad, hess) = gradient_and_hessian(&beta, &design, y, l2, intercept)?;

        if l2 == 0.0 && looks_separated(&(&design * &beta), y) {
            diagnostic = Some("possible separation: coefficients diverging".into());
            converged = false;
            break;
        }
    }

    let info = -&hess;
    let mut cov = match info.clone().try_inverse() {
        Some(inv) => inv,
        // Diverged fits keep their coefficients; the covariance is undefined.
        None if diagnostic.is_some() => DMatrix::from_element(k, k, f64::NAN),
        None => {
            return Err(Error::Numerical(format!(
                "information matrix not invertible (condition number {:.3e})",
                condition_number(&info)
            )))
        }
    };
    if let Some(s) = &scaling {
        beta = &s.to_original * &beta;
        cov = &s.to_original * cov * s.to_original.transpose();
    }
    let cov = (&cov + cov.transpose()) * 0.5;
    let log_likelihood = log_likelihood(&beta, x, y)?;

    Ok(FittedLogistic {
        feature_names: names.to_vec(),
        coeffs: beta.iter().copied().collect(),
        std_errors: (0..k)
            .map(|i| if cov[(i, i)].is_nan() { f64::NAN } else { cov[(i, i)].max(0.0).sqrt() })
            .collect(),
        covariance: (0..k).map(|i| cov.row(i).iter().copied().collect()).collect(),
        log_likelihood,
        converged,
        iterations,
        l2_strength: l2,
        diagnostic,
    })
}
