//! Parametric CPT baseline for a sure payoff versus a one-outcome gamble.
//!
//! Value function `v(x) = x^α` for gains and `-λ(-x)^β` for losses, Prelec
//! weighting `w(p) = exp(-(-ln p)^γ)`, and choice probability
//! `σ(η [w(p) v(R) - v(S)])`. Estimation maximizes the Bernoulli
//! log-likelihood with Nelder-Mead in an unconstrained reparameterization
//! from several random starts; standard errors come from a finite-difference
//! observed information matrix.

pub mod simplex;

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{bernoulli_log_lik, sigmoid};
use crate::scenario::Scenario;

pub const PARAM_NAMES: [&str; 5] = ["alpha", "beta", "lambda", "gamma", "eta"];
pub const DEFAULT_RESTARTS: usize = 20;
pub const DEFAULT_GAMMA_MAX: f64 = 5.0;
pub const DEFAULT_MAX_ITER: usize = 2000;
pub const DEFAULT_SIMPLEX_TOL: f64 = 1e-8;
/// Relative step of the finite-difference information matrix.
pub const FISHER_STEP: f64 = 1e-4;
/// Transformed coordinates are clamped to this magnitude before mapping.
const COORD_LIMIT: f64 = 50.0;
const INITIAL_STEP: f64 = 0.5;
/// Extra simplex runs from the incumbent once a run has converged.
const MAX_POLISH_RUNS: usize = 5;
const AT_BOUND_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CptParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl CptParams {
    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            eta: 1.0,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.alpha, self.beta, self.lambda, self.gamma, self.eta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            alpha: a[0],
            beta: a[1],
            lambda: a[2],
            gamma: a[3],
            eta: a[4],
        }
    }

    /// Checks `α, β ∈ (0, 1]`, `γ ∈ (0, gamma_max]`, `λ, η > 0`, all finite.
    pub fn validate(&self, gamma_max: f64) -> Result<()> {
        let ok = self.to_array().iter().all(|v| v.is_finite())
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.beta > 0.0
            && self.beta <= 1.0
            && self.lambda > 0.0
            && self.gamma > 0.0
            && self.gamma <= gamma_max
            && self.eta > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("parameters out of bounds: {self:?}")))
        }
    }
}

pub fn value(x: f64, params: &CptParams) -> f64 {
    if x >= 0.0 {
        x.powf(params.alpha)
    } else {
        -params.lambda * (-x).powf(params.beta)
    }
}

pub fn weight(p: f64, params: &CptParams) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1]")));
    }
    Ok((-(-p.ln()).powf(params.gamma)).exp())
}

/// `w(p) v(R) - v(S)`.
fn utility_gap(s: &Scenario, params: &CptParams) -> Result<f64> {
    Ok(weight(s.p, params)? * value(s.risky, params) - value(s.safe, params))
}

/// Probability of choosing the risky option.
pub fn choice_prob(s: &Scenario, params: &CptParams) -> Result<f64> {
    Ok(sigmoid(params.eta * utility_gap(s, params)?))
}

/// Unchecked log-likelihood; the finite-difference Hessian steps slightly
/// past the box at the α = 1 boundary.
fn log_lik_raw(theta: &[f64; 5], data: &[Scenario]) -> f64 {
    let params = CptParams::from_array(*theta);
    data.iter()
        .map(|s| {
            let w = (-(-s.p.ln()).powf(params.gamma)).exp();
            let gap = w * value(s.risky, &params) - value(s.safe, &params);
            bernoulli_log_lik(params.eta * gap, s.choice)
        })
        .sum()
}

pub fn cpt_log_likelihood(params: &CptParams, data: &[Scenario]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    params.validate(f64::INFINITY)?;
    if let Some(s) = data.iter().find(|s| !(s.p > 0.0 && s.p < 1.0)) {
        return Err(Error::Domain(format!("scenario {} has p = {}", s.id, s.p)));
    }
    Ok(log_lik_raw(&params.to_array(), data))
}

/// Bijection between the constraint box and R⁵: logit for α, β and γ/γ_max,
/// log for λ and η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reparam {
    pub gamma_max: f64,
}

fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

impl Reparam {
    pub fn to_params(&self, t: &[f64]) -> CptParams {
        let c = |v: f64| v.clamp(-COORD_LIMIT, COORD_LIMIT);
        CptParams {
            alpha: sigmoid(c(t[0])),
            beta: sigmoid(c(t[1])),
            lambda: c(t[2]).exp(),
            gamma: self.gamma_max * sigmoid(c(t[3])),
            eta: c(t[4]).exp(),
        }
    }

    /// Inverse map; values on a closed upper bound map to the clamp limit.
    pub fn to_coords(&self, p: &CptParams) -> [f64; 5] {
        let c = |v: f64| v.clamp(-COORD_LIMIT, COORD_LIMIT);
        [
            c(logit(p.alpha)),
            c(logit(p.beta)),
            c(p.lambda.ln()),
            c(logit(p.gamma / self.gamma_max)),
            c(p.eta.ln()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CptOptions {
    pub n_restarts: usize,
    pub rng_seed: u64,
    pub gamma_max: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for CptOptions {
    fn default() -> Self {
        Self {
            n_restarts: DEFAULT_RESTARTS,
            rng_seed: 0,
            gamma_max: DEFAULT_GAMMA_MAX,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_SIMPLEX_TOL,
        }
    }
}

/// Per-restart outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    /// Base seed; restart `index` draws from ChaCha8 stream `index`.
    pub seed: u64,
    pub start: CptParams,
    #[serde(rename = "final")]
    pub final_params: CptParams,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub visited: usize,
    pub out_of_bounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptFit {
    #[serde(flatten)]
    pub params: CptParams,
    /// Order of [`PARAM_NAMES`]; `None` where the information matrix gives
    /// no standard error.
    pub std_errors: [Option<f64>; 5],
    /// Parameters with zero observed information on this dataset.
    pub unidentified: Vec<String>,
    /// Estimates on a closed upper bound; excluded from the information
    /// inversion.
    pub at_bound: Vec<String>,
    pub information_invertible: bool,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub gamma_max: f64,
    #[serde(rename = "restarts")]
    pub restart_log: Vec<RestartRecord>,
}

impl CptFit {
    pub fn std_error(&self, name: &str) -> Option<f64> {
        PARAM_NAMES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.std_errors[i])
    }

    pub fn predict_prob(&self, s: &Scenario) -> Result<f64> {
        choice_prob(s, &self.params)
    }
}

fn draw_start(rng: &mut ChaCha8Rng, gamma_max: f64) -> CptParams {
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.gen::<f64>();
    CptParams {
        alpha: u(0.2, 1.0),
        beta: u(0.2, 1.0),
        gamma: u(0.2, gamma_max.min(2.0)),
        lambda: u(0.5, 3.0),
        eta: u(0.01, 1.0),
    }
}

fn run_restart(data: &[Scenario], opts: &CptOptions, index: usize) -> RestartRecord {
    let reparam = Reparam {
        gamma_max: opts.gamma_max,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    rng.set_stream(index as u64);
    let start = draw_start(&mut rng, opts.gamma_max);

    let n = data.len() as f64;
    let mut visited = 0usize;
    let mut out_of_bounds = 0usize;
    let mut objective = |t: &[f64]| {
        let params = reparam.to_params(t);
        visited += 1;
        if params.validate(opts.gamma_max).is_err() {
            out_of_bounds += 1;
            return f64::INFINITY;
        }
        -log_lik_raw(&params.to_array(), data) / n
    };

    let mut result = simplex::minimize(
        &mut objective,
        &reparam.to_coords(&start),
        INITIAL_STEP,
        opts.max_iter,
        opts.tol,
    );
    let mut iterations = result.iterations;
    // A collapsed simplex is not always a stationary point; restart it from
    // the incumbent until it stops improving.
    for _ in 0..MAX_POLISH_RUNS {
        if !result.converged || iterations >= opts.max_iter {
            break;
        }
        let again = simplex::minimize(
            &mut objective,
            &result.x,
            INITIAL_STEP * 0.1,
            opts.max_iter - iterations,
            opts.tol,
        );
        iterations += again.iterations;
        let improved = again.fx < result.fx - 1e-15;
        let converged = again.converged;
        if again.fx <= result.fx {
            result = again;
        }
        result.converged = converged;
        if !improved {
            break;
        }
    }

    let final_params = reparam.to_params(&result.x);
    RestartRecord {
        index,
        seed: opts.rng_seed,
        start,
        final_params,
        log_likelihood: -result.fx * n,
        converged: result.converged,
        iterations,
        visited,
        out_of_bounds,
    }
}

/// Gradient of the mean negative log-likelihood in transformed coordinates,
/// by central differences.
pub fn transformed_gradient(data: &[Scenario], gamma_max: f64, params: &CptParams, h: f64) -> [f64; 5] {
    let reparam = Reparam { gamma_max };
    let t0 = reparam.to_coords(params);
    let n = data.len() as f64;
    let f = |t: &[f64; 5]| -log_lik_raw(&reparam.to_params(t).to_array(), data) / n;
    let mut g = [0.0; 5];
    for i in 0..5 {
        let (mut up, mut dn) = (t0, t0);
        up[i] += h;
        dn[i] -= h;
        g[i] = (f(&up) - f(&dn)) / (2.0 * h);
    }
    g
}

/// Observed information `-∇²ℓ(θ)` in original coordinates, by symmetric
/// finite differences with step `FISHER_STEP · max(|θᵢ|, 1e-8)`.
pub fn observed_information(params: &CptParams, data: &[Scenario]) -> DMatrix<f64> {
    let theta = params.to_array();
    let h: Vec<f64> = theta.iter().map(|v| FISHER_STEP * v.abs().max(1e-8)).collect();
    let f = |d: &[(usize, f64)]| {
        let mut t = theta;
        for &(i, s) in d {
            t[i] += s;
        }
        log_lik_raw(&t, data)
    };
    let f0 = f(&[]);
    let mut info = DMatrix::zeros(5, 5);
    for i in 0..5 {
        let d2 = (f(&[(i, h[i])]) - 2.0 * f0 + f(&[(i, -h[i])])) / (h[i] * h[i]);
        info[(i, i)] = -d2;
        for j in 0..i {
            let d2 = (f(&[(i, h[i]), (j, h[j])]) - f(&[(i, h[i]), (j, -h[j])]) - f(&[(i, -h[i]), (j, h[j])])
                + f(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            info[(i, j)] = -d2;
            info[(j, i)] = -d2;
        }
    }
    info
}

struct StdErrors {
    values: [Option<f64>; 5],
    unidentified: Vec<String>,
    invertible: bool,
}

/// Parameters within `AT_BOUND_REL` of a closed upper bound.
fn at_upper_bound(params: &CptParams, gamma_max: f64) -> [bool; 5] {
    [
        params.alpha >= 1.0 - AT_BOUND_REL,
        params.beta >= 1.0 - AT_BOUND_REL,
        false,
        params.gamma >= gamma_max * (1.0 - AT_BOUND_REL),
        false,
    ]
}

/// Inverts the information restricted to parameters that carry information
/// and are interior to the box.
fn standard_errors(info: &DMatrix<f64>, at_bound: [bool; 5]) -> StdErrors {
    let scale = (0..5).map(|i| info[(i, i)].abs()).fold(0.0, f64::max);
    let informative: Vec<bool> = (0..5)
        .map(|i| info[(i, i)].abs() > 1e-10 * scale.max(f64::MIN_POSITIVE))
        .collect();
    let identified: Vec<usize> = (0..5).filter(|&i| informative[i] && !at_bound[i]).collect();
    let unidentified: Vec<String> = (0..5)
        .filter(|&i| !informative[i])
        .map(|i| PARAM_NAMES[i].to_string())
        .collect();

    let mut values = [None; 5];
    if identified.is_empty() {
        return StdErrors {
            values,
            unidentified,
            invertible: false,
        };
    }
    let sub = DMatrix::from_fn(identified.len(), identified.len(), |a, b| {
        info[(identified[a], identified[b])]
    });
    let Some(chol) = sub.cholesky() else {
        return StdErrors {
            values,
            unidentified,
            invertible: false,
        };
    };
    let cov = chol.inverse();
    for (a, &i) in identified.iter().enumerate() {
        let var = cov[(a, a)];
        if var.is_finite() && var >= 0.0 {
            values[i] = Some(var.sqrt());
        }
    }
    StdErrors {
        values,
        unidentified,
        invertible: true,
    }
}

/// Multi-restart maximum-likelihood fit.
pub fn fit_cpt(data: &[Scenario], opts: &CptOptions) -> Result<CptFit> {
    if data.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    if opts.n_restarts == 0 {
        return Err(Error::Config("n_restarts must be at least 1".into()));
    }
    if !(opts.gamma_max > 0.0 && opts.gamma_max.is_finite()) {
        return Err(Error::Config(format!("gamma_max must be positive, got {}", opts.gamma_max)));
    }
    if let Some(s) = data.iter().find(|s| !(s.p > 0.0 && s.p < 1.0)) {
        return Err(Error::Domain(format!("scenario {} has p = {}", s.id, s.p)));
    }

    let restart_log: Vec<RestartRecord> = (0..opts.n_restarts)
        .into_par_iter()
        .map(|i| run_restart(data, opts, i))
        .collect();

    if restart_log.iter().all(|r| !r.converged) {
        return Err(Error::Estimation {
            message: format!("none of {} restarts converged", opts.n_restarts),
            restart_log,
        });
    }
    // Lowest index wins ties.
    let best = restart_log
        .iter()
        .fold(None::<&RestartRecord>, |acc, r| match acc {
            Some(b) if b.log_likelihood >= r.log_likelihood => Some(b),
            _ => Some(r),
        })
        .expect("at least one restart");

    let params = best.final_params;
    let info = observed_information(&params, data);
    let at_bound = at_upper_bound(&params, opts.gamma_max);
    let se = standard_errors(&info, at_bound);

    Ok(CptFit {
        params,
        std_errors: se.values,
        unidentified: se.unidentified,
        at_bound: (0..5)
            .filter(|&i| at_bound[i])
            .map(|i| PARAM_NAMES[i].to_string())
            .collect(),
        information_invertible: se.invertible,
        log_likelihood: best.log_likelihood,
        n_obs: data.len(),
        gamma_max: opts.gamma_max,
        restart_log,
    })
}

/// Simulates choices from a known parameter vector on the given scenarios.
pub fn simulate_choices(data: &mut [Scenario], params: &CptParams, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in data.iter_mut() {
        let p = choice_prob(s, params)?;
        s.choice = u8::from(rng.gen::<f64>() < p);
    }
    Ok(())
}

pub fn default_value_grid() -> Vec<f64> {
    (0..251).map(|i| -100.0 + i as f64).collect()
}

pub fn default_weight_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

pub fn sample_value_curve(params: &CptParams, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter().map(|&x| (x, value(x, params))).collect()
}

/// Points outside `(0, 1]` are skipped.
pub fn sample_weight_curve(params: &CptParams, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter()
        .filter_map(|&p| weight(p, params).ok().map(|w| (p, w)))
        .collect()
}

pub fn curve_csv(header: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (a, b) in points {
        out.push_str(&format!("{},{}\n", crate::scenario::format_f64(*a), crate::scenario::format_f64(*b)));
    }
    out
}

pub fn write_curve(path: &Path, header: &str, points: &[(f64, f64)]) -> Result<()> {
    std::fs::write(path, curve_csv(header, points)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn scenario(safe: f64, risky: f64, p: f64) -> Scenario {
        Scenario {
            id: 0,
            safe,
            risky,
            p,
            frame: 1,
            choice: 0,
        }
    }

    fn reference_estimates() -> CptParams {
        CptParams {
            alpha: 0.20,
            beta: 0.77,
            lambda: 0.71,
            gamma: 2.00,
            eta: 0.20,
        }
    }

    #[test]
    fn value_identities() {
        let p = CptParams {
            alpha: 0.37,
            beta: 0.6,
            lambda: 2.25,
            ..CptParams::identity()
        };
        assert_eq!(value(0.0, &p), 0.0);
        assert_eq!(value(1.0, &p), 1.0);
        assert_eq!(value(-1.0, &p), -2.25);
        // λ touches only the loss branch.
        let q = CptParams { lambda: 9.0, ..p };
        assert_eq!(value(7.0, &p), value(7.0, &q));
    }

    #[test]
    fn weight_identities() {
        let p = CptParams {
            gamma: 0.61,
            ..CptParams::identity()
        };
        assert_eq!(weight(1.0, &p).unwrap(), 1.0);
        assert!((weight(E.recip(), &p).unwrap() - E.recip()).abs() < 1e-15);
        assert!(weight(0.0, &p).is_err());
        assert!(weight(-0.2, &p).is_err());
        let w = weight(0.1, &reference_estimates()).unwrap();
        let expected = (-(10f64.ln()).powi(2)).exp();
        assert!((w - expected).abs() < 1e-15);
        assert!((w - 0.004_99).abs() < 1e-5, "{w}");
    }

    #[test]
    fn choice_prob_examples() {
        let id = CptParams::identity();
        assert_eq!(choice_prob(&scenario(0.0, 0.0, 0.3), &id).unwrap(), 0.5);
        let p = choice_prob(&scenario(50.0, 120.0, 0.5), &id).unwrap();
        assert!((p - sigmoid(10.0)).abs() < 1e-15);
        let tiny = CptParams { eta: 1e-12, ..id };
        assert!((choice_prob(&scenario(80.0, 10.0, 0.9), &tiny).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn log_likelihood_matches_product_of_probabilities() {
        let params = CptParams {
            alpha: 0.8,
            beta: 0.9,
            lambda: 1.5,
            gamma: 0.7,
            eta: 0.05,
        };
        let data: Vec<Scenario> = (0..10)
            .map(|i| Scenario {
                id: i,
                safe: 10.0 * i as f64,
                risky: 15.0 * (9 - i) as f64,
                p: 0.1 + 0.08 * i as f64,
                frame: 1,
                choice: (i % 3 == 0) as u8,
            })
            .collect();
        let direct: f64 = data
            .iter()
            .map(|s| {
                let p = choice_prob(s, &params).unwrap();
                if s.choice == 1 {
                    p
                } else {
                    1.0 - p
                }
            })
            .product::<f64>()
            .ln();
        let ll = cpt_log_likelihood(&params, &data).unwrap();
        assert!((ll - direct).abs() < 1e-10);

        let flat = CptParams { eta: 1e-300, ..params };
        assert!((cpt_log_likelihood(&flat, &data).unwrap() - 10.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!(cpt_log_likelihood(&CptParams { alpha: 1.5, ..params }, &data).is_err());
        assert!(cpt_log_likelihood(&params, &[]).is_err());
    }

    #[test]
    fn reparam_round_trips_and_stays_in_bounds() {
        let r = Reparam { gamma_max: 5.0 };
        let p = CptParams {
            alpha: 0.3,
            beta: 0.9,
            lambda: 2.0,
            gamma: 1.7,
            eta: 0.02,
        };
        let back = r.to_params(&r.to_coords(&p));
        for (a, b) in p.to_array().iter().zip(back.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
        for t in [[1e6; 5], [-1e6; 5], [f64::MAX; 5], [0.0; 5]] {
            assert!(r.to_params(&t).validate(5.0).is_ok());
        }
    }

    #[test]
    fn curves() {
        let id = CptParams::identity();
        for (x, v) in sample_value_curve(&id, &default_value_grid()) {
            assert_eq!(x, v);
        }
        for (p, w) in sample_weight_curve(&id, &default_weight_grid()) {
            assert!((p - w).abs() < 1e-12);
        }
        assert_eq!(default_value_grid().len(), 251);
        assert_eq!(default_weight_grid().len(), 99);
        let w = sample_weight_curve(&reference_estimates(), &default_weight_grid());
        assert!(w.windows(2).all(|pair| pair[1].1 >= pair[0].1));
        let csv = curve_csv("p,w", &w[..2]);
        assert!(csv.starts_with("p,w\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn standard_errors_skip_zero_information() {
        let mut info = DMatrix::zeros(5, 5);
        info[(0, 0)] = 4.0;
        info[(4, 4)] = 100.0;
        info[(0, 4)] = 1.0;
        info[(4, 0)] = 1.0;
        let se = standard_errors(&info, [false; 5]);
        assert!(se.invertible);
        assert_eq!(se.unidentified, vec!["beta", "lambda", "gamma"]);
        let det: f64 = 400.0 - 1.0;
        assert!((se.values[0].unwrap() - (100.0 / det).sqrt()).abs() < 1e-12);
        assert!((se.values[4].unwrap() - (4.0 / det).sqrt()).abs() < 1e-12);
        assert_eq!(se.values[1], None);

        let pinned = standard_errors(&info, [true, false, false, false, false]);
        assert_eq!(pinned.values[0], None);
        assert!((pinned.values[4].unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_options() {
        let data = vec![scenario(1.0, 2.0, 0.5)];
        let zero = CptOptions {
            n_restarts: 0,
            ..Default::default()
        };
        assert!(matches!(fit_cpt(&data, &zero), Err(Error::Config(_))));
        assert!(matches!(fit_cpt(&[], &CptOptions::default()), Err(Error::Input(_))));
    }
}
