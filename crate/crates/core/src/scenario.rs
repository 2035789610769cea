//! Binary choice scenarios and the synthetic data-generating process.
//!
//! Each scenario pits a sure payoff `S ∈ [0, 100]` against a risky payoff
//! `R ∈ [0, 150]` won with probability `p ∈ [0.1, 0.9]`, presented in a gain
//! (`+1`) or loss (`-1`) frame. The choice (`1` = risky) is drawn from a
//! Bernoulli whose success probability is the logistic transform of a linear
//! utility over the symbolic features.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::symbolic_features;
use crate::glm::sigmoid;

pub const SAFE_MAX: f64 = 100.0;
pub const RISKY_MAX: f64 = 150.0;
pub const PROB_MIN: f64 = 0.1;
pub const PROB_MAX: f64 = 0.9;

/// Identifier of the pseudo-random stream written into dataset metadata.
///
/// ChaCha8 seeded with `seed_from_u64(seed)`; each scenario consumes five
/// 53-bit uniforms in the order S, R, p, frame, choice.
pub const GENERATOR_ALGORITHM: &str = "chacha8-rand_chacha-0.3/u53-uniform/v1";

/// Header of the dataset CSV.
pub const CSV_HEADER: &str = "id,safe,risky,p,frame,choice";

/// Coefficients of the generating utility, ordered
/// (intercept, frame, low_prob, magnitude, dominance).
pub const DEFAULT_TRUE_COEFFS: [f64; 5] = [-0.5, -0.8, 2.0, 2.0, 1.5];

pub const DEFAULT_N: usize = 5000;
pub const DEFAULT_SEED: u64 = 42;

/// One safe-vs-risky decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    /// Sure payoff `S`.
    pub safe: f64,
    /// Payoff `R` of the risky option.
    pub risky: f64,
    /// Probability of winning `R`.
    pub p: f64,
    /// `+1` gain frame, `-1` loss frame.
    pub frame: i8,
    /// `1` when the risky option was chosen.
    pub choice: u8,
}

impl Scenario {
    pub fn chose_risky(&self) -> bool {
        self.choice == 1
    }

    /// Checks the loader-level invariants (finite payoffs, `0 < p < 1`,
    /// frame and choice codes).
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.safe.is_finite() || !self.risky.is_finite() {
            return Err("payoffs must be finite".into());
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(format!("win probability {} outside (0, 1)", self.p));
        }
        if self.frame != -1 && self.frame != 1 {
            return Err(format!("frame must be -1 or 1, got {}", self.frame));
        }
        if self.choice > 1 {
            return Err(format!("choice must be 0 or 1, got {}", self.choice));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    pub true_coeffs: [f64; 5],
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            seed: DEFAULT_SEED,
            true_coeffs: DEFAULT_TRUE_COEFFS,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.true_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("true_coeffs must be finite".into()));
        }
        Ok(())
    }
}

/// Generating utility of choosing the risky option; the choice field of `s`
/// is ignored.
pub fn latent_utility(s: &Scenario, coeffs: &[f64; 5]) -> f64 {
    symbolic_features(s)
        .values
        .iter()
        .zip(coeffs)
        .map(|(x, b)| x * b)
        .sum()
}

/// Draws `cfg.n` scenarios. Output is a pure function of `cfg`.
pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<Vec<Scenario>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n);
    for id in 0..cfg.n {
        let safe = SAFE_MAX * rng.gen::<f64>();
        let risky = RISKY_MAX * rng.gen::<f64>();
        let p = PROB_MIN + (PROB_MAX - PROB_MIN) * rng.gen::<f64>();
        let frame = if rng.gen::<f64>() < 0.5 { -1 } else { 1 };
        let mut s = Scenario {
            id,
            safe,
            risky,
            p,
            frame,
            choice: 0,
        };
        let u = rng.gen::<f64>();
        s.choice = u8::from(u < sigmoid(latent_utility(&s, &cfg.true_coeffs)));
        out.push(s);
    }
    Ok(out)
}

/// Sidecar written next to every dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub seed: u64,
    pub n: usize,
    pub true_coeffs: [f64; 5],
    pub generator: String,
}

impl From<&GeneratorConfig> for DatasetMetadata {
    fn from(cfg: &GeneratorConfig) -> Self {
        Self {
            seed: cfg.seed,
            n: cfg.n,
            true_coeffs: cfg.true_coeffs,
            generator: GENERATOR_ALGORITHM.to_string(),
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv_string(data: &[Scenario]) -> String {
    let mut out = String::with_capacity(64 * (data.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in data {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.id,
            format_f64(s.safe),
            format_f64(s.risky),
            format_f64(s.p),
            s.frame,
            s.choice
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<Scenario>> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`, found `{header}`"),
        });
    }

    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let float = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| err(format!("bad {name} `{}`: {e}", fields[i])))
        };
        let s = Scenario {
            id: fields[0]
                .parse()
                .map_err(|e| err(format!("bad id `{}`: {e}", fields[0])))?,
            safe: float(1, "safe")?,
            risky: float(2, "risky")?,
            p: float(3, "p")?,
            frame: fields[4]
                .parse()
                .map_err(|e| err(format!("bad frame `{}`: {e}", fields[4])))?,
            choice: fields[5]
                .parse()
                .map_err(|e| err(format!("bad choice `{}`: {e}", fields[5])))?,
        };
        s.validate().map_err(err)?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_csv(path: &Path, data: &[Scenario]) -> Result<()> {
    std::fs::write(path, to_csv_string(data)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn write_metadata(path: &Path, meta: &DatasetMetadata) -> Result<()> {
    let mut body = serde_json::to_string_pretty(meta)?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
