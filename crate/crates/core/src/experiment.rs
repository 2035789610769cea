//! End-to-end experiment: generate, split, screen, fit three models, score,
//! and emit the table, report and plot data.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cpt::{self, CptFit, CptOptions};
use crate::error::{Error, Result};
use crate::eval::{self, EvalMetrics, Interpretability};
use crate::features::{
    self, default_candidates, raw_row, symbolic_row, EffectSizeReport, FeatureVector, Thresholds,
    RAW_NAMES, SYMBOLIC_NAMES,
};
use crate::glm::{self, FitOptions, FittedLogistic};
use crate::scenario::{self, format_f64, DatasetMetadata, GeneratorConfig, Scenario};

pub const OUTPUT_DIR_ENV: &str = "SYMBOLIC_PT_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_SPLIT_SEED: u64 = 1;
pub const DEFAULT_CPT_SEED: u64 = 7;

pub const SYMBOLIC_LABEL: &str = "Symbolic Logistic";
pub const BLACKBOX_LABEL: &str = "Black-box Logistic";
pub const CPT_LABEL: &str = "CPT Parametric";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CptConfig {
    pub n_restarts: usize,
    pub rng_seed: u64,
    pub gamma_max: f64,
}

impl Default for CptConfig {
    fn default() -> Self {
        Self {
            n_restarts: cpt::DEFAULT_RESTARTS,
            rng_seed: DEFAULT_CPT_SEED,
            gamma_max: cpt::DEFAULT_GAMMA_MAX,
        }
    }
}

impl CptConfig {
    pub fn options(&self) -> CptOptions {
        CptOptions {
            n_restarts: self.n_restarts,
            rng_seed: self.rng_seed,
            gamma_max: self.gamma_max,
            ..CptOptions::default()
        }
    }
}

/// Fully resolved experiment settings; echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub train_frac: f64,
    pub split_seed: u64,
    pub thresholds: Thresholds,
    pub l2_strength: f64,
    /// Z-score the raw inputs of the black-box model before fitting.
    pub standardize_blackbox: bool,
    /// Screen features on the full dataset instead of the training split.
    pub select_on_full: bool,
    pub cpt: CptConfig,
    pub output_dir: PathBuf,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            train_frac: eval::DEFAULT_TRAIN_FRAC,
            split_seed: DEFAULT_SPLIT_SEED,
            thresholds: Thresholds::default(),
            l2_strength: 0.0,
            standardize_blackbox: false,
            select_on_full: false,
            cpt: CptConfig::default(),
            output_dir: default_output_dir(),
            svg: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("config {}: {e}", path.display()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::Config(format!("train_frac must be in (0, 1), got {}", self.train_frac)));
        }
        for (name, v) in [("tau_v", self.thresholds.tau_v), ("tau_eta", self.thresholds.tau_eta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::Config(format!("l2 must be >= 0, got {}", self.l2_strength)));
        }
        if self.cpt.n_restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if !(self.cpt.gamma_max > 0.0 && self.cpt.gamma_max.is_finite()) {
            return Err(Error::Config(format!("gamma_max must be > 0, got {}", self.cpt.gamma_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Symbolic,
    Blackbox,
    Cpt,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Symbolic => SYMBOLIC_LABEL,
            ModelKind::Blackbox => BLACKBOX_LABEL,
            ModelKind::Cpt => CPT_LABEL,
        }
    }

    pub fn interpretability(self) -> Interpretability {
        match self {
            ModelKind::Symbolic => Interpretability::High,
            ModelKind::Blackbox => Interpretability::Low,
            ModelKind::Cpt => Interpretability::Moderate,
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            ModelKind::Symbolic => "symbolic",
            ModelKind::Blackbox => "blackbox",
            ModelKind::Cpt => "cpt",
        }
    }
}

/// Serialized form of any fitted model, tagged by `model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelFile {
    Symbolic(FittedLogistic),
    Blackbox(FittedLogistic),
    Cpt(CptFit),
}

impl ModelFile {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelFile::Symbolic(_) => ModelKind::Symbolic,
            ModelFile::Blackbox(_) => ModelKind::Blackbox,
            ModelFile::Cpt(_) => ModelKind::Cpt,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("model {}: {e}", path.display()),
        })
    }

    /// Risky-choice probability for every scenario.
    pub fn predict(&self, data: &[Scenario]) -> Result<Vec<f64>> {
        match self {
            ModelFile::Symbolic(m) => data
                .iter()
                .map(|s| glm::predict_prob(m, &features::symbolic_features(s).select(&m.feature_names)?))
                .collect(),
            ModelFile::Blackbox(m) => data
                .iter()
                .map(|s| glm::predict_prob(m, &features::raw_features(s).select(&m.feature_names)?))
                .collect(),
            ModelFile::Cpt(fit) => data.iter().map(|s| fit.predict_prob(s)).collect(),
        }
    }

    /// Aligned plain-text coefficient table.
    pub fn coefficient_table(&self) -> String {
        let mut rows: Vec<(String, f64, Option<f64>)> = Vec::new();
        match self {
            ModelFile::Symbolic(m) | ModelFile::Blackbox(m) => {
                for (i, name) in m.feature_names.iter().enumerate() {
                    let se = m.std_errors[i];
                    rows.push((name.clone(), m.coeffs[i], se.is_finite().then_some(se)));
                }
            }
            ModelFile::Cpt(fit) => {
                for (i, (name, v)) in cpt::PARAM_NAMES.iter().zip(fit.params.to_array()).enumerate() {
                    rows.push((name.to_string(), v, fit.std_errors[i]));
                }
            }
        }
        let mut out = format!("{:<12} {:>14} {:>14}\n", "parameter", "estimate", "std.err");
        for (name, v, se) in rows {
            let se = se.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}"));
            out.push_str(&format!("{name:<12} {v:>14.6} {se:>14}\n"));
        }
        out
    }
}

fn design(data: &[Scenario], all_names: &[&str; 5], row: fn(&Scenario) -> [f64; 5], names: &[String]) -> Result<DMatrix<f64>> {
    let cols = names
        .iter()
        .map(|n| {
            all_names
                .iter()
                .position(|a| a == n)
                .ok_or_else(|| Error::Input(format!("unknown feature `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<[f64; 5]> = data.iter().map(row).collect();
    Ok(DMatrix::from_fn(data.len(), cols.len(), |i, j| rows[i][cols[j]]))
}

fn labels(data: &[Scenario]) -> Vec<u8> {
    data.iter().map(|s| s.choice).collect()
}

/// Fits the symbolic logistic model on the given feature subset.
pub fn fit_symbolic(data: &[Scenario], names: &[String], l2: f64) -> Result<FittedLogistic> {
    let x = design(data, &SYMBOLIC_NAMES, symbolic_row, names)?;
    glm::fit_logistic(&x, &labels(data), names, l2, &FitOptions::default())
}

pub fn fit_blackbox(data: &[Scenario], l2: f64, standardize: bool) -> Result<FittedLogistic> {
    let names: Vec<String> = RAW_NAMES.iter().map(|s| s.to_string()).collect();
    let x = design(data, &RAW_NAMES, raw_row, &names)?;
    let opts = FitOptions {
        standardize,
        ..FitOptions::default()
    };
    glm::fit_logistic(&x, &labels(data), &names, l2, &opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub l2_strength: f64,
    pub standardize: bool,
    pub cpt: CptOptions,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            l2_strength: 0.0,
            standardize: false,
            cpt: CptConfig::default().options(),
        }
    }
}

/// Stage-wise fit with all five symbolic features (no screening).
pub fn fit_model(kind: ModelKind, data: &[Scenario], settings: &FitSettings) -> Result<ModelFile> {
    if data.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    Ok(match kind {
        ModelKind::Symbolic => {
            let names: Vec<String> = SYMBOLIC_NAMES.iter().map(|s| s.to_string()).collect();
            ModelFile::Symbolic(fit_symbolic(data, &names, settings.l2_strength)?)
        }
        ModelKind::Blackbox => ModelFile::Blackbox(fit_blackbox(data, settings.l2_strength, settings.standardize)?),
        ModelKind::Cpt => ModelFile::Cpt(cpt::fit_cpt(data, &settings.cpt)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub n_test: usize,
}

pub fn evaluate(model: &ModelFile, data: &[Scenario]) -> Result<EvalSummary> {
    let probs = model.predict(data)?;
    let m = EvalMetrics::compute(model.kind().label(), model.kind().interpretability(), &probs, &labels(data))?;
    Ok(EvalSummary {
        accuracy: m.accuracy,
        auc: m.auc,
        n_test: m.n_test,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { 0.5 * (v[mid - 1] + v[mid]) } else { v[mid] })
}

/// Predicted risky-choice probability in each frame at a fixed feature point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionCurve {
    pub low_prob: f64,
    pub dominance: f64,
    pub magnitude: f64,
    /// `(frame, P(risky))` for frame −1 then +1.
    pub points: Vec<(i8, f64)>,
}

impl ReflectionCurve {
    pub fn prob(&self, frame: i8) -> Option<f64> {
        self.points.iter().find(|(f, _)| *f == frame).map(|(_, p)| *p)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# held constant: low_prob={}, dominance={}, magnitude={} (training median)\nframe,p_risky\n",
            self.low_prob,
            self.dominance,
            format_f64(self.magnitude)
        );
        for (f, p) in &self.points {
            out.push_str(&format!("{f},{}\n", format_f64(*p)));
        }
        out
    }
}

/// Sweeps the frame with low_prob = 0, dominance = 0 and magnitude at its
/// training median.
pub fn reflection_curve(model: &FittedLogistic, train: &[Scenario]) -> Result<ReflectionCurve> {
    let mags: Vec<f64> = train.iter().map(features::magnitude).collect();
    let magnitude = median(&mags).ok_or_else(|| Error::Input("empty training set".into()))?;
    let mut points = Vec::with_capacity(2);
    for frame in [-1i8, 1] {
        let full = FeatureVector {
            names: SYMBOLIC_NAMES.iter().map(|s| s.to_string()).collect(),
            values: vec![1.0, f64::from(frame), 0.0, magnitude, 0.0],
            includes_intercept: true,
        };
        points.push((frame, glm::predict_prob(model, &full.select(&model.feature_names)?)?));
    }
    Ok(ReflectionCurve {
        low_prob: 0.0,
        dominance: 0.0,
        magnitude,
        points,
    })
}

/// Polyline rendering of curve data.
pub fn render_svg(title: &str, points: &[(f64, f64)], diagonal: bool) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if diagonal {
        y0 = y0.min(x0);
        y1 = y1.max(x1);
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0).max(f64::MIN_POSITIVE) * (H - 2.0 * PAD);
    let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\">\n\
         <text x=\"{PAD}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    if diagonal {
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#bbb\" stroke-dasharray=\"4\"/>\n",
            sx(x0),
            sy(x0),
            sx(x1),
            sy(x1)
        ));
    }
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"{}\"/>\n</svg>\n",
        path.join(" ")
    ));
    svg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport<F> {
    pub fit: F,
    pub metrics: EvalMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReports {
    pub symbolic: ModelReport<FittedLogistic>,
    pub blackbox: ModelReport<FittedLogistic>,
    pub cpt: ModelReport<CptFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub generator_algorithm: String,
    pub n_train: usize,
    pub n_test: usize,
    pub selection_split: String,
    pub effect_sizes: EffectSizeReport,
    pub models: ModelReports,
    pub reflection: ReflectionCurve,
    pub interpretability_note: String,
    /// Emitted files, relative to the output directory.
    pub manifest: Vec<String>,
}

/// Files emitted by a run, kept so a failure can report what was written.
#[derive(Debug, Default, Serialize)]
struct Manifest {
    files: Vec<String>,
    failed_stage: Option<String>,
    error: Option<String>,
}

struct Emitter<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Emitter<'_> {
    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body)
    }
}

fn table1_csv(rows: &[&EvalMetrics]) -> String {
    let mut out = String::from("model,accuracy,auc,interpretability\n");
    for m in rows {
        let auc = m.auc.map_or_else(String::new, format_f64);
        out.push_str(&format!(
            "{},{},{},{:?}\n",
            m.model_name,
            format_f64(m.accuracy),
            auc,
            m.interpretability_label
        ));
    }
    out
}

pub fn generate_files(cfg: &GeneratorConfig, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let data = scenario::generate_dataset(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("dataset.csv");
    let meta = dir.join("dataset.meta.json");
    scenario::write_csv(&csv, &data)?;
    scenario::write_metadata(&meta, &DatasetMetadata::from(cfg))?;
    Ok((csv, meta))
}

/// Runs the full pipeline and writes every artifact under `cfg.output_dir`.
/// On failure a `manifest.partial.json` lists what was written before the
/// failing stage.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut emit = Emitter {
        dir,
        manifest: Manifest::default(),
    };
    let mut stage = "generate";
    let result = run_stages(cfg, &mut emit, &mut stage);
    if let Err(e) = &result {
        emit.manifest.failed_stage = Some(stage.to_string());
        emit.manifest.error = Some(e.to_string());
        let mut body = serde_json::to_string_pretty(&emit.manifest)?;
        body.push('\n');
        let path = dir.join("manifest.partial.json");
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    result
}

fn run_stages(cfg: &ExperimentConfig, emit: &mut Emitter<'_>, stage: &mut &'static str) -> Result<ExperimentReport> {
    let data = scenario::generate_dataset(&cfg.generator)?;
    emit.write("dataset.csv", &scenario::to_csv_string(&data))?;
    emit.write_json("dataset.meta.json", &DatasetMetadata::from(&cfg.generator))?;

    *stage = "split";
    let (train, test) = eval::split(&data, cfg.train_frac, cfg.split_seed)?;
    emit.write("train.csv", &scenario::to_csv_string(&train))?;
    emit.write("test.csv", &scenario::to_csv_string(&test))?;

    *stage = "select_features";
    let screen_on = if cfg.select_on_full { &data } else { &train };
    let effect_sizes = features::select_features(screen_on, &default_candidates(), &cfg.thresholds)?;
    for w in effect_sizes.warnings() {
        eprintln!("warning: {w}");
    }
    emit.write_json("effect_sizes.json", &effect_sizes)?;
    let retained = effect_sizes.retained_features();

    *stage = "fit_symbolic";
    let symbolic = fit_symbolic(&train, &retained, cfg.l2_strength)?;
    *stage = "fit_blackbox";
    let blackbox = fit_blackbox(&train, cfg.l2_strength, cfg.standardize_blackbox)?;
    *stage = "fit_cpt";
    let cpt_fit = cpt::fit_cpt(&train, &cfg.cpt.options())?;

    let symbolic_file = ModelFile::Symbolic(symbolic);
    let blackbox_file = ModelFile::Blackbox(blackbox);
    let cpt_file = ModelFile::Cpt(cpt_fit);
    emit.write_json("symbolic.json", &symbolic_file)?;
    emit.write_json("blackbox.json", &blackbox_file)?;
    emit.write_json("cpt.json", &cpt_file)?;

    *stage = "evaluate";
    let y_test = labels(&test);
    let score = |m: &ModelFile| -> Result<EvalMetrics> {
        let probs = m.predict(&test)?;
        EvalMetrics::compute(m.kind().label(), m.kind().interpretability(), &probs, &y_test)
    };
    let (m_sym, m_bb, m_cpt) = (score(&symbolic_file)?, score(&blackbox_file)?, score(&cpt_file)?);
    emit.write("table1.csv", &table1_csv(&[&m_sym, &m_bb, &m_cpt]))?;

    *stage = "plots";
    let (ModelFile::Symbolic(symbolic), ModelFile::Blackbox(blackbox), ModelFile::Cpt(cpt_fit)) =
        (symbolic_file, blackbox_file, cpt_file)
    else {
        unreachable!("model files constructed above")
    };
    let reflection = reflection_curve(&symbolic, &train)?;
    emit.write("reflection.csv", &reflection.to_csv())?;
    let value_curve = cpt::sample_value_curve(&cpt_fit.params, &cpt::default_value_grid());
    let weight_curve = cpt::sample_weight_curve(&cpt_fit.params, &cpt::default_weight_grid());
    emit.write("value_curve.csv", &cpt::curve_csv("x,v", &value_curve))?;
    emit.write("weight_curve.csv", &cpt::curve_csv("p,w", &weight_curve))?;
    if cfg.svg {
        emit.write("value_curve.svg", &render_svg("Estimated value function", &value_curve, false))?;
        emit.write("weight_curve.svg", &render_svg("Estimated probability weighting", &weight_curve, true))?;
        let refl: Vec<(f64, f64)> = reflection.points.iter().map(|&(f, p)| (f64::from(f), p)).collect();
        emit.write("reflection.svg", &render_svg("P(risky) by frame", &refl, false))?;
    }

    *stage = "report";
    let mut manifest = emit.manifest.files.clone();
    manifest.push("report.json".to_string());
    let report = ExperimentReport {
        config: cfg.clone(),
        generator_algorithm: scenario::GENERATOR_ALGORITHM.to_string(),
        n_train: train.len(),
        n_test: test.len(),
        selection_split: if cfg.select_on_full { "full" } else { "train" }.to_string(),
        effect_sizes,
        models: ModelReports {
            symbolic: ModelReport {
                fit: symbolic,
                metrics: m_sym,
            },
            blackbox: ModelReport {
                fit: blackbox,
                metrics: m_bb,
            },
            cpt: ModelReport {
                fit: cpt_fit,
                metrics: m_cpt,
            },
        },
        reflection,
        interpretability_note: "interpretability labels are static per-model ratings, not computed".to_string(),
        manifest,
    };
    emit.write_json("report.json", &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn model_file_round_trips_with_tag() {
        let data = scenario::generate_dataset(&GeneratorConfig {
            n: 400,
            ..Default::default()
        })
        .unwrap();
        let model = fit_model(ModelKind::Symbolic, &data, &FitSettings::default()).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        assert!(json.starts_with(r#"{"model":"symbolic","features":["intercept","frame""#));
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn cpt_model_file_round_trips() {
        let data = scenario::generate_dataset(&GeneratorConfig {
            n: 300,
            ..Default::default()
        })
        .unwrap();
        let settings = FitSettings {
            cpt: CptOptions {
                n_restarts: 2,
                ..CptOptions::default()
            },
            ..Default::default()
        };
        let model = fit_model(ModelKind::Cpt, &data, &settings).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["model"], "cpt");
        assert!(value["alpha"].is_f64() && value["restarts"].is_array());
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn predict_rejects_mismatched_features() {
        let data = scenario::generate_dataset(&GeneratorConfig {
            n: 200,
            ..Default::default()
        })
        .unwrap();
        let ModelFile::Symbolic(sym) = fit_model(ModelKind::Symbolic, &data, &FitSettings::default()).unwrap() else {
            unreachable!()
        };
        // Symbolic coefficients presented as a black-box model.
        let wrong = ModelFile::Blackbox(sym);
        assert!(matches!(evaluate(&wrong, &data), Err(Error::Input(_))));
    }

    #[test]
    fn single_class_slice_gives_null_auc() {
        let data = scenario::generate_dataset(&GeneratorConfig {
            n: 300,
            ..Default::default()
        })
        .unwrap();
        let model = fit_model(ModelKind::Symbolic, &data, &FitSettings::default()).unwrap();
        let ones: Vec<Scenario> = data.iter().filter(|s| s.choice == 1).copied().collect();
        let summary = evaluate(&model, &ones).unwrap();
        assert_eq!(summary.auc, None);
        assert_eq!(summary.n_test, ones.len());
    }

    #[test]
    fn config_json_fields_default() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"generator": {"n": 100, "seed": 3, "true_coeffs": [0,0,0,0,0]}, "train_frac": 0.5}"#).unwrap();
        assert_eq!(cfg.generator.n, 100);
        assert_eq!(cfg.train_frac, 0.5);
        assert_eq!(cfg.cpt.n_restarts, cpt::DEFAULT_RESTARTS);
        assert!(cfg.validate().is_ok());
        let bad = ExperimentConfig {
            train_frac: 1.0,
            ..cfg
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn svg_contains_polyline() {
        let svg = render_svg("t", &[(0.0, 0.0), (1.0, 2.0)], true);
        assert!(svg.contains("<polyline") && svg.contains("<line"));
    }
}
