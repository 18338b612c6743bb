//! Batch driver: field in, family, distribution, samples, uncertainty maps
//! and metrics out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SkeletonFamily;
use crate::metrics::{evaluate, MetricReport, PatchParams};
use crate::prob::{fit_threshold_distribution, total_loss, LossConfig, LossParts, ThresholdDistribution};
use crate::raster::{
    ensure_same_dims, export_diagram, fmt_real, load_field, load_mask, save_field_raw, save_mask, skeleton_csv,
    write_text, BinaryMask2D, ScalarField2D,
};
use crate::segment::{
    analytic_branch_uncertainty, binarize, empirical_uncertainty, grow_segmentation, sample_from_binary,
    DEFAULT_SAMPLES,
};
use crate::watershed::{boundary_skeleton_family, ph_watershed};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Morse,
    Watershed,
}

fn default_tau() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    LossConfig::default().alpha
}

fn default_beta() -> f64 {
    LossConfig::default().beta
}

fn default_k() -> usize {
    LossConfig::default().mc_samples
}

fn default_n() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Likelihood map (PGM or raw-float).
    pub field: PathBuf,
    /// Optional reference mask; enables fitting, losses and metrics.
    #[serde(default)]
    pub gt: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Monte Carlo draws for the skeleton loss.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Sampled segmentations.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub patch: PatchParams,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub thetas: Vec<f64>,
    /// Prior. Required when `gt` is absent, in which case it is also used for
    /// sampling.
    #[serde(default)]
    pub distribution: Option<ThresholdDistribution>,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    /// A config with defaults for everything but the paths.
    pub fn new(field: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            field: field.into(),
            gt: None,
            output_dir: output_dir.into(),
            tau: default_tau(),
            alpha: default_alpha(),
            beta: default_beta(),
            k: default_k(),
            n: default_n(),
            patch: PatchParams::default(),
            mode: Mode::Morse,
            thetas: Vec::new(),
            distribution: None,
            seed: 0,
        }
    }

    /// Reads a JSON config. Relative paths are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.field);
        fix(&mut cfg.output_dir);
        if let Some(g) = cfg.gt.as_mut() {
            fix(g);
        }
        Ok(cfg)
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            alpha: self.alpha,
            beta: self.beta,
            mc_samples: self.k,
            ..LossConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidParams(format!("tau {} outside [0, 1]", self.tau)));
        }
        self.loss_config().validate()?;
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if let Some(d) = self.distribution {
            ThresholdDistribution::new(d.mu, d.sigma)?;
            if d.sigma == 0.0 {
                return Err(Error::DegenerateSigma);
            }
        }
        if self.gt.is_none() && self.distribution.is_none() {
            return Err(Error::InvalidParams("either gt or distribution is required".into()));
        }
        if self.mode == Mode::Watershed && self.thetas.is_empty() {
            return Err(Error::EmptyThetaList);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub width: usize,
    pub height: usize,
    pub branches: usize,
    pub seed: u64,
    pub distribution: ThresholdDistribution,
    pub prior: Option<ThresholdDistribution>,
    pub loss: Option<LossParts>,
    /// Metrics of the segmentation grown at `distribution.mu`.
    pub metrics: Option<MetricReport>,
    pub sample_metrics: Vec<MetricReport>,
    pub artifacts: Vec<String>,
}

/// Everything `run` computes, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub family: SkeletonFamily,
    pub segmentation: BinaryMask2D,
    pub samples: Vec<BinaryMask2D>,
    pub empirical_uncertainty: Option<ScalarField2D>,
    pub analytic_uncertainty: ScalarField2D,
    pub report: RunReport,
}

pub fn build_family(field: &ScalarField2D, mode: Mode, thetas: &[f64]) -> Result<SkeletonFamily> {
    match mode {
        Mode::Morse => crate::morse::extract_morse_complex(field),
        Mode::Watershed => boundary_skeleton_family(field, thetas),
    }
}

/// Runs the pipeline in memory.
pub fn run(cfg: &PipelineConfig, field: &ScalarField2D, gt: Option<&BinaryMask2D>) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some(g) = gt {
        ensure_same_dims(field.dims(), g.dims())?;
    }
    let family = build_family(field, cfg.mode, &cfg.thetas)?;
    let binary = binarize(field, cfg.tau);
    let dist = match gt {
        Some(g) => fit_threshold_distribution(g, &family, |s| Ok(grow_segmentation(&binary, s)?.mask))?,
        None => cfg.distribution.expect("validated"),
    };
    let prior = cfg.distribution.unwrap_or(dist);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = sample_from_binary(&binary, &family, &dist, cfg.n, &mut rng)?;
    let empirical = if samples.len() >= 2 {
        Some(empirical_uncertainty(&samples)?)
    } else {
        None
    };
    let (_, analytic) = analytic_branch_uncertainty(&family, &dist)?;
    let segmentation = grow_segmentation(&binary, &family.skeleton_at(dist.mu))?.mask;

    let (loss, metrics, sample_metrics) = match gt {
        Some(g) => {
            let loss = total_loss(field, g, &family, &dist, &prior, &cfg.loss_config(), &mut rng)?;
            let metrics = evaluate(&segmentation, g, cfg.patch)?;
            let per_sample = samples
                .iter()
                .map(|s| evaluate(&s.mask, g, cfg.patch))
                .collect::<Result<Vec<_>>>()?;
            (Some(loss), Some(metrics), per_sample)
        }
        None => (None, None, Vec::new()),
    };

    let (width, height) = field.dims();
    let report = RunReport {
        mode: cfg.mode,
        width,
        height,
        branches: family.len(),
        seed: cfg.seed,
        distribution: dist,
        prior: cfg.distribution,
        loss,
        metrics,
        sample_metrics,
        artifacts: Vec::new(),
    };
    Ok(RunOutput {
        family,
        segmentation,
        samples: samples.into_iter().map(|s| s.mask).collect(),
        empirical_uncertainty: empirical,
        analytic_uncertainty: analytic,
        report,
    })
}

/// `branch_id,persistence,probability,uncertainty,pixels`, descending
/// persistence.
pub fn persistence_csv(family: &SkeletonFamily, dist: &ThresholdDistribution) -> Result<String> {
    let mut out = String::from("branch_id,persistence,probability,uncertainty,pixels\n");
    for row in family.branch_table() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.id,
            fmt_real(row.persistence),
            fmt_real(dist.probability(row.persistence)?),
            fmt_real(dist.uncertainty(row.persistence)?),
            row.pixel_count
        );
    }
    Ok(out)
}

/// Loads inputs, runs, and writes every artifact into `output_dir`.
pub fn cli_run(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let field = load_field(&cfg.field)?;
    let gt = cfg.gt.as_ref().map(load_mask).transpose()?;
    let out = run(cfg, &field, gt.as_ref())?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut artifacts = Vec::new();
    let put = |name: String, artifacts: &mut Vec<String>| -> PathBuf {
        artifacts.push(name.clone());
        dir.join(name)
    };
    let dist = out.report.distribution;
    write_text(put("family.json".into(), &mut artifacts), &out.family.to_json()?)?;
    write_text(put("distribution.json".into(), &mut artifacts), &serde_json::to_string_pretty(&dist)?)?;
    write_text(put("persistence.csv".into(), &mut artifacts), &persistence_csv(&out.family, &dist)?)?;
    let kept = out.family.ids_at(dist.mu);
    let skeleton = skeleton_csv(
        field.width(),
        out.family
            .branches()
            .iter()
            .filter(|b| kept.contains(&b.id))
            .map(|b| (b.id, b.pixels.as_slice())),
    );
    write_text(put("skeleton.csv".into(), &mut artifacts), &skeleton)?;
    save_mask(&out.segmentation, put("segmentation.pgm".into(), &mut artifacts))?;
    for (i, s) in out.samples.iter().enumerate() {
        save_mask(s, put(format!("sample_{i:03}.pgm"), &mut artifacts))?;
    }
    if let Some(u) = &out.empirical_uncertainty {
        save_field_raw(u, put("uncertainty_empirical.raw".into(), &mut artifacts))?;
    }
    save_field_raw(&out.analytic_uncertainty, put("uncertainty_analytic.raw".into(), &mut artifacts))?;
    if cfg.mode == Mode::Watershed {
        let theta = cfg.thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        export_diagram(&ph_watershed(&field, theta).pd, put("diagram.csv".into(), &mut artifacts))?;
    }
    artifacts.push("report.json".into());
    let mut report = out.report;
    report.artifacts = artifacts;
    write_text(dir.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// `{"error": kind, "message": text, "path": path-or-null}`.
pub fn error_json(e: &Error) -> String {
    let path = match e {
        Error::Io { path, .. } => Some(path.display().to_string()),
        _ => None,
    };
    serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "path": path,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::save_field_pgm;
    use crate::synth::two_bump;

    #[test]
    fn config_defaults_and_validation() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"field": "f.pgm", "output_dir": "out", "gt": "g.pgm"}"#).unwrap();
        assert_eq!(cfg, PipelineConfig { gt: Some("g.pgm".into()), ..PipelineConfig::new("f.pgm", "out") });
        assert_eq!((cfg.alpha, cfg.beta, cfg.k, cfg.n, cfg.tau), (1.0, 10.0, 10, 10, 0.5));
        cfg.validate().unwrap();
        let bare = PipelineConfig::new("f", "o");
        assert!(matches!(bare.validate(), Err(Error::InvalidParams(_))));
        let ws = PipelineConfig { mode: Mode::Watershed, ..cfg.clone() };
        assert!(matches!(ws.validate(), Err(Error::EmptyThetaList)));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"field": "f", "output_dir": "o", "bogus": 1}"#).is_err());
    }

    #[test]
    fn two_bump_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let (field, e) = two_bump(24, 9, 1.0, 0.8, 0.6).unwrap();
        let gt = binarize(&field, 0.5);
        save_field_raw(&field, dir.path().join("f.raw")).unwrap();
        save_mask(&gt, dir.path().join("g.pgm")).unwrap();
        let mut cfg = PipelineConfig::new(dir.path().join("f.raw"), dir.path().join("out"));
        cfg.gt = Some(dir.path().join("g.pgm"));
        cfg.n = 3;
        let report = cli_run(&cfg).unwrap();
        assert_eq!(report.branches, 1);
        let csv = fs::read_to_string(dir.path().join("out/persistence.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 1);
        let eps: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
        // the raw-float round trip goes through f32
        assert!((eps - e).abs() < 1e-6, "{eps} vs {e}");
        assert!(report.artifacts.iter().all(|a| dir.path().join("out").join(a).exists()));
        assert_eq!(report.metrics.unwrap().dice, 1.0);
    }

    #[test]
    fn missing_input_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::new(dir.path().join("nope.pgm"), dir.path().join("out"));
        cfg.distribution = Some(ThresholdDistribution::new(0.1, 0.05).unwrap());
        let err = cli_run(&cfg).unwrap_err();
        let v: serde_json::Value = serde_json::from_str(&error_json(&err)).unwrap();
        assert_eq!(v["error"], "IoFailure");
        assert!(v["path"].as_str().unwrap().ends_with("nope.pgm"));
    }

    #[test]
    fn watershed_mode_writes_diagram() {
        let dir = tempfile::tempdir().unwrap();
        let (field, _) = two_bump(16, 5, 1.0, 0.8, 0.6).unwrap();
        save_field_pgm(&field, dir.path().join("f.pgm"), 65535).unwrap();
        let mut cfg = PipelineConfig::new(dir.path().join("f.pgm"), dir.path().join("out"));
        cfg.mode = Mode::Watershed;
        cfg.thetas = vec![0.1, 0.3];
        cfg.distribution = Some(ThresholdDistribution::new(0.2, 0.05).unwrap());
        let report = cli_run(&cfg).unwrap();
        assert!(report.artifacts.contains(&"diagram.csv".to_string()));
        assert!(report.metrics.is_none());
    }
}
