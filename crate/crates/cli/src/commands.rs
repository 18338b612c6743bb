use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use structseg::metrics::{evaluate, PatchParams};
use structseg::pipeline::{cli_run, error_json, Mode, PipelineConfig};
use structseg::raster::{load_mask, save_field_raw, save_mask, write_text};
use structseg::segment::binarize;
use structseg::synth::{line_grid_with, two_bump, LineGridParams};
use structseg::{Error, Result, ThresholdDistribution};

use crate::service::{serve, AppState};

#[derive(Debug, Parser)]
#[command(name = "structseg", version, about = "Structure-level segmentation, sampling and proofreading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the batch pipeline and write artifacts.
    Run(RunArgs),
    /// Serve the proofreading API over a workspace of image directories.
    Serve(ServeArgs),
    /// Compare a predicted mask with a reference mask.
    Metrics(MetricsArgs),
    /// Write a synthetic image directory.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CliMode {
    Morse,
    Watershed,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Morse => Mode::Morse,
            CliMode::Watershed => Mode::Watershed,
        }
    }
}

/// Flags override values from `--config`.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<CliMode>,
    #[arg(long, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, requires = "sigma")]
    pub mu: Option<f64>,
    #[arg(long, requires = "mu")]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub patch_count: Option<usize>,
    #[arg(long)]
    pub patch_seed: Option<u64>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => {
                let (Some(f), Some(o)) = (&self.field, &self.output_dir) else {
                    return Err(Error::InvalidParams("--field and --output-dir are required without --config".into()));
                };
                PipelineConfig::new(f, o)
            }
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { cfg.$f = v; })* };
        }
        set!(field, output_dir, tau, alpha, beta, k, n, thetas, seed);
        if let Some(g) = &self.gt {
            cfg.gt = Some(g.clone());
        }
        if let Some(m) = self.mode {
            cfg.mode = m.into();
        }
        if let (Some(mu), Some(sigma)) = (self.mu, self.sigma) {
            cfg.distribution = Some(ThresholdDistribution::new(mu, sigma)?);
        }
        cfg.patch = patch(cfg.patch, self.patch_size, self.patch_count, self.patch_seed);
        Ok(cfg)
    }
}

fn patch(base: PatchParams, size: Option<usize>, count: Option<usize>, seed: Option<u64>) -> PatchParams {
    PatchParams {
        size: size.unwrap_or(base.size),
        count: count.unwrap_or(base.count),
        seed: seed.unwrap_or(base.seed),
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "WORKSPACE_DIR", default_value = "workspace")]
    pub workspace: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub patch_count: Option<usize>,
    #[arg(long)]
    pub patch_seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Two maxima joined by one saddle.
    TwoBump {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 16)]
        height: usize,
        #[arg(long, default_value_t = 1.0)]
        peak1: f64,
        #[arg(long, default_value_t = 0.8)]
        peak2: f64,
        #[arg(long, default_value_t = 0.6)]
        saddle: f64,
    },
    /// Noisy grid of lines with its ground truth.
    LineGrid {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 14)]
        spacing: usize,
        #[arg(long, default_value_t = 0.85)]
        line_value: f64,
        #[arg(long, default_value_t = 0.15)]
        bg_value: f64,
        #[arg(long, default_value_t = 0.03)]
        noise_amp: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        weak_segments: usize,
        #[arg(long, default_value_t = 0)]
        distractors: usize,
    },
}

/// Runs a command and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => args.to_config().and_then(|c| cli_run(&c)).and_then(|r| print_json(&r)),
        Command::Metrics(args) => metrics(&args),
        Command::Synth(cmd) => synth(&cmd).and_then(|p| print_json(&serde_json::json!({ "written": p }))),
        Command::Serve(args) => return run_server(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run_server(args: ServeArgs) -> i32 {
    let token = std::env::var("AUTH_TOKEN").ok();
    let state = AppState::new(&args.workspace, token);
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("failed to start runtime: {e}");
            return 1;
        }
    };
    match rt.block_on(serve(state, args.port)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("server failed: {e}");
            1
        }
    }
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let pred = load_mask(&args.pred)?;
    let gt = load_mask(&args.gt)?;
    let params = patch(PatchParams::default(), args.patch_size, args.patch_count, args.patch_seed);
    print_json(&evaluate(&pred, &gt, params)?)
}

/// Writes `field.raw` and `gt.pgm` (plus `expected.json` for two-bump) into
/// the output directory and returns it.
pub fn synth(cmd: &SynthCommand) -> Result<PathBuf> {
    match cmd {
        SynthCommand::TwoBump {
            out,
            width,
            height,
            peak1,
            peak2,
            saddle,
        } => {
            let (field, e) = two_bump(*width, *height, *peak1, *peak2, *saddle)?;
            create(out)?;
            save_field_raw(&field, out.join("field.raw"))?;
            save_mask(&binarize(&field, 0.5), out.join("gt.pgm"))?;
            write_text(out.join("expected.json"), &serde_json::json!({ "persistence": e }).to_string())?;
            Ok(out.clone())
        }
        SynthCommand::LineGrid {
            out,
            width,
            height,
            spacing,
            line_value,
            bg_value,
            noise_amp,
            seed,
            weak_segments,
            distractors,
        } => {
            let mut p = LineGridParams::plain(*width, *height, *spacing, *line_value, *bg_value, *noise_amp, *seed);
            p.weak_segments = *weak_segments;
            p.weak_range = (0.35, 0.55);
            p.distractors = *distractors;
            p.distractor_range = (0.45, 0.65);
            p.distractor_radius = 1.2;
            let g = line_grid_with(&p)?;
            create(out)?;
            save_field_raw(&g.field, out.join("field.raw"))?;
            save_mask(&g.gt, out.join("gt.pgm"))?;
            Ok(out.clone())
        }
    }
}

fn create(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}
