//! On-disk image directories served to the proofreading UI.
//!
//! Each image is a subdirectory of the workspace holding `field.raw` or
//! `field.pgm`, optionally `gt.pgm` and `distribution.json`. The service adds
//! `family.json` (cached extraction) and `session.json` (decision state).

use std::fs;
use std::path::{Path, PathBuf};

use structseg::morse::extract_morse_complex;
use structseg::prob::fit_threshold_distribution;
use structseg::proofread::{ProofreadSession, SessionState, Start};
use structseg::raster::{load_field, load_mask, write_text};
use structseg::segment::{analytic_branch_uncertainty, binarize, grow_segmentation};
use structseg::{Error, Result, ScalarField2D, SkeletonFamily, ThresholdDistribution};

pub const FIELD_NAMES: [&str; 2] = ["field.raw", "field.pgm"];
pub const TAU: f64 = 0.5;

pub fn field_path(dir: &Path) -> Option<PathBuf> {
    FIELD_NAMES.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Ids are plain directory names.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Image ids in the workspace, sorted.
pub fn list_images(root: &Path) -> Result<Vec<String>> {
    let entries = match fs::read_dir(root) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(root, e)),
    };
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_err(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if valid_id(&name) && entry.path().is_dir() && field_path(&entry.path()).is_some() {
            ids.push(name);
        }
    }
    ids.sort();
    Ok(ids)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub struct Image {
    pub dir: PathBuf,
    pub dist: ThresholdDistribution,
    pub session: ProofreadSession,
    pub uncertainty: ScalarField2D,
}

impl Image {
    pub fn open(dir: &Path) -> Result<Self> {
        let fpath = field_path(dir).ok_or_else(|| io_err(&dir.join(FIELD_NAMES[0]), std::io::ErrorKind::NotFound.into()))?;
        let field = load_field(fpath)?;
        let gt_path = dir.join("gt.pgm");
        let gt = if gt_path.is_file() { Some(load_mask(&gt_path)?) } else { None };

        let family_path = dir.join("family.json");
        let family = if family_path.is_file() {
            SkeletonFamily::from_json(&fs::read_to_string(&family_path).map_err(|e| io_err(&family_path, e))?)?
        } else {
            let f = extract_morse_complex(&field)?;
            write_text(&family_path, &f.to_json()?)?;
            f
        };

        let dist_path = dir.join("distribution.json");
        let dist: ThresholdDistribution = if dist_path.is_file() {
            let d: ThresholdDistribution =
                serde_json::from_str(&fs::read_to_string(&dist_path).map_err(|e| io_err(&dist_path, e))?)?;
            ThresholdDistribution::new(d.mu, d.sigma)?
        } else if let Some(g) = &gt {
            let binary = binarize(&field, TAU);
            let d = fit_threshold_distribution(g, &family, |s| Ok(grow_segmentation(&binary, s)?.mask))?;
            write_text(&dist_path, &serde_json::to_string_pretty(&d)?)?;
            d
        } else {
            return Err(Error::InvalidParams(format!(
                "{} has neither distribution.json nor gt.pgm",
                dir.display()
            )));
        };
        let (_, uncertainty) = analytic_branch_uncertainty(&family, &dist)?;

        let session_path = dir.join("session.json");
        let session = if session_path.is_file() {
            let saved: SessionState =
                serde_json::from_str(&fs::read_to_string(&session_path).map_err(|e| io_err(&session_path, e))?)?;
            ProofreadSession::restore(family, &field, gt, &saved)?
        } else {
            ProofreadSession::new(family, &field, Start::Distribution(dist), gt, TAU)?
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            dist,
            session,
            uncertainty,
        })
    }

    /// Writes `session.json` through a temporary file and a rename.
    pub fn persist(&self) -> Result<()> {
        let tmp = self.dir.join("session.json.tmp");
        write_text(&tmp, &self.session.to_json()?)?;
        let dst = self.dir.join("session.json");
        fs::rename(&tmp, &dst).map_err(|e| io_err(&dst, e))
    }
}
