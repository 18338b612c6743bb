//! Seeded synthetic fields with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask2D, ScalarField2D};

/// Two maxima on the middle row joined by a single ridge. Returns the field
/// and the persistence of the lower peak, `peak2 - saddle`.
///
/// The middle row follows a piecewise-linear profile through
/// `peak1` at `w/4`, `saddle` at `w/2` and `peak2` at `3w/4`; other rows are
/// the profile scaled by a Gaussian in the row distance.
pub fn two_bump(width: usize, height: usize, peak1: f64, peak2: f64, saddle: f64) -> Result<(ScalarField2D, f64)> {
    let ordered = 0.0 <= saddle && saddle < peak2 && peak2 <= peak1 && peak1 <= 1.0;
    if !ordered {
        return Err(Error::InvalidLevels { peak1, peak2, saddle });
    }
    if width < 8 || height == 0 {
        return Err(Error::InvalidParams(format!("two_bump needs width >= 8 and height >= 1, got {width}x{height}")));
    }
    let (x1, xs, x2) = (width / 4, width / 2, 3 * width / 4);
    let end = 0.5 * saddle;
    let knots = [(0, end), (x1, peak1), (xs, saddle), (x2, peak2), (width - 1, end)];
    let profile = |x: usize| -> f64 {
        let k = knots.windows(2).find(|k| x <= k[1].0).expect("x is inside the knot range");
        let ((xa, va), (xb, vb)) = (k[0], k[1]);
        if x == xb {
            return vb;
        }
        if x == xa {
            return va;
        }
        va + (vb - va) * (x - xa) as f64 / (xb - xa) as f64
    };
    let cy = height / 2;
    let spread = (height as f64 / 4.0).max(1.0);
    let field = ScalarField2D::from_fn(width, height, |x, y| {
        let d = y.abs_diff(cy) as f64;
        if d == 0.0 {
            profile(x)
        } else {
            profile(x) * (-d * d / (2.0 * spread * spread)).exp()
        }
    })?;
    Ok((field, peak2 - saddle))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGridParams {
    pub width: usize,
    pub height: usize,
    pub spacing: usize,
    pub line_value: f64,
    pub bg_value: f64,
    pub noise_amp: f64,
    pub seed: u64,
    /// Grid segments (between neighbouring crossings) drawn at a value drawn
    /// uniformly from `weak_range` instead of `line_value`. Part of the ground
    /// truth.
    pub weak_segments: usize,
    pub weak_range: (f64, f64),
    /// Gaussian blobs centred in grid cells, peak drawn from
    /// `distractor_range`. Not part of the ground truth.
    pub distractors: usize,
    pub distractor_range: (f64, f64),
    pub distractor_radius: f64,
}

impl LineGridParams {
    pub fn plain(width: usize, height: usize, spacing: usize, line_value: f64, bg_value: f64, noise_amp: f64, seed: u64) -> Self {
        Self {
            width,
            height,
            spacing,
            line_value,
            bg_value,
            noise_amp,
            seed,
            weak_segments: 0,
            weak_range: (line_value, line_value),
            distractors: 0,
            distractor_range: (line_value, line_value),
            distractor_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid {
    pub field: ScalarField2D,
    pub gt: BinaryMask2D,
    pub betti: (usize, usize),
    /// Line positions along x (vertical lines) and y (horizontal lines).
    pub columns: Vec<usize>,
    pub rows: Vec<usize>,
}

/// A grid of one-pixel horizontal and vertical lines with uniform noise in
/// `[-noise_amp, noise_amp]`. Lines sit at `spacing/2 + k * spacing` and span
/// only between the outermost lines, so the ground truth has one component
/// and `(#rows - 1) * (#columns - 1)` holes.
pub fn line_grid(
    width: usize,
    height: usize,
    spacing: usize,
    line_value: f64,
    bg_value: f64,
    noise_amp: f64,
    seed: u64,
) -> Result<(ScalarField2D, BinaryMask2D, (usize, usize))> {
    let g = line_grid_with(&LineGridParams::plain(width, height, spacing, line_value, bg_value, noise_amp, seed))?;
    Ok((g.field, g.gt, g.betti))
}

fn positions(extent: usize, spacing: usize) -> Vec<usize> {
    let m = spacing / 2;
    (0..).map(|k| m + k * spacing).take_while(|&p| p + m < extent).collect()
}

pub fn line_grid_with(p: &LineGridParams) -> Result<LineGrid> {
    let invalid = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
    if p.spacing < 3 {
        return invalid("spacing must be at least 3");
    }
    if !(p.noise_amp >= 0.0 && p.line_value > p.bg_value + p.noise_amp) {
        return invalid("need line_value > bg_value + noise_amp");
    }
    if !(0.0..=1.0).contains(&p.bg_value) || !(0.0..=1.0).contains(&p.line_value) {
        return invalid("levels must lie in [0, 1]");
    }
    let (w, h) = (p.width, p.height);
    let columns = positions(w, p.spacing);
    let rows = positions(h, p.spacing);
    if columns.is_empty() || rows.is_empty() {
        return invalid("image too small for one line in each direction");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (x0, x1) = (columns[0], *columns.last().unwrap());
    let (y0, y1) = (rows[0], *rows.last().unwrap());

    let mut clean = vec![p.bg_value; w * h];
    let mut gt = vec![false; w * h];
    for &y in &rows {
        for x in x0..=x1 {
            clean[y * w + x] = p.line_value;
            gt[y * w + x] = true;
        }
    }
    for &x in &columns {
        for y in y0..=y1 {
            clean[y * w + x] = p.line_value;
            gt[y * w + x] = true;
        }
    }

    // segments strictly between neighbouring crossings
    let mut segments: Vec<Vec<usize>> = Vec::new();
    for &y in &rows {
        for c in columns.windows(2) {
            segments.push((c[0] + 1..c[1]).map(|x| y * w + x).collect());
        }
    }
    for &x in &columns {
        for r in rows.windows(2) {
            segments.push((r[0] + 1..r[1]).map(|y| y * w + x).collect());
        }
    }
    for _ in 0..p.weak_segments.min(segments.len()) {
        let i = rng.random_range(0..segments.len());
        let v = uniform(&mut rng, p.weak_range);
        for q in segments.swap_remove(i) {
            clean[q] = v;
        }
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    for r in rows.windows(2) {
        for c in columns.windows(2) {
            cells.push(((c[0] + c[1]) as f64 / 2.0, (r[0] + r[1]) as f64 / 2.0));
        }
    }
    for _ in 0..p.distractors.min(cells.len()) {
        let (cx, cy) = cells.swap_remove(rng.random_range(0..cells.len()));
        let peak = uniform(&mut rng, p.distractor_range);
        let s2 = 2.0 * p.distractor_radius * p.distractor_radius;
        for y in 0..h {
            for x in 0..w {
                if gt[y * w + x] {
                    continue;
                }
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                let v = p.bg_value + (peak - p.bg_value) * (-d2 / s2).exp();
                if v > clean[y * w + x] {
                    clean[y * w + x] = v;
                }
            }
        }
    }

    let values = clean
        .into_iter()
        .map(|v| {
            let n = if p.noise_amp > 0.0 { rng.random_range(-p.noise_amp..=p.noise_amp) } else { 0.0 };
            (v + n).clamp(0.0, 1.0)
        })
        .collect();
    let betti = (1, (rows.len() - 1) * (columns.len() - 1));
    Ok(LineGrid {
        field: ScalarField2D::new(w, h, values)?,
        gt: BinaryMask2D::new(w, h, gt)?,
        betti,
        columns,
        rows,
    })
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::betti_numbers;

    #[test]
    fn two_bump_levels() {
        let (f, e) = two_bump(16, 7, 1.0, 0.8, 0.6).unwrap();
        assert_eq!(e, 0.8 - 0.6);
        let max = f.values().iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        assert!(matches!(two_bump(16, 7, 1.0, 0.6, 0.6), Err(Error::InvalidLevels { .. })));
    }

    #[test]
    fn two_bump_has_one_branch() {
        for (p1, p2, s) in [(1.0, 0.8, 0.6), (0.9, 0.9, 0.3), (0.7, 0.5, 0.0)] {
            let (f, e) = two_bump(20, 9, p1, p2, s).unwrap();
            let fam = crate::morse::extract_morse_complex(&f).unwrap();
            let finite: Vec<f64> = fam.branches().iter().map(|b| b.persistence).filter(|p| p.is_finite()).collect();
            assert_eq!(finite, vec![e], "{p1} {p2} {s}");
        }
    }

    #[test]
    fn three_by_three_grid() {
        let (_, gt, betti) = line_grid(15, 15, 5, 0.9, 0.1, 0.05, 1).unwrap();
        assert_eq!(betti, (1, 4));
        assert_eq!(betti_numbers(&gt), (1, 4));
    }

    #[test]
    fn grid_is_seeded() {
        let a = line_grid(20, 20, 4, 0.9, 0.1, 0.05, 3).unwrap();
        let b = line_grid(20, 20, 4, 0.9, 0.1, 0.05, 3).unwrap();
        let c = line_grid(20, 20, 4, 0.9, 0.1, 0.05, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
        assert!(matches!(line_grid(20, 20, 2, 0.9, 0.1, 0.0, 0), Err(Error::InvalidParams(_))));
        assert!(matches!(line_grid(20, 20, 4, 0.3, 0.2, 0.2, 0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn extras_keep_gt_topology() {
        let mut p = LineGridParams::plain(31, 31, 6, 0.9, 0.1, 0.03, 9);
        p.weak_segments = 3;
        p.weak_range = (0.3, 0.45);
        p.distractors = 4;
        p.distractor_range = (0.6, 0.8);
        p.distractor_radius = 1.0;
        let g = line_grid_with(&p).unwrap();
        assert_eq!(betti_numbers(&g.gt), g.betti);
        assert_eq!(g.betti, (1, 16));
    }
}
