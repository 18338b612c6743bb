//! Pixel and topology metrics between a predicted and a reference mask.
//!
//! Foreground components are 8-connected and background components
//! 4-connected throughout.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::{foreground, label, Connectivity};
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask2D};

/// `2|A n B| / (|A| + |B|)`, with two empty masks scoring 1.
pub fn dice(a: &BinaryMask2D, b: &BinaryMask2D) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let inter = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x && **y).count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Rand F-score over the pixels of `gt`'s foreground. Ground-truth clusters
/// are its foreground components; predicted clusters are the foreground
/// components of `pred`, with all of `pred`'s background as one extra cluster.
pub fn rand_f_score(pred: &BinaryMask2D, gt: &BinaryMask2D) -> Result<f64> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    if gt.is_empty() {
        return Err(Error::EmptyForeground);
    }
    let g = foreground(gt).labels;
    let p = foreground(pred).labels;
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    for i in 0..g.len() {
        if g[i] == 0 {
            continue;
        }
        *joint.entry((g[i], p[i])).or_default() += 1;
        *rows.entry(g[i]).or_default() += 1;
        *cols.entry(p[i]).or_default() += 1;
    }
    let sq = |m: &mut dyn Iterator<Item = u64>| m.map(|n| n as u128 * n as u128).sum::<u128>() as f64;
    let both = sq(&mut joint.values().copied());
    let precision = both / sq(&mut cols.values().copied());
    let recall = both / sq(&mut rows.values().copied());
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Summed in sorted order so the result does not depend on map iteration.
fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    let mut counts: Vec<u64> = counts.filter(|&c| c > 0).collect();
    counts.sort_unstable();
    counts
        .into_iter()
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Variation of information in nats, `H(S|T) + H(T|S)`, where each mask is
/// clustered into its foreground components plus one background cluster.
pub fn voi(pred: &BinaryMask2D, gt: &BinaryMask2D) -> Result<f64> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    let s = foreground(pred).labels;
    let t = foreground(gt).labels;
    let n = s.len() as f64;
    if s.is_empty() {
        return Ok(0.0);
    }
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut hs: HashMap<u32, u64> = HashMap::new();
    let mut ht: HashMap<u32, u64> = HashMap::new();
    for (&a, &b) in s.iter().zip(&t) {
        *joint.entry((a, b)).or_default() += 1;
        *hs.entry(a).or_default() += 1;
        *ht.entry(b).or_default() += 1;
    }
    if joint.len() == hs.len() && joint.len() == ht.len() {
        // the two partitions coincide
        return Ok(0.0);
    }
    let h_joint = entropy(joint.into_values(), n);
    let v = 2.0 * h_joint - (entropy(hs.into_values(), n) + entropy(ht.into_values(), n));
    Ok(v.max(0.0))
}

/// `(b0, b1)`: 8-connected foreground components and enclosed 4-connected
/// background components.
pub fn betti_numbers(mask: &BinaryMask2D) -> (usize, usize) {
    let (w, h) = mask.dims();
    let b0 = foreground(mask).count as usize;
    let padded = BinaryMask2D::from_fn(w + 2, h + 2, |x, y| {
        x > 0 && y > 0 && x <= w && y <= h && mask.get(x - 1, y - 1)
    })
    .expect("padded dims are non-zero");
    let bg = label(&padded, false, Connectivity::Four).count as usize;
    (b0, bg - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchParams {
    pub size: usize,
    pub count: usize,
    pub seed: u64,
}

impl Default for PatchParams {
    fn default() -> Self {
        Self {
            size: 65,
            count: 100,
            seed: 0,
        }
    }
}

/// Mean absolute Betti-number difference over `count` random square patches.
pub fn betti_error(pred: &BinaryMask2D, gt: &BinaryMask2D, params: PatchParams) -> Result<(f64, f64)> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    let (w, h) = gt.dims();
    let s = params.size;
    if s == 0 || s > w.min(h) {
        return Err(Error::PatchTooLarge { patch: s, width: w, height: h });
    }
    if params.count == 0 {
        return Ok((0.0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (mut e0, mut e1) = (0usize, 0usize);
    for _ in 0..params.count {
        let x0 = rng.random_range(0..=w - s);
        let y0 = rng.random_range(0..=h - s);
        let (p0, p1) = betti_numbers(&pred.crop(x0, y0, s, s));
        let (g0, g1) = betti_numbers(&gt.crop(x0, y0, s, s));
        e0 += p0.abs_diff(g0);
        e1 += p1.abs_diff(g1);
    }
    let n = params.count as f64;
    Ok((e0 as f64 / n, e1 as f64 / n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dice: f64,
    /// `None` when the reference has no foreground.
    pub ari: Option<f64>,
    pub voi: f64,
    pub betti0_error: f64,
    pub betti1_error: f64,
    pub patch_params: PatchParams,
}

/// All metrics at once. The patch size is reduced to the smaller image side
/// when the image is smaller than the requested patch.
pub fn evaluate(pred: &BinaryMask2D, gt: &BinaryMask2D, mut params: PatchParams) -> Result<MetricReport> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    let (w, h) = gt.dims();
    params.size = params.size.min(w.min(h));
    let ari = match rand_f_score(pred, gt) {
        Ok(v) => Some(v),
        Err(Error::EmptyForeground) => None,
        Err(e) => return Err(e),
    };
    let (betti0_error, betti1_error) = betti_error(pred, gt, params)?;
    Ok(MetricReport {
        dice: dice(pred, gt)?,
        ari,
        voi: voi(pred, gt)?,
        betti0_error,
        betti1_error,
        patch_params: params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, rows: &[&str]) -> BinaryMask2D {
        BinaryMask2D::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#').unwrap()
    }

    #[test]
    fn dice_cases() {
        let a = mask(4, 2, &["####", "...."]);
        let b = mask(4, 2, &["##..", "##.."]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &mask(4, 2, &["....", "####"])).unwrap(), 0.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.5);
        let e = BinaryMask2D::empty(4, 2);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert!(matches!(dice(&a, &BinaryMask2D::empty(2, 2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rand_split_and_merge_agree() {
        let one = mask(6, 1, &["######"]);
        let split = mask(6, 1, &["###.##"]);
        let v = rand_f_score(&split, &one).unwrap();
        assert!(v < 1.0);
        assert_eq!(rand_f_score(&one, &one).unwrap(), 1.0);
        assert!(matches!(rand_f_score(&one, &BinaryMask2D::empty(6, 1)), Err(Error::EmptyForeground)));
    }

    #[test]
    fn voi_cases() {
        let a = mask(4, 1, &["##.."]);
        assert_eq!(voi(&a, &a).unwrap(), 0.0);
        // complement: same two-way partition with labels swapped
        assert_eq!(voi(&mask(4, 1, &["..##"]), &a).unwrap(), 0.0);
        // refinement: only the conditional entropy of pred given gt remains
        let gt = mask(8, 1, &["########"]);
        let pred = mask(8, 1, &["###..###"]);
        let h = -(2.0 * 0.375 * 0.375f64.ln() + 0.25 * 0.25f64.ln());
        assert!((voi(&pred, &gt).unwrap() - h).abs() < 1e-15);
        assert_eq!(voi(&pred, &gt).unwrap(), voi(&gt, &pred).unwrap());
    }

    #[test]
    fn betti_cases() {
        assert_eq!(betti_numbers(&BinaryMask2D::empty(3, 3)), (0, 0));
        assert_eq!(betti_numbers(&mask(3, 3, &["###", "###", "###"])), (1, 0));
        assert_eq!(betti_numbers(&mask(3, 3, &["###", "#.#", "###"])), (1, 1));
        assert_eq!(betti_numbers(&mask(3, 3, &["#.#", ".#.", "#.#"])), (1, 0));
        // diagonal gap does not let the 4-connected background escape
        assert_eq!(betti_numbers(&mask(4, 4, &[".##.", "#..#", "#..#", ".##."])), (1, 1));
    }

    #[test]
    fn betti_error_cases() {
        let gt = mask(6, 6, &["######", "......", "......", "......", "......", "......"]);
        assert_eq!(betti_error(&gt, &gt, PatchParams { size: 4, count: 10, seed: 7 }).unwrap(), (0.0, 0.0));
        let p = PatchParams { size: 3, count: 20, seed: 7 };
        let other = mask(6, 6, &["#.#.#.", "......", "#.....", "......", "......", "....##"]);
        assert_eq!(betti_error(&other, &gt, p).unwrap(), betti_error(&other, &gt, p).unwrap());
        assert!(matches!(betti_error(&gt, &gt, PatchParams { size: 7, count: 1, seed: 0 }), Err(Error::PatchTooLarge { .. })));
    }
}
