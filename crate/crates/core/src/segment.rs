//! Growing skeletons into segmentations, and uncertainty maps over them.

use std::collections::BTreeMap;

use rand::Rng;

use crate::components::foreground;
use crate::error::{Error, Result};
use crate::family::{Skeleton, SkeletonFamily};
use crate::prob::ThresholdDistribution;
use crate::raster::{ensure_same_dims, BinaryMask2D, ScalarField2D};

/// Default ensemble size for empirical uncertainty.
pub const DEFAULT_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralSegmentation {
    pub mask: BinaryMask2D,
    pub source_skeleton: Skeleton,
    /// Labels (8-connected, from 1) of the kept components of the binary map.
    pub kept_components: Vec<u32>,
}

/// `value >= tau`.
pub fn binarize(field: &ScalarField2D, tau: f64) -> BinaryMask2D {
    let (w, h) = field.dims();
    BinaryMask2D::new(w, h, field.values().iter().map(|&v| v >= tau).collect()).expect("dims come from a valid field")
}

/// Keeps the 8-connected components of `binary` touched by the skeleton and
/// adds the skeleton pixels themselves.
pub fn grow_segmentation(binary: &BinaryMask2D, skeleton: &Skeleton) -> Result<StructuralSegmentation> {
    ensure_same_dims(binary.dims(), skeleton.pixels.dims())?;
    let labels = foreground(binary);
    let mut keep = vec![false; labels.count as usize + 1];
    for p in skeleton.pixels.indices() {
        keep[labels.labels[p] as usize] = true;
    }
    keep[0] = false;
    let (w, h) = binary.dims();
    let bits = labels
        .labels
        .iter()
        .zip(skeleton.pixels.bits())
        .map(|(&l, &s)| s || keep[l as usize])
        .collect();
    Ok(StructuralSegmentation {
        mask: BinaryMask2D::new(w, h, bits)?,
        source_skeleton: skeleton.clone(),
        kept_components: (1..=labels.count).filter(|&l| keep[l as usize]).collect(),
    })
}

/// `n` draws of threshold -> skeleton -> grown segmentation over `binary`.
pub fn sample_from_binary(
    binary: &BinaryMask2D,
    family: &SkeletonFamily,
    dist: &ThresholdDistribution,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<StructuralSegmentation>> {
    if n == 0 {
        return Err(Error::InvalidParams("sample count must be at least 1".into()));
    }
    ensure_same_dims(binary.dims(), family.dims())?;
    let eps_max = family.epsilon_max();
    (0..n)
        .map(|_| grow_segmentation(binary, &family.skeleton_at(dist.sample(eps_max, rng))))
        .collect()
}

/// [`sample_from_binary`] over the field thresholded at 0.5.
pub fn sample_segmentations(
    field: &ScalarField2D,
    family: &SkeletonFamily,
    dist: &ThresholdDistribution,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<StructuralSegmentation>> {
    sample_from_binary(&binarize(field, 0.5), family, dist, n, rng)
}

/// Per-pixel population variance of the sampled masks.
pub fn empirical_uncertainty(samples: &[StructuralSegmentation]) -> Result<ScalarField2D> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (w, h) = samples[0].mask.dims();
    let mut counts = vec![0usize; w * h];
    for s in samples {
        ensure_same_dims((w, h), s.mask.dims())?;
        for p in s.mask.indices() {
            counts[p] += 1;
        }
    }
    let n = samples.len() as f64;
    ScalarField2D::new(
        w,
        h,
        counts
            .into_iter()
            .map(|c| {
                let p = c as f64 / n;
                p * (1.0 - p)
            })
            .collect(),
    )
}

/// Per-branch uncertainty `0.5 - |CDF(eps_b) - 0.5|` and its rasterization.
/// Pixels shared by several branches take the largest value.
pub fn analytic_branch_uncertainty(
    family: &SkeletonFamily,
    dist: &ThresholdDistribution,
) -> Result<(BTreeMap<u32, f64>, ScalarField2D)> {
    if dist.sigma <= 0.0 {
        return Err(Error::DegenerateSigma);
    }
    let (w, h) = family.dims();
    let mut table = BTreeMap::new();
    let mut map = vec![0.0f64; w * h];
    for b in family.branches() {
        let u = dist.uncertainty(b.persistence)?;
        table.insert(b.id, u);
        for &p in &b.pixels {
            map[p as usize] = map[p as usize].max(u);
        }
    }
    Ok((table, ScalarField2D::new(w, h, map)?))
}
