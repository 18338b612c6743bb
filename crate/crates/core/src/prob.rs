//! Gaussian distribution over the persistence threshold, and the losses built
//! on top of it.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Skeleton, SkeletonFamily};
use crate::metrics::dice;
use crate::morse::MorseBranch;
use crate::raster::{ensure_same_dims, BinaryMask2D, ScalarField2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDistribution {
    pub mu: f64,
    pub sigma: f64,
}

impl ThresholdDistribution {
    /// `sigma == 0` is allowed and gives a deterministic sampler.
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParams(format!("bad distribution N({mu}, {sigma})")));
        }
        Ok(Self { mu, sigma })
    }

    fn require_sigma(&self) -> Result<()> {
        if self.sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateSigma)
        }
    }

    /// `clamp(mu + sigma * z, 0, eps_max)`. One normal draw is consumed even
    /// when `sigma == 0`, so streams stay aligned.
    pub fn sample(&self, eps_max: f64, rng: &mut impl Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.mu + self.sigma * z).clamp(0.0, eps_max)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.require_sigma()?;
        Ok(0.5 * libm::erfc(-(x - self.mu) / (self.sigma * std::f64::consts::SQRT_2)))
    }

    /// Probability that a branch with persistence `eps_b` survives a sampled
    /// threshold.
    pub fn probability(&self, eps_b: f64) -> Result<f64> {
        self.require_sigma()?;
        if eps_b == f64::INFINITY {
            return Ok(1.0);
        }
        self.cdf(eps_b)
    }

    pub fn confidence(&self, eps_b: f64) -> Result<f64> {
        Ok((self.probability(eps_b)? - 0.5).abs())
    }

    pub fn uncertainty(&self, eps_b: f64) -> Result<f64> {
        Ok(0.5 - self.confidence(eps_b)?)
    }

    /// Gaussian mass outside `[0, eps_max]`, i.e. what clamping moves.
    pub fn clamped_mass(&self, eps_max: f64) -> Result<f64> {
        Ok(self.cdf(0.0)? + (1.0 - self.cdf(eps_max)?))
    }
}

pub fn sample_epsilon(dist: &ThresholdDistribution, eps_max: f64, rng: &mut impl Rng) -> f64 {
    dist.sample(eps_max, rng)
}

pub fn cdf(dist: &ThresholdDistribution, x: f64) -> Result<f64> {
    dist.cdf(x)
}

pub fn branch_probability(dist: &ThresholdDistribution, branch: &MorseBranch) -> Result<f64> {
    dist.probability(branch.persistence)
}

pub fn branch_confidence(dist: &ThresholdDistribution, branch: &MorseBranch) -> Result<f64> {
    dist.confidence(branch.persistence)
}

pub fn branch_uncertainty(dist: &ThresholdDistribution, branch: &MorseBranch) -> Result<f64> {
    dist.uncertainty(branch.persistence)
}

/// `KL(q || p)` for univariate Gaussians.
pub fn kl_gaussian(q: &ThresholdDistribution, p: &ThresholdDistribution) -> Result<f64> {
    q.require_sigma()?;
    p.require_sigma()?;
    let d = q.mu - p.mu;
    let kl = (p.sigma / q.sigma).ln() + (q.sigma * q.sigma + d * d) / (2.0 * p.sigma * p.sigma) - 0.5;
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub mc_samples: usize,
    pub bce_clip: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 10.0,
            mc_samples: 10,
            bce_clip: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.beta >= 0.0
            && self.mc_samples >= 1
            && self.bce_clip > 0.0
            && self.bce_clip < 0.5;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("bad loss config {self:?}")))
        }
    }
}

/// Anything usable as a BCE target: hard masks or soft fields.
pub trait BceTarget {
    fn dims(&self) -> (usize, usize);
    fn target(&self, index: usize) -> f64;
}

impl BceTarget for BinaryMask2D {
    fn dims(&self) -> (usize, usize) {
        BinaryMask2D::dims(self)
    }

    fn target(&self, index: usize) -> f64 {
        if self.bits()[index] {
            1.0
        } else {
            0.0
        }
    }
}

impl BceTarget for ScalarField2D {
    fn dims(&self) -> (usize, usize) {
        ScalarField2D::dims(self)
    }

    fn target(&self, index: usize) -> f64 {
        self.values()[index]
    }
}

/// Mean binary cross-entropy over the pixels selected by `mask` (all pixels
/// when `None`). An empty selection gives 0.
pub fn bce(target: &impl BceTarget, pred: &ScalarField2D, mask: Option<&BinaryMask2D>, clip: f64) -> Result<f64> {
    ensure_same_dims(target.dims(), pred.dims())?;
    if let Some(m) = mask {
        ensure_same_dims(m.dims(), pred.dims())?;
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, &p) in pred.values().iter().enumerate() {
        if mask.is_some_and(|m| !m.bits()[i]) {
            continue;
        }
        let p = p.clamp(clip, 1.0 - clip);
        let y = target.target(i);
        sum -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Masked BCE for a single threshold.
pub fn skeleton_loss_at(field: &ScalarField2D, gt: &BinaryMask2D, family: &SkeletonFamily, epsilon: f64, clip: f64) -> Result<f64> {
    ensure_same_dims(field.dims(), family.dims())?;
    let skeleton = family.skeleton_at(epsilon);
    bce(gt, field, Some(&skeleton.pixels), clip)
}

/// Monte Carlo estimate of the expected masked BCE over `K` sampled
/// thresholds. The running mean is exact for constant sequences, so `sigma = 0`
/// reproduces [`skeleton_loss_at`] bit for bit.
pub fn skeleton_loss_mc(
    field: &ScalarField2D,
    gt: &BinaryMask2D,
    family: &SkeletonFamily,
    dist: &ThresholdDistribution,
    cfg: &LossConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    cfg.validate()?;
    ensure_same_dims(field.dims(), gt.dims())?;
    ensure_same_dims(field.dims(), family.dims())?;
    let eps_max = family.epsilon_max();
    let mut mean = 0.0;
    for k in 1..=cfg.mc_samples {
        let eps = dist.sample(eps_max, rng);
        let x = skeleton_loss_at(field, gt, family, eps, cfg.bce_clip)?;
        mean += (x - mean) / k as f64;
    }
    Ok(mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub seg: f64,
    pub skeleton: f64,
    pub kl: f64,
}

/// `seg + alpha * skeleton + beta * KL(q || p)`.
pub fn total_loss(
    field: &ScalarField2D,
    gt: &BinaryMask2D,
    family: &SkeletonFamily,
    q: &ThresholdDistribution,
    p: &ThresholdDistribution,
    cfg: &LossConfig,
    rng: &mut impl Rng,
) -> Result<LossParts> {
    let seg = bce(gt, field, None, cfg.bce_clip)?;
    let skeleton = skeleton_loss_mc(field, gt, family, q, cfg, rng)?;
    let kl = kl_gaussian(q, p)?;
    Ok(LossParts {
        total: seg + cfg.alpha * skeleton + cfg.beta * kl,
        seg,
        skeleton,
        kl,
    })
}

/// Candidate thresholds: every finite level, the midpoints between
/// consecutive levels, and `epsilon_max` (the empty finite skeleton).
pub fn candidate_thresholds(family: &SkeletonFamily) -> Vec<f64> {
    let levels = family.finite_levels();
    let mut out = Vec::with_capacity(2 * levels.len() + 1);
    for (i, &l) in levels.iter().enumerate() {
        if i > 0 {
            out.push(0.5 * (levels[i - 1] + l));
        }
        out.push(l);
    }
    out.push(family.epsilon_max());
    out
}

/// Picks `mu` as the candidate threshold maximizing the Dice score of the
/// grown skeleton against `gt` (smallest on ties), and `sigma` as half the
/// width of the contiguous candidate run around `mu` scoring within 0.01 of
/// the best, floored at 1e-3.
pub fn fit_threshold_distribution(
    gt: &BinaryMask2D,
    family: &SkeletonFamily,
    mut grow: impl FnMut(&Skeleton) -> Result<BinaryMask2D>,
) -> Result<ThresholdDistribution> {
    ensure_same_dims(gt.dims(), family.dims())?;
    let cands = candidate_thresholds(family);
    let mut scores = Vec::with_capacity(cands.len());
    for &eps in &cands {
        let grown = grow(&family.skeleton_at(eps))?;
        scores.push(dice(&grown, gt)?);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let floor = scores[best] - 0.01;
    let mut lo = best;
    while lo > 0 && scores[lo - 1] >= floor {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < scores.len() && scores[hi + 1] >= floor {
        hi += 1;
    }
    let sigma = (0.5 * (cands[hi] - cands[lo])).max(1e-3);
    ThresholdDistribution::new(cands[best], sigma)
}
