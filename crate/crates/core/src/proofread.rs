//! Branch-level proofreading: sessions with keep/drop decisions and the click
//! simulation comparing inspection orders.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SkeletonFamily;
use crate::metrics::voi;
use crate::prob::ThresholdDistribution;
use crate::raster::{ensure_same_dims, BinaryMask2D, ScalarField2D};
use crate::segment::{binarize, grow_segmentation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Keep,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Drop,
    Undecided,
}

/// `true` marks a branch that belongs to the true structure.
pub type BranchLabels = BTreeMap<u32, bool>;

/// A branch is true structure when at least `rho` of its pixels lie within
/// Chebyshev distance `tol` of the ground-truth foreground.
pub fn label_branches(family: &SkeletonFamily, gt: &BinaryMask2D, rho: f64, tol: usize) -> Result<BranchLabels> {
    ensure_same_dims(family.dims(), gt.dims())?;
    let near = dilate(gt, tol);
    Ok(family
        .branches()
        .iter()
        .map(|b| {
            let hits = b.pixels.iter().filter(|&&p| near[p as usize]).count();
            (b.id, hits as f64 >= rho * b.pixels.len() as f64)
        })
        .collect())
}

/// Square dilation by `r`, done separably.
fn dilate(mask: &BinaryMask2D, r: usize) -> Vec<bool> {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let mut rows = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = (lo..=hi).any(|xx| bits[y * w + xx]);
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            out[y * w + x] = (lo..=hi).any(|yy| rows[yy * w + x]);
        }
    }
    out
}

/// Where a session starts: a fixed threshold or a distribution, whose mean
/// is used as the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Epsilon(f64),
    Distribution(ThresholdDistribution),
}

impl Start {
    pub fn epsilon(&self) -> f64 {
        match self {
            Start::Epsilon(e) => *e,
            Start::Distribution(d) => d.mu,
        }
    }
}

/// The serializable part of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub start: Start,
    pub tau: f64,
    pub decisions: BTreeMap<u32, Decision>,
    pub click_log: Vec<(u32, Action)>,
    pub voi_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProofreadSession {
    family: SkeletonFamily,
    binary: BinaryMask2D,
    gt: Option<BinaryMask2D>,
    state: SessionState,
    segmentation: BinaryMask2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub segmentation: BinaryMask2D,
    pub voi: Option<f64>,
}

pub fn new_session(
    family: SkeletonFamily,
    field: &ScalarField2D,
    start: Start,
    gt: Option<BinaryMask2D>,
) -> Result<ProofreadSession> {
    ProofreadSession::new(family, field, start, gt, 0.5)
}

impl ProofreadSession {
    pub fn new(family: SkeletonFamily, field: &ScalarField2D, start: Start, gt: Option<BinaryMask2D>, tau: f64) -> Result<Self> {
        ensure_same_dims(family.dims(), field.dims())?;
        if let Some(g) = &gt {
            ensure_same_dims(g.dims(), field.dims())?;
        }
        let binary = binarize(field, tau);
        let mut session = Self {
            family,
            binary,
            gt,
            state: SessionState {
                start,
                tau,
                decisions: BTreeMap::new(),
                click_log: Vec::new(),
                voi_history: Vec::new(),
            },
            segmentation: BinaryMask2D::empty(field.width(), field.height()),
        };
        session.segmentation = session.compute_segmentation()?;
        if let Some(v) = session.current_voi()? {
            session.state.voi_history.push(v);
        }
        Ok(session)
    }

    /// Rebuilds a session from saved state by replaying its click log.
    pub fn restore(family: SkeletonFamily, field: &ScalarField2D, gt: Option<BinaryMask2D>, saved: &SessionState) -> Result<Self> {
        let mut s = Self::new(family, field, saved.start, gt, saved.tau)?;
        for &(id, action) in &saved.click_log {
            s.apply_decision(id, action)?;
        }
        Ok(s)
    }

    pub fn family(&self) -> &SkeletonFamily {
        &self.family
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn gt(&self) -> Option<&BinaryMask2D> {
        self.gt.as_ref()
    }

    pub fn epsilon(&self) -> f64 {
        self.state.start.epsilon()
    }

    pub fn segmentation(&self) -> &BinaryMask2D {
        &self.segmentation
    }

    pub fn clicks(&self) -> usize {
        self.state.click_log.len()
    }

    pub fn decision(&self, id: u32) -> Decision {
        self.state.decisions.get(&id).copied().unwrap_or(Decision::Undecided)
    }

    pub fn is_included(&self, id: u32) -> Result<bool> {
        let b = self.family.branch(id).ok_or(Error::UnknownBranch(id))?;
        Ok(match self.decision(id) {
            Decision::Keep => true,
            Decision::Drop => false,
            Decision::Undecided => b.persistence >= self.epsilon(),
        })
    }

    /// Kept branches plus undecided ones at or above the session threshold.
    pub fn effective_ids(&self) -> std::collections::BTreeSet<u32> {
        self.family
            .branches()
            .iter()
            .filter(|b| self.is_included(b.id).unwrap_or(false))
            .map(|b| b.id)
            .collect()
    }

    fn compute_segmentation(&self) -> Result<BinaryMask2D> {
        let skeleton = self.family.skeleton_of(self.effective_ids());
        Ok(grow_segmentation(&self.binary, &skeleton)?.mask)
    }

    pub fn current_voi(&self) -> Result<Option<f64>> {
        self.gt.as_ref().map(|g| voi(&self.segmentation, g)).transpose()
    }

    pub fn apply_decision(&mut self, id: u32, action: Action) -> Result<DecisionOutcome> {
        let included = self.is_included(id)?;
        if included == (action == Action::Keep) {
            return Err(Error::NoOpDecision {
                branch: id,
                state: if included { "included" } else { "excluded" },
            });
        }
        let decision = match action {
            Action::Keep => Decision::Keep,
            Action::Drop => Decision::Drop,
        };
        self.state.decisions.insert(id, decision);
        self.state.click_log.push((id, action));
        self.segmentation = self.compute_segmentation()?;
        let voi = self.current_voi()?;
        if let Some(v) = voi {
            self.state.voi_history.push(v);
        }
        Ok(DecisionOutcome {
            segmentation: self.segmentation.clone(),
            voi,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.state)?)
    }
}

/// Branch ids by descending analytic uncertainty; ties go to the higher
/// persistence, then the lower id.
pub fn uncertainty_order(family: &SkeletonFamily, dist: &ThresholdDistribution) -> Result<Vec<u32>> {
    let mut rows = Vec::with_capacity(family.len());
    for b in family.branches() {
        rows.push((dist.uncertainty(b.persistence)?, b.persistence, b.id));
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    Ok(rows.into_iter().map(|r| r.2).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickOrder {
    UncertaintyDesc,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// VOI before any click, then after each click.
    pub voi_curve: Vec<f64>,
    pub clicks: usize,
    /// Branches looked at, including the ones skipped as already correct.
    pub inspections: usize,
    pub final_segmentation: BinaryMask2D,
}

impl Simulation {
    /// Clicks needed until VOI stays within `tol` of its final value.
    pub fn clicks_to_reach(&self, tol: f64) -> usize {
        let last = *self.voi_curve.last().expect("curve has the initial point");
        let mut k = self.voi_curve.len() - 1;
        while k > 0 && (self.voi_curve[k - 1] - last).abs() <= tol {
            k -= 1;
        }
        k
    }
}

/// Walks the branches in `order`, correcting each one whose inclusion
/// disagrees with its label under [`label_branches`] defaults. Already-correct
/// branches cost no click.
pub fn simulate(
    field: &ScalarField2D,
    family: &SkeletonFamily,
    dist: &ThresholdDistribution,
    gt: &BinaryMask2D,
    order: ClickOrder,
    max_clicks: usize,
) -> Result<Simulation> {
    let labels = label_branches(family, gt, 0.5, 2)?;
    simulate_labeled(field, family, dist, gt, &labels, order, max_clicks)
}

/// [`simulate`] against caller-supplied labels.
pub fn simulate_labeled(
    field: &ScalarField2D,
    family: &SkeletonFamily,
    dist: &ThresholdDistribution,
    gt: &BinaryMask2D,
    labels: &BranchLabels,
    order: ClickOrder,
    max_clicks: usize,
) -> Result<Simulation> {
    if let Some(b) = family.branches().iter().find(|b| !labels.contains_key(&b.id)) {
        return Err(Error::UnknownBranch(b.id));
    }
    let ids = match order {
        ClickOrder::UncertaintyDesc => uncertainty_order(family, dist)?,
        ClickOrder::Random(seed) => {
            let mut ids: Vec<u32> = family.branches().iter().map(|b| b.id).collect();
            ids.sort_unstable();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            ids
        }
    };
    let mut session = ProofreadSession::new(family.clone(), field, Start::Distribution(*dist), Some(gt.clone()), 0.5)?;
    let mut inspections = 0;
    for id in ids {
        if session.clicks() >= max_clicks {
            break;
        }
        inspections += 1;
        let want = labels[&id];
        if session.is_included(id)? != want {
            session.apply_decision(id, if want { Action::Keep } else { Action::Drop })?;
        }
    }
    Ok(Simulation {
        voi_curve: session.state.voi_history.clone(),
        clicks: session.clicks(),
        inspections,
        final_segmentation: session.segmentation.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morse::{BranchKind, MorseBranch};

    fn branch(id: u32, persistence: f64, pixels: Vec<u32>) -> MorseBranch {
        MorseBranch {
            id,
            kind: BranchKind::Merge,
            saddle: None,
            legs: vec![],
            endpoints: vec![],
            persistence,
            pixels,
        }
    }

    /// 6x1: a true branch on pixels 0-1 (weak) and a false one on 4-5.
    fn setup() -> (SkeletonFamily, ScalarField2D, BinaryMask2D) {
        let fam = SkeletonFamily::new(6, 1, vec![branch(0, 0.1, vec![0, 1]), branch(1, 0.5, vec![4, 5])]);
        let field = ScalarField2D::new(6, 1, vec![0.4, 0.4, 0.0, 0.0, 0.8, 0.8]).unwrap();
        let gt = BinaryMask2D::new(6, 1, vec![true, true, false, false, false, false]).unwrap();
        (fam, field, gt)
    }

    #[test]
    fn labels_use_tolerance() {
        let (fam, _, gt) = setup();
        let l = label_branches(&fam, &gt, 0.5, 2).unwrap();
        assert_eq!(l[&0], true);
        assert_eq!(l[&1], false);
        // pixel 4 is within distance 3 of pixel 1
        let l = label_branches(&fam, &gt, 0.5, 3).unwrap();
        assert_eq!(l[&1], true);
        let l = label_branches(&fam, &gt, 0.51, 3).unwrap();
        assert_eq!(l[&1], false);
    }

    #[test]
    fn decisions_and_noops() {
        let (fam, field, gt) = setup();
        let mut s = new_session(fam, &field, Start::Epsilon(0.3), Some(gt)).unwrap();
        assert_eq!(s.segmentation().bits(), &[false, false, false, false, true, true]);
        assert_eq!(s.state().voi_history.len(), 1);
        assert!(matches!(s.apply_decision(0, Action::Drop), Err(Error::NoOpDecision { branch: 0, .. })));
        assert!(matches!(s.apply_decision(9, Action::Keep), Err(Error::UnknownBranch(9))));
        let before = s.state().voi_history[0];
        let out = s.apply_decision(0, Action::Keep).unwrap();
        assert!(out.voi.unwrap() < before);
        let out = s.apply_decision(1, Action::Drop).unwrap();
        assert_eq!(out.voi, Some(0.0));
        assert_eq!(s.clicks(), 2);
        assert_eq!(s.state().voi_history.len(), 3);
        s.apply_decision(1, Action::Keep).unwrap();
        assert_eq!(s.segmentation().bits(), &[true, true, false, false, true, true]);
    }

    #[test]
    fn restore_replays_history() {
        let (fam, field, gt) = setup();
        let mut s = new_session(fam.clone(), &field, Start::Epsilon(0.3), Some(gt.clone())).unwrap();
        s.apply_decision(0, Action::Keep).unwrap();
        s.apply_decision(1, Action::Drop).unwrap();
        let saved: SessionState = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        let r = ProofreadSession::restore(fam, &field, Some(gt), &saved).unwrap();
        assert_eq!(r.state(), s.state());
        assert_eq!(r.segmentation(), s.segmentation());
    }

    #[test]
    fn no_gt_session() {
        let (fam, field, _) = setup();
        let mut s = new_session(fam, &field, Start::Epsilon(0.0), None).unwrap();
        assert!(s.state().voi_history.is_empty());
        assert_eq!(s.effective_ids().len(), 2);
        assert_eq!(s.apply_decision(1, Action::Drop).unwrap().voi, None);
    }

    #[test]
    fn simulation_orders_share_endpoint() {
        let (fam, field, gt) = setup();
        let d = ThresholdDistribution::new(0.3, 0.1).unwrap();
        let a = simulate(&field, &fam, &d, &gt, ClickOrder::UncertaintyDesc, usize::MAX).unwrap();
        let b = simulate(&field, &fam, &d, &gt, ClickOrder::Random(5), usize::MAX).unwrap();
        assert_eq!(a.final_segmentation, b.final_segmentation);
        assert_eq!(a.clicks, 2);
        assert_eq!(a.voi_curve.len(), 3);
        assert_eq!(*a.voi_curve.last().unwrap(), 0.0);
        assert_eq!(a.clicks_to_reach(0.05), 2);
    }
}
