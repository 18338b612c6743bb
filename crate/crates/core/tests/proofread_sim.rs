use structseg::metrics::voi;
use structseg::morse::extract_morse_complex;
use structseg::proofread::{label_branches, new_session, simulate, simulate_labeled, Action, BranchLabels, ClickOrder, ProofreadSession, Start};
use structseg::segment::{binarize, grow_segmentation};
use structseg::synth::{line_grid_with, two_bump, LineGridParams};
use structseg::ThresholdDistribution;

#[test]
fn keeping_a_missing_branch_lowers_voi() {
    // saddle below 0.5: the binary map has two blobs the ridge joins
    let (field, e) = two_bump(24, 9, 1.0, 0.8, 0.3).unwrap();
    let fam = extract_morse_complex(&field).unwrap();
    assert_eq!(fam.len(), 1);
    let id = fam.branches()[0].id;
    let gt = grow_segmentation(&binarize(&field, 0.5), &fam.skeleton_at(0.0)).unwrap().mask;
    let mut s = new_session(fam, &field, Start::Epsilon(e + 0.1), Some(gt)).unwrap();
    let before = s.current_voi().unwrap().unwrap();
    assert!(before > 0.0);
    let out = s.apply_decision(id, Action::Keep).unwrap();
    assert_eq!(out.voi, Some(0.0));
    let back = s.apply_decision(id, Action::Drop).unwrap();
    assert_eq!(back.voi, Some(before));
    assert!(back.segmentation.is_empty());
}

fn instance(seed: u64) -> LineGridParams {
    let mut p = LineGridParams::plain(40, 40, 12, 0.85, 0.15, 0.03, seed);
    p.weak_segments = 2;
    p.weak_range = (0.35, 0.55);
    p.distractors = 2;
    p.distractor_range = (0.45, 0.65);
    p.distractor_radius = 1.2;
    p
}

#[test]
fn simulation_endpoint_and_replay() {
    let dist = ThresholdDistribution::new(0.3, 0.1).unwrap();
    for seed in 0..5 {
        let g = line_grid_with(&instance(seed)).unwrap();
        let fam = extract_morse_complex(&g.field).unwrap();
        let labels = label_branches(&fam, &g.gt, 1.0, 0).unwrap();
        let sim = simulate_labeled(&g.field, &fam, &dist, &g.gt, &labels, ClickOrder::UncertaintyDesc, usize::MAX).unwrap();
        let wanted = labels.iter().filter(|(_, &v)| v).map(|(&k, _)| k).collect();
        let recon = grow_segmentation(&binarize(&g.field, 0.5), &fam.skeleton_of(wanted)).unwrap().mask;
        assert_eq!(sim.final_segmentation, recon);
        assert_eq!(*sim.voi_curve.last().unwrap(), voi(&recon, &g.gt).unwrap());
        assert_eq!(sim.voi_curve.len(), sim.clicks + 1);
        assert!(sim.inspections >= sim.clicks);

        // replaying the same corrections on a fresh session gives the same curve
        let mut s = ProofreadSession::new(fam.clone(), &g.field, Start::Distribution(dist), Some(g.gt.clone()), 0.5).unwrap();
        for b in fam.branches() {
            if s.is_included(b.id).unwrap() != labels[&b.id] {
                s.apply_decision(b.id, if labels[&b.id] { Action::Keep } else { Action::Drop }).unwrap();
            }
        }
        let again = ProofreadSession::restore(fam.clone(), &g.field, Some(g.gt.clone()), s.state()).unwrap();
        assert_eq!(again.state(), s.state());
        assert_eq!(again.segmentation(), &recon);

        // max_clicks stops early
        let short = simulate_labeled(&g.field, &fam, &dist, &g.gt, &labels, ClickOrder::Random(3), 2).unwrap();
        assert_eq!(short.clicks, sim.clicks.min(2));
    }
}

#[test]
fn nothing_to_correct_gives_one_point() {
    let g = line_grid_with(&instance(1)).unwrap();
    let fam = extract_morse_complex(&g.field).unwrap();
    let dist = ThresholdDistribution::new(0.3, 0.1).unwrap();
    let agree: BranchLabels = fam.branches().iter().map(|b| (b.id, b.persistence >= dist.mu)).collect();
    let sim = simulate_labeled(&g.field, &fam, &dist, &g.gt, &agree, ClickOrder::UncertaintyDesc, usize::MAX).unwrap();
    assert_eq!(sim.voi_curve.len(), 1);
    assert_eq!(sim.clicks_to_reach(0.05), 0);
    // the default label rule still runs
    assert!(simulate(&g.field, &fam, &dist, &g.gt, ClickOrder::Random(0), 5).unwrap().clicks <= 5);
}
