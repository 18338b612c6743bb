mod common;

use common::{loop_persistences, random_field, sublevel_pairs, sublevel_pairs_minimax, superlevel_persistences};
use structseg::cubical::build_complex;
use structseg::morse::{build_gradient, extract_morse_complex, validate_gradient, BranchKind};

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn kruskal_and_minimax_oracles_agree() {
    for seed in 0..50 {
        let f = random_field(9, 7, seed);
        let g: Vec<f64> = f.values().iter().map(|v| -v).collect();
        let a = sorted(sublevel_pairs(&g, 9, 7).iter().map(|(b, d)| d - b).collect());
        let b = sorted(sublevel_pairs_minimax(&g, 9, 7).iter().map(|(b, d)| d - b).collect());
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn branch_persistence_matches_oracles() {
    for seed in 0..100 {
        let f = random_field(16, 16, 1000 + seed);
        let family = extract_morse_complex(&f).unwrap();
        let merge = sorted(
            family.branches().iter().filter(|b| b.kind == BranchKind::Merge && b.persistence.is_finite()).map(|b| b.persistence).collect(),
        );
        let loops = sorted(
            family.branches().iter().filter(|b| b.kind == BranchKind::Loop && b.persistence.is_finite()).map(|b| b.persistence).collect(),
        );
        let g: Vec<f64> = f.values().iter().map(|v| -v).collect();
        assert_eq!(merge, superlevel_persistences(&f), "merge, seed {seed}");
        assert_eq!(loops, loop_persistences(&g, 16, 16), "loop, seed {seed}");
        // a rectangle has no essential cycles and one essential component,
        // so every saddle is cancelled
        assert!(family.branches().iter().all(|b| b.persistence.is_finite()), "seed {seed}");
        assert_eq!(family.len(), merge.len() + loops.len(), "seed {seed}");
    }
}

#[test]
fn gradient_is_acyclic_up_to_32() {
    for (i, &(w, h)) in [(1, 1), (1, 9), (9, 1), (2, 2), (5, 3), (17, 11), (32, 32)].iter().enumerate() {
        let f = random_field(w, h, i as u64);
        let c = build_complex(&f).unwrap();
        let dgf = build_gradient(&c);
        validate_gradient(&c, &dgf).unwrap();
    }
}

#[test]
fn extraction_is_deterministic() {
    let f = random_field(20, 14, 7);
    let a = extract_morse_complex(&f).unwrap().to_json().unwrap();
    let b = extract_morse_complex(&f).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
