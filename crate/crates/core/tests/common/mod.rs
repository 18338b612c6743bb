#![allow(dead_code)]

//! Independent reference implementations used as test oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use structseg::{BinaryMask2D, ScalarField2D};

pub fn random_field(w: usize, h: usize, seed: u64) -> ScalarField2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarField2D::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
}

pub fn random_mask(w: usize, h: usize, density: f64, seed: u64) -> BinaryMask2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryMask2D::from_fn(w, h, |_, _| rng.random::<f64>() < density).unwrap()
}

/// Rank of each pixel when sorted ascending by `(values, index)`.
pub fn ranks(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut r = vec![0; values.len()];
    for (k, &p) in idx.iter().enumerate() {
        r[p] = k;
    }
    r
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn grid_edges(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                edges.push((p, p + 1));
            }
            if y + 1 < h {
                edges.push((p, p + w));
            }
        }
    }
    edges
}

/// 0-dimensional persistence of the sublevel filtration of `g` over the
/// 4-connected pixel graph, by Kruskal over edges sorted by entry time.
/// Returns `(birth, death)` value pairs, excluding vertices that join an
/// existing component the moment they appear.
pub fn sublevel_pairs(g: &[f64], w: usize, h: usize) -> Vec<(f64, f64)> {
    let r = ranks(g);
    let mut edges = grid_edges(w, h);
    edges.sort_by_key(|&(a, b)| (r[a].max(r[b]), r[a].min(r[b])));
    let mut parent: Vec<usize> = (0..g.len()).collect();
    // root -> oldest pixel of the component
    let oldest: Vec<usize> = (0..g.len()).collect();
    let mut pairs = Vec::new();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        let (oa, ob) = (oldest[ra], oldest[rb]);
        let (young_root, old_root, young) = if r[oa] > r[ob] { (ra, rb, oa) } else { (rb, ra, ob) };
        let entering = if r[a] > r[b] { a } else { b };
        if young != entering {
            pairs.push((g[young], g[entering]));
        }
        parent[young_root] = old_root;
    }
    pairs
}

/// Persistences of [`sublevel_pairs`] on `-f`, i.e. of the superlevel
/// filtration of `f`, sorted.
pub fn superlevel_persistences(f: &ScalarField2D) -> Vec<f64> {
    let g: Vec<f64> = f.values().iter().map(|v| -v).collect();
    let mut p: Vec<f64> = sublevel_pairs(&g, f.width(), f.height())
        .into_iter()
        .map(|(b, d)| d - b)
        .collect();
    p.sort_by(f64::total_cmp);
    p
}

/// 0-dimensional sublevel persistence by bottleneck paths: a local minimum
/// `m` dies at the smallest possible maximum rank along a path from `m` to any
/// pixel of lower rank.
pub fn sublevel_pairs_minimax(g: &[f64], w: usize, h: usize) -> Vec<(f64, f64)> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let r = ranks(g);
    let n = g.len();
    let neighbors = |p: usize| {
        let (x, y) = (p % w, p / w);
        let mut out = Vec::with_capacity(4);
        if x > 0 {
            out.push(p - 1);
        }
        if x + 1 < w {
            out.push(p + 1);
        }
        if y > 0 {
            out.push(p - w);
        }
        if y + 1 < h {
            out.push(p + w);
        }
        out
    };
    let mut pairs = Vec::new();
    for m in 0..n {
        if neighbors(m).iter().any(|&q| r[q] < r[m]) {
            continue;
        }
        if r[m] == 0 {
            continue;
        }
        let mut best = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        best[m] = r[m];
        heap.push(Reverse((r[m], m)));
        while let Some(Reverse((cost, p))) = heap.pop() {
            if cost > best[p] {
                continue;
            }
            if r[p] < r[m] {
                // reached an older pixel: the bottleneck is the death
                let death = (0..n).find(|&q| r[q] == cost).unwrap();
                pairs.push((g[m], g[death]));
                break;
            }
            for q in neighbors(p) {
                let c = cost.max(r[q]);
                if c < best[q] {
                    best[q] = c;
                    heap.push(Reverse((c, q)));
                }
            }
        }
    }
    pairs
}

/// Sort key of a cubical cell given by its corner pixels.
fn cell_key(r: &[usize], corners: &[usize]) -> Vec<usize> {
    let mut k: Vec<usize> = corners.iter().map(|&p| r[p] + 1).collect();
    k.sort_unstable_by(|a, b| b.cmp(a));
    k.resize(4, 0);
    k
}

/// 1-dimensional sublevel persistence of `g` on the cubical complex (cells
/// valued by their highest corner), computed through the dual graph: squares
/// plus one outside node, swept from the top, with edges joining the squares
/// on either side. Pairs whose square and edge share their highest corner are
/// dropped.
pub fn loop_persistences(g: &[f64], w: usize, h: usize) -> Vec<f64> {
    let r = ranks(g);
    let sq = |x: usize, y: usize| y * (w - 1) + x;
    let nsq = (w - 1) * (h - 1);
    let outside = nsq;
    let sq_corners = |s: usize| {
        let (x, y) = (s % (w - 1), s / (w - 1));
        [y * w + x, y * w + x + 1, (y + 1) * w + x, (y + 1) * w + x + 1]
    };
    // (edge corners, square on one side, square on the other)
    let mut edges: Vec<([usize; 2], usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                let up = if y > 0 { sq(x, y - 1) } else { outside };
                let down = if y + 1 < h { sq(x, y) } else { outside };
                edges.push(([p, p + 1], up, down));
            }
            if y + 1 < h {
                let left = if x > 0 { sq(x - 1, y) } else { outside };
                let right = if x + 1 < w { sq(x, y) } else { outside };
                edges.push(([p, p + w], left, right));
            }
        }
    }
    edges.sort_by(|a, b| cell_key(&r, &b.0).cmp(&cell_key(&r, &a.0)));
    let top = |c: &[usize]| *c.iter().max_by_key(|&&p| r[p]).unwrap();
    let mut parent: Vec<usize> = (0..=nsq).collect();
    let birth: Vec<usize> = (0..=nsq).collect();
    let birth_key = |s: usize| -> Vec<usize> {
        if s == outside {
            vec![usize::MAX; 4]
        } else {
            cell_key(&r, &sq_corners(s))
        }
    };
    let mut out = Vec::new();
    for (corners, a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        let (ba, bb) = (birth[ra], birth[rb]);
        let (young_root, old_root, young) = if birth_key(ba) < birth_key(bb) { (ra, rb, ba) } else { (rb, ra, bb) };
        let ytop = top(&sq_corners(young));
        let etop = top(&corners);
        if ytop != etop {
            out.push(g[ytop] - g[etop]);
        }
        parent[young_root] = old_root;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Euler characteristic of the union of closed unit squares at the set
/// pixels: corners - unit edges + pixels.
pub fn closed_square_euler(mask: &BinaryMask2D) -> i64 {
    use std::collections::HashSet;
    let (w, h) = mask.dims();
    let mut corners = HashSet::new();
    let mut hedges = HashSet::new();
    let mut vedges = HashSet::new();
    let mut faces = 0i64;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            faces += 1;
            for (cx, cy) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
                corners.insert((cx, cy));
            }
            hedges.insert((x, y));
            hedges.insert((x, y + 1));
            vedges.insert((x, y));
            vedges.insert((x + 1, y));
        }
    }
    corners.len() as i64 - (hedges.len() + vedges.len()) as i64 + faces
}

/// Foreground-restricted Rand F-score by explicit enumeration of ordered
/// pixel pairs; `pred_labels`/`gt_labels` are per-pixel cluster ids with 0 in
/// `gt_labels` meaning "ignore".
pub fn rand_f_brute(pred_labels: &[u32], gt_labels: &[u32]) -> f64 {
    let fg: Vec<usize> = (0..gt_labels.len()).filter(|&i| gt_labels[i] != 0).collect();
    let (mut both, mut same_pred, mut same_gt) = (0u64, 0u64, 0u64);
    for &i in &fg {
        for &j in &fg {
            let p = pred_labels[i] == pred_labels[j];
            let g = gt_labels[i] == gt_labels[j];
            both += (p && g) as u64;
            same_pred += p as u64;
            same_gt += g as u64;
        }
    }
    let precision = both as f64 / same_pred as f64;
    let recall = both as f64 / same_gt as f64;
    2.0 * precision * recall / (precision + recall)
}
