//! Discrete gradient, V-paths and persistence-ordered Morse cancellation.
//!
//! The gradient is built by lower-star processing: every vertex's lower star is
//! paired greedily in the cell order and whatever cannot be paired is critical.
//! Branches are the descending V-paths (vertex/edge alternations) leaving each
//! critical edge. Cancellation then runs in two passes:
//!
//! 1. (vertex, edge) pairs, cheapest first. A saddle whose two descending paths
//!    reach different minima is cancelled against the younger one. Its
//!    persistence is the 0-dimensional persistence of the sublevel filtration.
//! 2. The saddles left over close loops; they are cancelled against critical
//!    squares along ascending (edge, square) V-paths, again cheapest first. A
//!    path that leaves the grid ends at the virtual outside, which never dies.
//!
//! Each branch's geometry is traced in the gradient in which every pair of
//! lower persistence has already been cancelled, so the union of the branches
//! kept at a threshold is the 1-skeleton of the simplified complex.
//!
//! [`extract_morse_complex`] negates the likelihood map first, which turns
//! bright ridges into descending paths between minima of the negated field;
//! persistences are differences of values and so come out on the original
//! scale.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::cubical::{build_complex, CellKey, CubicalCell, CubicalComplex};
use crate::error::{Error, Result};
use crate::family::SkeletonFamily;
use crate::raster::ScalarField2D;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalClass {
    Minimum,
    Saddle,
    Maximum,
}

/// Partial matching of incident cells; unmatched cells are critical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteGradientField {
    pair: Vec<u32>,
}

impl DiscreteGradientField {
    pub fn partner(&self, complex: &CubicalComplex, cell: CubicalCell) -> Option<CubicalCell> {
        match self.pair[complex.index_of(cell)] {
            NONE => None,
            p => Some(complex.cell_at(p as usize)),
        }
    }

    pub fn is_critical(&self, complex: &CubicalComplex, cell: CubicalCell) -> bool {
        self.pair[complex.index_of(cell)] == NONE
    }

    fn critical_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pair.iter().enumerate().filter(|(_, &p)| p == NONE).map(|(c, _)| c)
    }
}

/// Lower-star gradient construction.
pub fn build_gradient(complex: &CubicalComplex) -> DiscreteGradientField {
    let mut pair = vec![NONE; complex.num_cells()];
    let mut classified = vec![false; complex.num_cells()];
    for pixel in 0..complex.width() * complex.height() {
        process_lower_star(complex, pixel, &mut pair, &mut classified);
    }
    DiscreteGradientField { pair }
}

fn process_lower_star(k: &CubicalComplex, pixel: usize, pair: &mut [u32], classified: &mut [bool]) {
    let star = k.lower_star_of(pixel);
    let v = star[0];
    classified[v] = true;
    if star.len() == 1 {
        return;
    }
    let in_star = |c: usize| star.contains(&c);
    let unclassified_faces = |c: usize, classified: &[bool]| -> Vec<usize> {
        k.faces_of(c)
            .iter()
            .copied()
            .filter(|&f| in_star(f) && !classified[f])
            .collect()
    };
    let cofaces_in_star = |c: usize| -> Vec<usize> { k.cofaces_of(c).iter().copied().filter(|&f| in_star(f)).collect() };
    let take_min = |queue: &mut Vec<usize>| -> Option<usize> {
        let (i, _) = queue.iter().enumerate().min_by_key(|(_, &c)| k.key(c))?;
        Some(queue.swap_remove(i))
    };

    let first = star[1..]
        .iter()
        .copied()
        .filter(|&c| k.dim_of(c) == 1)
        .min_by_key(|&c| k.key(c))
        .expect("a non-trivial lower star contains an edge");
    pair[v] = first as u32;
    pair[first] = v as u32;
    classified[first] = true;

    let mut zero: Vec<usize> = star[1..]
        .iter()
        .copied()
        .filter(|&c| k.dim_of(c) == 1 && c != first)
        .collect();
    let mut one: Vec<usize> = cofaces_in_star(first)
        .into_iter()
        .filter(|&c| unclassified_faces(c, classified).len() == 1)
        .collect();

    loop {
        while let Some(a) = take_min(&mut one) {
            if classified[a] {
                continue;
            }
            let faces = unclassified_faces(a, classified);
            if faces.is_empty() {
                zero.push(a);
                continue;
            }
            let f = faces[0];
            pair[a] = f as u32;
            pair[f] = a as u32;
            classified[a] = true;
            classified[f] = true;
            zero.retain(|&c| c != f);
            for c in cofaces_in_star(a).into_iter().chain(cofaces_in_star(f)) {
                if !classified[c] && unclassified_faces(c, classified).len() == 1 && !one.contains(&c) {
                    one.push(c);
                }
            }
        }
        let Some(g) = take_min(&mut zero) else { break };
        if classified[g] {
            continue;
        }
        // critical: left unpaired
        classified[g] = true;
        for c in cofaces_in_star(g) {
            if !classified[c] && unclassified_faces(c, classified).len() == 1 && !one.contains(&c) {
                one.push(c);
            }
        }
    }
}

/// Unpaired cells, classified by dimension.
pub fn critical_cells(complex: &CubicalComplex, dgf: &DiscreteGradientField) -> Vec<(CubicalCell, CriticalClass)> {
    dgf.critical_indices()
        .map(|c| {
            let class = match complex.dim_of(c) {
                0 => CriticalClass::Minimum,
                1 => CriticalClass::Saddle,
                _ => CriticalClass::Maximum,
            };
            (complex.cell_at(c), class)
        })
        .collect()
}

/// Checks incidence, symmetry and acyclicity of a gradient.
pub fn validate_gradient(complex: &CubicalComplex, dgf: &DiscreteGradientField) -> std::result::Result<(), String> {
    let pair = &dgf.pair;
    for (c, &p) in pair.iter().enumerate() {
        if p == NONE {
            continue;
        }
        let p = p as usize;
        if pair[p] as usize != c {
            return Err(format!("pairing of cell {c} is not symmetric"));
        }
        let (lo, hi) = if complex.dim_of(c) < complex.dim_of(p) { (c, p) } else { (p, c) };
        if !complex.faces_of(hi).contains(&lo) {
            return Err(format!("paired cells {lo} and {hi} are not incident"));
        }
    }
    // vertex -> edge -> vertex: every vertex has at most one successor
    let mut state = vec![0u8; pair.len()];
    for start in 0..pair.len() {
        if complex.dim_of(start) != 0 || state[start] != 0 {
            continue;
        }
        let mut trail = Vec::new();
        let mut v = start;
        loop {
            if state[v] == 1 {
                return Err(format!("vertex V-path cycle through cell {v}"));
            }
            if state[v] == 2 {
                break;
            }
            state[v] = 1;
            trail.push(v);
            match pair[v] {
                NONE => break,
                e => v = other_endpoint(complex, e as usize, v),
            }
        }
        for t in trail {
            state[t] = 2;
        }
    }
    // edge -> square -> other edges of that square
    let mut state = vec![0u8; pair.len()];
    for start in 0..pair.len() {
        if complex.dim_of(start) != 1 || state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(&mut (e, ref mut next)) = stack.last_mut() {
            let succ: Vec<usize> = match pair[e] {
                p if p != NONE && complex.dim_of(p as usize) == 2 => complex
                    .faces_of(p as usize)
                    .iter()
                    .copied()
                    .filter(|&f| f != e)
                    .collect(),
                _ => Vec::new(),
            };
            if *next < succ.len() {
                let f = succ[*next];
                *next += 1;
                match state[f] {
                    1 => return Err(format!("edge V-path cycle through cell {f}")),
                    0 => {
                        state[f] = 1;
                        stack.push((f, 0));
                    }
                    _ => {}
                }
            } else {
                state[e] = 2;
                stack.pop();
            }
        }
    }
    Ok(())
}

fn other_endpoint(complex: &CubicalComplex, edge: usize, v: usize) -> usize {
    let faces = complex.faces_of(edge);
    if faces[0] == v {
        faces[1]
    } else {
        faces[0]
    }
}

/// Both descending V-paths of a saddle edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifold {
    pub saddle: CubicalCell,
    /// One leg per endpoint of the saddle; each starts at the saddle and
    /// alternates vertex/edge until it reaches a critical vertex.
    pub legs: Vec<Vec<CubicalCell>>,
    /// The critical vertices the legs end at.
    pub endpoints: Vec<CubicalCell>,
}

impl Manifold {
    /// The cells from one endpoint through the saddle to the other.
    pub fn path_cells(&self) -> Vec<CubicalCell> {
        let mut out: Vec<CubicalCell> = self.legs[0].iter().rev().copied().collect();
        if let Some(leg) = self.legs.get(1) {
            out.extend(leg.iter().skip(1));
        }
        out
    }
}

/// Ascending (edge, square) V-paths of a saddle edge, truncated at the grid
/// boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualManifold {
    pub saddle: CubicalCell,
    pub legs: Vec<Vec<CubicalCell>>,
    /// Critical square at the end of each leg, `None` where it left the grid.
    pub endpoints: Vec<Option<CubicalCell>>,
}

fn saddle_index(complex: &CubicalComplex, dgf: &DiscreteGradientField, saddle: CubicalCell) -> Result<usize> {
    let not_saddle = Error::NotASaddle {
        cx: saddle.cx as usize,
        cy: saddle.cy as usize,
    };
    if !complex.contains(saddle) {
        return Err(Error::OutOfBounds {
            cx: saddle.cx as usize,
            cy: saddle.cy as usize,
        });
    }
    let e = complex.index_of(saddle);
    if complex.dim_of(e) != 1 || dgf.pair[e] != NONE {
        return Err(not_saddle);
    }
    Ok(e)
}

fn descend(complex: &CubicalComplex, pair: &[u32], mut v: usize, path: &mut Vec<usize>) -> usize {
    loop {
        path.push(v);
        match pair[v] {
            NONE => return v,
            e => {
                path.push(e as usize);
                v = other_endpoint(complex, e as usize, v);
            }
        }
    }
}

/// Ascends from edge `e` into `square`; returns the critical square reached or
/// `None` when the path leaves the grid.
fn ascend(complex: &CubicalComplex, pair: &[u32], e: usize, square: Option<usize>, path: &mut Vec<usize>) -> Option<usize> {
    let mut from = e;
    let mut s = square?;
    loop {
        path.push(s);
        let p = pair[s];
        if p == NONE {
            return Some(s);
        }
        let next_edge = p as usize;
        debug_assert_ne!(next_edge, from);
        path.push(next_edge);
        from = next_edge;
        s = complex.cofaces_of(next_edge).iter().copied().find(|&c| c != s)?;
    }
}

fn square_sides(complex: &CubicalComplex, e: usize) -> [Option<usize>; 2] {
    let cof = complex.cofaces_of(e);
    [cof.first().copied(), cof.get(1).copied()]
}

fn trace_legs(complex: &CubicalComplex, pair: &[u32], e: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut legs = Vec::with_capacity(2);
    let mut ends = Vec::with_capacity(2);
    for &v in complex.faces_of(e).iter() {
        let mut leg = vec![e];
        ends.push(descend(complex, pair, v, &mut leg));
        legs.push(leg);
    }
    (legs, ends)
}

/// The stable manifold (ridge) of a critical edge in the given gradient.
pub fn trace_manifold(complex: &CubicalComplex, dgf: &DiscreteGradientField, saddle: CubicalCell) -> Result<Manifold> {
    let e = saddle_index(complex, dgf, saddle)?;
    let (legs, ends) = trace_legs(complex, &dgf.pair, e);
    let to_cells = |v: &Vec<usize>| v.iter().map(|&c| complex.cell_at(c)).collect();
    Ok(Manifold {
        saddle,
        legs: legs.iter().map(to_cells).collect(),
        endpoints: ends.iter().map(|&c| complex.cell_at(c)).collect(),
    })
}

/// The ascending V-paths of a critical edge through its square cofaces.
pub fn trace_dual_manifold(
    complex: &CubicalComplex,
    dgf: &DiscreteGradientField,
    saddle: CubicalCell,
) -> Result<DualManifold> {
    let e = saddle_index(complex, dgf, saddle)?;
    let mut legs = Vec::new();
    let mut endpoints = Vec::new();
    for s in square_sides(complex, e).into_iter().flatten() {
        let mut leg = vec![e];
        let end = ascend(complex, &dgf.pair, e, Some(s), &mut leg);
        legs.push(leg.iter().map(|&c| complex.cell_at(c)).collect());
        endpoints.push(end.map(|c| complex.cell_at(c)));
    }
    Ok(DualManifold {
        saddle,
        legs,
        endpoints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    /// Saddle joining two ridge systems; cancelled against a peak.
    Merge,
    /// Saddle closing a ridge loop; cancelled against the valley it encloses.
    Loop,
    /// Pseudo-branch from a watershed membrane.
    Membrane,
}

/// One branch of the Morse complex with its persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseBranch {
    pub id: u32,
    pub kind: BranchKind,
    pub saddle: Option<CubicalCell>,
    pub legs: Vec<Vec<CubicalCell>>,
    pub endpoints: Vec<CubicalCell>,
    /// Non-negative; `f64::INFINITY` when the saddle is never cancelled.
    #[serde(with = "crate::family::serde_persistence")]
    pub persistence: f64,
    /// Rendered pixels, sorted row-major indices.
    pub pixels: Vec<u32>,
}

impl MorseBranch {
    pub fn path_cells(&self) -> Vec<CubicalCell> {
        let mut out: Vec<CubicalCell> = self.legs.first().map(|l| l.iter().rev().copied().collect()).unwrap_or_default();
        if let Some(leg) = self.legs.get(1) {
            out.extend(leg.iter().skip(1));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.persistence.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Priority {
    persistence: f64,
    key: CellKey,
}

impl Eq for Priority {}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        self.persistence.total_cmp(&other.persistence).then(self.key.cmp(&other.key))
    }
}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let up = self.parent[self.parent[x] as usize];
            self.parent[x] = up;
            x = up as usize;
        }
        x
    }

    /// Makes `root` the representative of `child`'s set.
    fn attach(&mut self, child: usize, root: usize) {
        self.parent[child] = root as u32;
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Merge { saddle: usize, persistence: f64 },
    Loop { saddle: usize, persistence: f64 },
}

impl Event {
    fn persistence(&self) -> f64 {
        match *self {
            Event::Merge { persistence, .. } | Event::Loop { persistence, .. } => persistence,
        }
    }
}

/// Critical vertex reached from every vertex in the initial gradient.
fn initial_minima(complex: &CubicalComplex, pair: &[u32]) -> Vec<u32> {
    let mut memo = vec![NONE; complex.num_cells()];
    let mut trail = Vec::new();
    for pixel in 0..complex.width() * complex.height() {
        let mut v = complex.vertex_cell(pixel);
        while memo[v] == NONE {
            trail.push(v);
            match pair[v] {
                NONE => {
                    memo[v] = v as u32;
                    break;
                }
                e => v = other_endpoint(complex, e as usize, v),
            }
        }
        let m = memo[v];
        for t in trail.drain(..) {
            memo[t] = m;
        }
    }
    memo
}

/// Critical square (or `OUTSIDE`) reached ascending from every square.
fn initial_maxima(complex: &CubicalComplex, pair: &[u32], outside: u32) -> Vec<u32> {
    let mut memo = vec![NONE; complex.num_cells()];
    let mut trail = Vec::new();
    for s0 in 0..complex.num_cells() {
        if complex.dim_of(s0) != 2 || memo[s0] != NONE {
            continue;
        }
        let mut s = s0;
        let end = loop {
            if memo[s] != NONE {
                break memo[s];
            }
            trail.push(s);
            let p = pair[s];
            if p == NONE {
                break s as u32;
            }
            match complex.cofaces_of(p as usize).iter().copied().find(|&c| c != s) {
                Some(next) => s = next,
                None => break outside,
            }
        };
        for t in trail.drain(..) {
            memo[t] = end;
        }
    }
    memo
}

/// Cancels critical pairs in order of persistence and returns every saddle as
/// a branch, sorted by ascending persistence with ids in that order.
pub fn compute_branch_persistence(complex: &CubicalComplex, dgf: &DiscreteGradientField) -> Vec<MorseBranch> {
    let mut events = Vec::new();
    let mut pair = dgf.pair.clone();
    let n = complex.num_cells();
    let key = |c: usize| complex.key(c);
    let vertex_rank = |v: usize| complex.ranks()[complex.pixel_of(v)];

    // pass 1: (vertex, edge)
    let init_min = initial_minima(complex, &pair);
    let mut minima = DisjointSet::new(n);
    let mut heap = BinaryHeap::new();
    let saddles: Vec<usize> = dgf.critical_indices().filter(|&c| complex.dim_of(c) == 1).collect();
    let merge_priority = |e: usize, minima: &mut DisjointSet| -> Option<(Priority, usize, usize)> {
        let f = complex.faces_of(e);
        let a = minima.find(init_min[f[0]] as usize);
        let b = minima.find(init_min[f[1]] as usize);
        if a == b {
            return None;
        }
        let (older, younger) = if vertex_rank(a) < vertex_rank(b) { (a, b) } else { (b, a) };
        let persistence = complex.cell_value(e) - complex.cell_value(younger);
        Some((Priority { persistence, key: key(e) }, younger, older))
    };
    for &e in &saddles {
        if let Some((p, _, _)) = merge_priority(e, &mut minima) {
            heap.push(Reverse((p, e)));
        }
    }
    let mut loops = Vec::new();
    let mut merged = vec![false; n];
    for &e in &saddles {
        if merge_priority(e, &mut minima).is_none() {
            loops.push(e);
        }
    }
    while let Some(Reverse((p, e))) = heap.pop() {
        match merge_priority(e, &mut minima) {
            None => loops.push(e),
            Some((now, _, _)) if now > p => heap.push(Reverse((now, e))),
            Some((now, younger, older)) => {
                minima.attach(younger, older);
                merged[e] = true;
                events.push(Event::Merge {
                    saddle: e,
                    persistence: now.persistence,
                });
            }
        }
    }
    // the vertex/edge reversals of pass 1 never touch edge/square pairs, so
    // pass 2 can run on the untouched edge/square pairing
    loops.sort_unstable();
    loops.dedup();

    // pass 2: (edge, square); index n stands for the outside of the grid
    let outside = n as u32;
    let init_max = initial_maxima(complex, &pair, outside);
    let mut maxima = DisjointSet::new(n + 1);
    let side_end = |s: Option<usize>, maxima: &mut DisjointSet| -> usize {
        match s {
            Some(s) => maxima.find(init_max[s] as usize),
            None => maxima.find(outside as usize),
        }
    };
    let square_order = |s: usize| -> (u8, CellKey) {
        if s == n {
            (1, [u32::MAX; 4])
        } else {
            (0, key(s))
        }
    };
    let loop_priority = |e: usize, maxima: &mut DisjointSet| -> Option<(Priority, usize, usize)> {
        let [s0, s1] = square_sides(complex, e);
        let a = side_end(s0, maxima);
        let b = side_end(s1, maxima);
        if a == b {
            return None;
        }
        let (younger, older) = if square_order(a) < square_order(b) { (a, b) } else { (b, a) };
        let persistence = complex.cell_value(younger) - complex.cell_value(e);
        Some((Priority { persistence, key: key(e) }, younger, older))
    };
    let mut heap = BinaryHeap::new();
    for &e in &loops {
        if let Some((p, _, _)) = loop_priority(e, &mut maxima) {
            heap.push(Reverse((p, e)));
        }
    }
    let mut blocked = Vec::new();
    let mut cancelled = vec![false; n];
    while let Some(Reverse((p, e))) = heap.pop() {
        match loop_priority(e, &mut maxima) {
            None => blocked.push(e),
            Some((now, _, _)) if now > p => heap.push(Reverse((now, e))),
            Some((now, younger, older)) => {
                maxima.attach(younger, older);
                cancelled[e] = true;
                events.push(Event::Loop {
                    saddle: e,
                    persistence: now.persistence,
                });
            }
        }
    }
    for &e in &loops {
        if !cancelled[e] && loop_priority(e, &mut maxima).is_none() && !blocked.contains(&e) {
            blocked.push(e);
        }
    }

    // pass 3: replay the vertex/edge cancellations, tracing each branch just
    // before pairs of its own persistence would be cancelled
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&events[i], &events[j]);
        a.persistence()
            .total_cmp(&b.persistence())
            .then_with(|| match (a, b) {
                // merges keep their pop order; loops are traced before merges of equal persistence
                (Event::Merge { .. }, Event::Merge { .. }) => i.cmp(&j),
                (Event::Loop { .. }, Event::Merge { .. }) => Ordering::Less,
                (Event::Merge { .. }, Event::Loop { .. }) => Ordering::Greater,
                (Event::Loop { saddle: x, .. }, Event::Loop { saddle: y, .. }) => key(*x).cmp(&key(*y)),
            })
    });
    pair.clone_from(&dgf.pair);
    let mut raw: Vec<(Priority, BranchKind, usize, Vec<Vec<usize>>, Vec<usize>)> = Vec::with_capacity(saddles.len());
    for &i in &order {
        match events[i] {
            Event::Merge { saddle, persistence } => {
                let (legs, ends) = trace_legs(complex, &pair, saddle);
                let younger_leg = if vertex_rank(ends[0]) > vertex_rank(ends[1]) { 0 } else { 1 };
                let mut prev = saddle;
                for w in legs[younger_leg][1..].chunks(2) {
                    let x = w[0];
                    pair[x] = prev as u32;
                    pair[prev] = x as u32;
                    if let Some(&next) = w.get(1) {
                        prev = next;
                    }
                }
                raw.push((Priority { persistence, key: key(saddle) }, BranchKind::Merge, saddle, legs, ends));
            }
            Event::Loop { saddle, persistence } => {
                let (legs, ends) = trace_legs(complex, &pair, saddle);
                raw.push((Priority { persistence, key: key(saddle) }, BranchKind::Loop, saddle, legs, ends));
            }
        }
    }
    blocked.sort_by_key(|&e| key(e));
    for e in blocked {
        let (legs, ends) = trace_legs(complex, &pair, e);
        let kind = if merged[e] { BranchKind::Merge } else { BranchKind::Loop };
        raw.push((
            Priority {
                persistence: f64::INFINITY,
                key: key(e),
            },
            kind,
            e,
            legs,
            ends,
        ));
    }
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    raw.into_iter()
        .enumerate()
        .map(|(id, (p, kind, e, legs, ends))| {
            let mut pixels: Vec<u32> = legs
                .iter()
                .flatten()
                .flat_map(|&c| complex.pixels(c).to_vec())
                .map(|p| p as u32)
                .collect();
            pixels.sort_unstable();
            pixels.dedup();
            MorseBranch {
                id: id as u32,
                kind,
                saddle: Some(complex.cell_at(e)),
                legs: legs
                    .iter()
                    .map(|l| l.iter().map(|&c| complex.cell_at(c)).collect())
                    .collect(),
                endpoints: ends.iter().map(|&c| complex.cell_at(c)).collect(),
                persistence: p.persistence,
                pixels,
            }
        })
        .collect()
}

/// Full Morse complex of a likelihood map: ridges of `field`, every saddle a
/// branch.
pub fn extract_morse_complex(field: &ScalarField2D) -> Result<SkeletonFamily> {
    let negated: Vec<f64> = field.values().iter().map(|&v| -v).collect();
    let complex = CubicalComplex::from_values(field.width(), field.height(), negated)?;
    let dgf = build_gradient(&complex);
    let branches = compute_branch_persistence(&complex, &dgf);
    Ok(SkeletonFamily::new(field.width(), field.height(), branches))
}

/// Gradient of the complex built directly on `field` (no negation).
pub fn gradient_of(field: &ScalarField2D) -> Result<(CubicalComplex, DiscreteGradientField)> {
    let complex = build_complex(field)?;
    let dgf = build_gradient(&complex);
    Ok((complex, dgf))
}
