//! Persistence-filtered watershed on the 4-connected pixel graph.
//!
//! Vertices are swept in ascending order. Each component is represented by its
//! minimum; when an edge would join two components the younger one (higher
//! minimum) is merged only if `t - f(younger) < theta`, otherwise the edge is
//! tagged as a watershed edge. The membrane is the vertex set of all watershed
//! edges.

use serde::{Deserialize, Serialize};

use crate::components::{label, Connectivity};
use crate::cubical::vertex_order;
use crate::error::{Error, Result};
use crate::family::SkeletonFamily;
use crate::morse::{BranchKind, MorseBranch};
use crate::raster::{BinaryMask2D, PersistenceDiagram, ScalarField2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTag {
    Loop,
    Tree,
    Watershed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Watershed {
    pub membrane: BinaryMask2D,
    pub pd: PersistenceDiagram,
    /// `(lower, upper, tag)` in processing order; `lower` was seen first.
    pub tags: Vec<(u32, u32, EdgeTag)>,
}

/// Vertex order shared by every run over the same field.
struct Sweep<'a> {
    field: &'a ScalarField2D,
    order: Vec<u32>,
    rank: Vec<u32>,
}

impl<'a> Sweep<'a> {
    fn new(field: &'a ScalarField2D) -> Self {
        let order = vertex_order(field.values());
        let mut rank = vec![0u32; order.len()];
        for (r, &p) in order.iter().enumerate() {
            rank[p as usize] = r as u32;
        }
        Self { field, order, rank }
    }

    fn run(&self, theta: f64) -> Watershed {
        let (w, h) = self.field.dims();
        let f = self.field.values();
        let n = f.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        let minimum: Vec<u32> = (0..n as u32).collect();
        let mut membrane = BinaryMask2D::empty(w, h);
        let mut pd = PersistenceDiagram::default();
        let mut tags = Vec::new();
        let mut lower = Vec::with_capacity(4);

        for &v in &self.order {
            let vi = v as usize;
            let (x, y) = (vi % w, vi / w);
            lower.clear();
            if x > 0 {
                lower.push(vi - 1);
            }
            if x + 1 < w {
                lower.push(vi + 1);
            }
            if y > 0 {
                lower.push(vi - w);
            }
            if y + 1 < h {
                lower.push(vi + w);
            }
            lower.retain(|&u| self.rank[u] < self.rank[vi]);
            lower.sort_by_key(|&u| self.rank[u]);

            let t = f[vi];
            for &u in &lower {
                let cu = find(&mut parent, u as u32);
                let cv = find(&mut parent, v);
                if cu == cv {
                    tags.push((u as u32, v, EdgeTag::Loop));
                    continue;
                }
                let (mu, mv) = (minimum[cu as usize], minimum[cv as usize]);
                let (young, old, young_min) = if self.rank[mu as usize] > self.rank[mv as usize] {
                    (cu, cv, mu)
                } else {
                    (cv, cu, mv)
                };
                let pers = t - f[young_min as usize];
                if pers >= theta {
                    tags.push((u as u32, v, EdgeTag::Watershed));
                    membrane.set_index(u, true);
                    membrane.set_index(vi, true);
                } else {
                    parent[young as usize] = old;
                    if young_min != v {
                        pd.pairs.push((f[young_min as usize], t));
                    }
                    tags.push((u as u32, v, EdgeTag::Tree));
                }
            }
        }
        Watershed { membrane, pd, tags }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let g = parent[parent[x as usize] as usize];
        parent[x as usize] = g;
        x = g;
    }
    x
}

/// One watershed pass at persistence threshold `theta`. `f64::INFINITY`
/// disables every watershed edge and yields the full sublevel diagram.
pub fn ph_watershed(field: &ScalarField2D, theta: f64) -> Watershed {
    Sweep::new(field).run(theta)
}

/// Membranes for every threshold in `thetas`, turned into a family whose
/// pseudo-branches are the 8-connected groups of membrane pixels sharing the
/// same largest threshold at which they are still on the membrane.
pub fn boundary_skeleton_family(field: &ScalarField2D, thetas: &[f64]) -> Result<SkeletonFamily> {
    if thetas.is_empty() {
        return Err(Error::EmptyThetaList);
    }
    if thetas.iter().any(|t| t.is_nan() || *t < 0.0) || thetas.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::InvalidParams("thetas must be non-negative and ascending".into()));
    }
    let (w, h) = field.dims();
    let sweep = Sweep::new(field);
    let mut level: Vec<Option<usize>> = vec![None; w * h];
    for (i, &theta) in thetas.iter().enumerate() {
        for p in sweep.run(theta).membrane.indices() {
            level[p] = Some(i);
        }
    }

    let mut branches = Vec::new();
    let mut seen_levels: Vec<usize> = level.iter().flatten().copied().collect();
    seen_levels.sort_unstable();
    seen_levels.dedup();
    for i in seen_levels {
        let mask = BinaryMask2D::new(w, h, level.iter().map(|l| *l == Some(i)).collect())?;
        let labels = label(&mask, true, Connectivity::Eight);
        let mut groups: Vec<Vec<u32>> = vec![Vec::new(); labels.count as usize];
        for (p, &l) in labels.labels.iter().enumerate() {
            if l > 0 {
                groups[l as usize - 1].push(p as u32);
            }
        }
        for pixels in groups {
            branches.push(MorseBranch {
                id: branches.len() as u32,
                kind: BranchKind::Membrane,
                saddle: None,
                legs: Vec::new(),
                endpoints: Vec::new(),
                persistence: thetas[i],
                pixels,
            });
        }
    }
    Ok(SkeletonFamily::new(w, h, branches))
}
