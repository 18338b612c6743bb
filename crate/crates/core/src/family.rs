//! The persistence-ordered branch set and the skeletons it induces.
//!
//! A branch survives the threshold `epsilon` iff its persistence is at least
//! `epsilon`, so raising the threshold only ever removes branches and the
//! skeletons form a nested chain.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morse::MorseBranch;
use crate::raster::BinaryMask2D;

/// Serializes persistences with `"inf"` for the never-cancelled sentinel.
pub mod serde_persistence {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    other => Err(E::custom(format!("unexpected persistence {other:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFamily {
    width: usize,
    height: usize,
    branches: Vec<MorseBranch>,
    #[serde(skip)]
    slot: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub branch_ids: BTreeSet<u32>,
    pub pixels: BinaryMask2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub id: u32,
    #[serde(with = "serde_persistence")]
    pub persistence: f64,
    pub pixel_count: usize,
    pub endpoints: Vec<(u32, u32)>,
}

impl SkeletonFamily {
    /// Sorts `branches` by ascending persistence (ties by id); ids are kept.
    pub fn new(width: usize, height: usize, mut branches: Vec<MorseBranch>) -> Self {
        branches.sort_by(|a, b| a.persistence.total_cmp(&b.persistence).then(a.id.cmp(&b.id)));
        let mut family = Self {
            width,
            height,
            branches,
            slot: Vec::new(),
        };
        family.reindex();
        family
    }

    fn reindex(&mut self) {
        let max_id = self.branches.iter().map(|b| b.id as usize + 1).max().unwrap_or(0);
        self.slot = vec![usize::MAX; max_id];
        for (i, b) in self.branches.iter().enumerate() {
            assert_eq!(self.slot[b.id as usize], usize::MAX, "duplicate branch id {}", b.id);
            self.slot[b.id as usize] = i;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn branches(&self) -> &[MorseBranch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn branch(&self, id: u32) -> Option<&MorseBranch> {
        let i = *self.slot.get(id as usize)?;
        self.branches.get(i)
    }

    /// Distinct finite persistences, ascending.
    pub fn finite_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.branches.iter().map(|b| b.persistence).filter(|p| p.is_finite()).collect();
        levels.dedup();
        levels
    }

    pub fn max_finite_persistence(&self) -> Option<f64> {
        self.finite_levels().last().copied()
    }

    /// Upper clamp for sampled thresholds: largest finite persistence plus one.
    pub fn epsilon_max(&self) -> f64 {
        self.max_finite_persistence().unwrap_or(0.0) + 1.0
    }

    pub fn render<'a>(&self, ids: impl IntoIterator<Item = &'a u32>) -> BinaryMask2D {
        let mut mask = BinaryMask2D::empty(self.width, self.height);
        for id in ids {
            if let Some(b) = self.branch(*id) {
                for &p in &b.pixels {
                    mask.set_index(p as usize, true);
                }
            }
        }
        mask
    }

    pub fn skeleton_of(&self, branch_ids: BTreeSet<u32>) -> Skeleton {
        let pixels = self.render(&branch_ids);
        Skeleton { branch_ids, pixels }
    }

    /// Branches with persistence at least `epsilon`.
    pub fn ids_at(&self, epsilon: f64) -> BTreeSet<u32> {
        let first = self.branches.partition_point(|b| b.persistence < epsilon);
        self.branches[first..].iter().map(|b| b.id).collect()
    }

    pub fn skeleton_at(&self, epsilon: f64) -> Skeleton {
        self.skeleton_of(self.ids_at(epsilon))
    }

    /// Every subset of branches as a skeleton, `2^N` in total.
    pub fn enumerate_structures(&self, max_branches: usize) -> Result<impl Iterator<Item = Skeleton> + '_> {
        let n = self.branches.len();
        if n > max_branches || n >= 63 {
            return Err(Error::TooManyBranches {
                count: n,
                limit: max_branches.min(62),
            });
        }
        Ok((0u64..1 << n).map(move |bits| {
            let ids = (0..n)
                .filter(|i| bits >> i & 1 == 1)
                .map(|i| self.branches[i].id)
                .collect();
            self.skeleton_of(ids)
        }))
    }

    /// `true` when `ids` contains every branch at least as persistent as any
    /// of its members.
    pub fn is_upward_closed(&self, ids: &BTreeSet<u32>) -> bool {
        let Some(lowest) = ids
            .iter()
            .filter_map(|&id| self.branch(id))
            .map(|b| b.persistence)
            .min_by(f64::total_cmp)
        else {
            return true;
        };
        self.branches.iter().filter(|b| b.persistence >= lowest).all(|b| ids.contains(&b.id))
    }

    /// One row per branch, descending persistence, ties by ascending id.
    pub fn branch_table(&self) -> Vec<BranchRow> {
        let mut rows: Vec<BranchRow> = self
            .branches
            .iter()
            .map(|b| BranchRow {
                id: b.id,
                persistence: b.persistence,
                pixel_count: b.pixels.len(),
                endpoints: b
                    .endpoints
                    .iter()
                    .map(|c| (c.cx / 2, c.cy / 2))
                    .collect(),
            })
            .collect();
        rows.sort_by(|a, b| b.persistence.total_cmp(&a.persistence).then(a.id.cmp(&b.id)));
        rows
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut f: SkeletonFamily = serde_json::from_str(text)?;
        f.reindex();
        Ok(f)
    }
}
