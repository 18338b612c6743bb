//! Implicit 2D cubical complex over a pixel grid.
//!
//! Cells live in the doubled grid `[0, 2w-2] x [0, 2h-2]`: a cell's dimension
//! is its number of odd coordinates, so pixels are vertices at even/even
//! positions, edges have one odd coordinate and squares two. Nothing is
//! materialized beyond the vertex values and their rank in the total order.
//!
//! Cell values follow the lower-star convention: a cell takes the value of
//! its highest vertex, where vertices are compared by value and then by
//! row-major index.

use std::cmp::Ordering;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ScalarField2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubicalCell {
    pub cx: u32,
    pub cy: u32,
}

impl CubicalCell {
    pub fn new(cx: u32, cy: u32) -> Self {
        Self { cx, cy }
    }

    /// The vertex sitting on pixel `(x, y)`.
    pub fn vertex(x: u32, y: u32) -> Self {
        Self { cx: 2 * x, cy: 2 * y }
    }

    pub fn dim(&self) -> u8 {
        ((self.cx & 1) + (self.cy & 1)) as u8
    }
}

/// Up to four cell (or pixel) indices without allocating.
#[derive(Debug, Clone, Copy)]
pub struct Cells {
    buf: [usize; 4],
    len: usize,
}

impl Cells {
    fn new() -> Self {
        Self { buf: [0; 4], len: 0 }
    }

    fn push(&mut self, c: usize) {
        self.buf[self.len] = c;
        self.len += 1;
    }
}

impl Deref for Cells {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.buf[..self.len]
    }
}

/// Sort key of a cell: its vertex ranks (plus one) in descending order, padded
/// with zeros. Lexicographic comparison puts every face before its cofaces.
pub type CellKey = [u32; 4];

#[derive(Debug, Clone)]
pub struct CubicalComplex {
    width: usize,
    height: usize,
    values: Vec<f64>,
    rank: Vec<u32>,
    order: Vec<u32>,
}

pub fn build_complex(field: &ScalarField2D) -> Result<CubicalComplex> {
    CubicalComplex::from_values(field.width(), field.height(), field.values().to_vec())
}

/// Vertex order: ascending value, ties by row-major index.
pub fn vertex_order(values: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_by(|&a, &b| {
        values[a as usize]
            .partial_cmp(&values[b as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

impl CubicalComplex {
    /// Builds the complex over arbitrary finite values (not restricted to `[0, 1]`).
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::EmptyField { width, height });
        }
        let order = vertex_order(&values);
        let mut rank = vec![0u32; values.len()];
        for (r, &p) in order.iter().enumerate() {
            rank[p as usize] = r as u32;
        }
        Ok(Self {
            width,
            height,
            values,
            rank,
            order,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rank of each pixel in the strict vertex order.
    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }

    /// Pixels sorted by the strict vertex order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub(crate) fn grid_width(&self) -> usize {
        2 * self.width - 1
    }

    pub fn num_cells(&self) -> usize {
        (2 * self.width - 1) * (2 * self.height - 1)
    }

    /// `(vertices, edges, squares)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        let (w, h) = (self.width, self.height);
        (w * h, w * (h - 1) + h * (w - 1), (w - 1) * (h - 1))
    }

    pub fn contains(&self, cell: CubicalCell) -> bool {
        (cell.cx as usize) < 2 * self.width - 1 && (cell.cy as usize) < 2 * self.height - 1
    }

    fn check(&self, cell: CubicalCell) -> Result<usize> {
        if !self.contains(cell) {
            return Err(Error::OutOfBounds {
                cx: cell.cx as usize,
                cy: cell.cy as usize,
            });
        }
        Ok(self.index_of(cell))
    }

    pub fn index_of(&self, cell: CubicalCell) -> usize {
        cell.cy as usize * self.grid_width() + cell.cx as usize
    }

    pub fn cell_at(&self, index: usize) -> CubicalCell {
        let gw = self.grid_width();
        CubicalCell::new((index % gw) as u32, (index / gw) as u32)
    }

    pub(crate) fn dim_of(&self, c: usize) -> u8 {
        let gw = self.grid_width();
        (((c % gw) & 1) + ((c / gw) & 1)) as u8
    }

    pub(crate) fn vertex_cell(&self, pixel: usize) -> usize {
        let (x, y) = (pixel % self.width, pixel / self.width);
        2 * y * self.grid_width() + 2 * x
    }

    pub(crate) fn pixel_of(&self, vertex: usize) -> usize {
        let gw = self.grid_width();
        (vertex / gw / 2) * self.width + (vertex % gw) / 2
    }

    /// Pixels at the corners of a cell.
    pub(crate) fn pixels(&self, c: usize) -> Cells {
        let gw = self.grid_width();
        let (cx, cy) = (c % gw, c / gw);
        let xs = if cx & 1 == 1 { [cx / 2, cx / 2 + 1] } else { [cx / 2, cx / 2] };
        let ys = if cy & 1 == 1 { [cy / 2, cy / 2 + 1] } else { [cy / 2, cy / 2] };
        let mut out = Cells::new();
        for (j, &y) in ys.iter().enumerate() {
            if j == 1 && ys[0] == ys[1] {
                break;
            }
            for (i, &x) in xs.iter().enumerate() {
                if i == 1 && xs[0] == xs[1] {
                    break;
                }
                out.push(y * self.width + x);
            }
        }
        out
    }

    /// Highest corner pixel of a cell under the vertex order.
    pub(crate) fn max_pixel(&self, c: usize) -> usize {
        *self.pixels(c).iter().max_by_key(|&&p| self.rank[p]).expect("cells have corners")
    }

    pub(crate) fn cell_value(&self, c: usize) -> f64 {
        self.values[self.max_pixel(c)]
    }

    pub(crate) fn key(&self, c: usize) -> CellKey {
        let mut key = [0u32; 4];
        for (k, &p) in key.iter_mut().zip(self.pixels(c).iter()) {
            *k = self.rank[p] + 1;
        }
        key.sort_unstable_by(|a, b| b.cmp(a));
        key
    }

    pub(crate) fn faces_of(&self, c: usize) -> Cells {
        let gw = self.grid_width();
        let (cx, cy) = (c % gw, c / gw);
        let mut out = Cells::new();
        match (cx & 1, cy & 1) {
            (0, 0) => {}
            (1, 0) => {
                out.push(c - 1);
                out.push(c + 1);
            }
            (0, 1) => {
                out.push(c - gw);
                out.push(c + gw);
            }
            _ => {
                out.push(c - gw);
                out.push(c + gw);
                out.push(c - 1);
                out.push(c + 1);
            }
        }
        out
    }

    pub(crate) fn cofaces_of(&self, c: usize) -> Cells {
        let gw = self.grid_width();
        let gh = 2 * self.height - 1;
        let (cx, cy) = (c % gw, c / gw);
        let mut out = Cells::new();
        let horizontal = cx & 1 == 0;
        let vertical = cy & 1 == 0;
        // a coordinate that is even may step to an odd neighbor
        if horizontal {
            if cx > 0 {
                out.push(c - 1);
            }
            if cx + 1 < gw {
                out.push(c + 1);
            }
        }
        if vertical {
            if cy > 0 {
                out.push(c - gw);
            }
            if cy + 1 < gh {
                out.push(c + gw);
            }
        }
        out
    }

    pub fn faces(&self, cell: CubicalCell) -> Result<Vec<CubicalCell>> {
        let c = self.check(cell)?;
        Ok(self.faces_of(c).iter().map(|&f| self.cell_at(f)).collect())
    }

    pub fn cofaces(&self, cell: CubicalCell) -> Result<Vec<CubicalCell>> {
        let c = self.check(cell)?;
        Ok(self.cofaces_of(c).iter().map(|&f| self.cell_at(f)).collect())
    }

    /// Value of a cell: the value of its highest vertex.
    pub fn value(&self, cell: CubicalCell) -> Result<f64> {
        let c = self.check(cell)?;
        Ok(self.cell_value(c))
    }

    pub(crate) fn lower_star_of(&self, pixel: usize) -> Vec<usize> {
        let v = self.vertex_cell(pixel);
        let r = self.rank[pixel];
        let mut out = vec![v];
        let edges = self.cofaces_of(v);
        for &e in edges.iter() {
            if self.max_pixel(e) == pixel {
                out.push(e);
            }
        }
        for &e in edges.iter() {
            for &s in self.cofaces_of(e).iter() {
                if !out.contains(&s) && self.pixels(s).iter().all(|&p| self.rank[p] <= r) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// All cells whose highest vertex is `vertex`, the vertex first.
    pub fn lower_star(&self, vertex: CubicalCell) -> Result<Vec<CubicalCell>> {
        let c = self.check(vertex)?;
        if vertex.dim() != 0 {
            return Err(Error::InvalidParams(format!(
                "lower star needs a vertex, got a {}-cell",
                vertex.dim()
            )));
        }
        Ok(self
            .lower_star_of(self.pixel_of(c))
            .into_iter()
            .map(|c| self.cell_at(c))
            .collect())
    }
}
