//! Connected-component labelling on binary masks.

use crate::raster::BinaryMask2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
        }
    }
}

/// Component labels for the pixels equal to `value`; other pixels get 0.
/// Labels run from 1 in row-major order of each component's first pixel.
#[derive(Debug, Clone)]
pub struct Labels {
    pub labels: Vec<u32>,
    pub count: u32,
}

pub fn label(mask: &BinaryMask2D, value: bool, conn: Connectivity) -> Labels {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if bits[start] != value || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if bits[q] == value && labels[q] == 0 {
                    labels[q] = count;
                    stack.push(q);
                }
            }
        }
    }
    Labels { labels, count }
}

/// Foreground components under 8-connectivity.
pub fn foreground(mask: &BinaryMask2D) -> Labels {
    label(mask, true, Connectivity::Eight)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_join_only_under_eight() {
        let m = BinaryMask2D::from_fn(2, 2, |x, y| x == y).unwrap();
        assert_eq!(label(&m, true, Connectivity::Eight).count, 1);
        assert_eq!(label(&m, true, Connectivity::Four).count, 2);
        assert_eq!(label(&m, false, Connectivity::Four).count, 2);
    }
}
