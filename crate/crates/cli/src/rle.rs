//! Run-length encoding of row-major pixel sets as `[start, length]` pairs.

use structseg::BinaryMask2D;

pub fn encode_indices(indices: &[u32]) -> Vec<[u32; 2]> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut runs: Vec<[u32; 2]> = Vec::new();
    for p in sorted {
        match runs.last_mut() {
            Some(r) if r[0] + r[1] == p => r[1] += 1,
            _ => runs.push([p, 1]),
        }
    }
    runs
}

pub fn encode_mask(mask: &BinaryMask2D) -> Vec<[u32; 2]> {
    let idx: Vec<u32> = mask.indices().map(|p| p as u32).collect();
    encode_indices(&idx)
}

pub fn decode(runs: &[[u32; 2]]) -> Vec<u32> {
    runs.iter().flat_map(|&[s, n]| s..s + n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs() {
        assert_eq!(encode_indices(&[5, 1, 2, 3, 9, 10]), vec![[1, 3], [5, 1], [9, 2]]);
        assert!(encode_indices(&[]).is_empty());
        assert_eq!(decode(&encode_indices(&[7, 4, 5])), vec![4, 5, 7]);
        let m = BinaryMask2D::new(3, 2, vec![true, true, false, false, true, true]).unwrap();
        assert_eq!(encode_mask(&m), vec![[0, 2], [4, 2]]);
    }
}
