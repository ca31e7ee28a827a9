//! Sign bookkeeping for basis monomials `dx_I`, with `I` stored as a bitmask.
//!
//! Bit `k` set means `dx_k` occurs; the canonical order is increasing `k`.

/// Basis multi-index as a bitmask.
pub type Mask = u16;

#[inline]
pub fn degree(m: Mask) -> usize {
    m.count_ones() as usize
}

#[inline]
fn parity(x: u32) -> i32 {
    if x.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sign of `dx_a ∧ dx_b` relative to `dx_{a|b}`, or `None` when they share an index.
#[inline]
pub fn wedge_sign(a: Mask, b: Mask) -> Option<i32> {
    if a & b != 0 {
        return None;
    }
    // count pairs (i in a, j in b) with i > j
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (a >> (j + 1)).count_ones();
    }
    Some(parity(swaps))
}

/// Sign of `i_{∂_k} dx_m` relative to `dx_{m without k}`, or `None` if `k ∉ m`.
#[inline]
pub fn interior_sign(k: usize, m: Mask) -> Option<i32> {
    let bit = 1 << k;
    if m & bit == 0 {
        return None;
    }
    Some(parity((m & (bit - 1)).count_ones()))
}

/// Sign of `dx_k ∧ dx_m` relative to `dx_{m with k}`, or `None` if `k ∈ m`.
#[inline]
pub fn prefix_sign(k: usize, m: Mask) -> Option<i32> {
    let bit = 1 << k;
    if m & bit != 0 {
        return None;
    }
    Some(parity((m & (bit - 1)).count_ones()))
}

/// The parity involution sign `(-1)^{floor(deg/2)}`.
#[inline]
pub fn sigma_sign(m: Mask) -> i32 {
    parity((degree(m) / 2) as u32)
}

pub fn mask_from_indices(indices: &[usize]) -> Mask {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn indices_of(m: Mask) -> Vec<usize> {
    (0..16).filter(|k| m & (1 << k) != 0).collect()
}

pub fn full_mask(dim: usize) -> Mask {
    ((1u32 << dim) - 1) as Mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_signs() {
        assert_eq!(wedge_sign(0b01, 0b10), Some(1));
        assert_eq!(wedge_sign(0b10, 0b01), Some(-1));
        assert_eq!(wedge_sign(0b01, 0b01), None);
        // dx2 ∧ dx1dx3 = -dx1dx2dx3
        assert_eq!(wedge_sign(0b010, 0b101), Some(-1));
    }

    #[test]
    fn interior_signs() {
        assert_eq!(interior_sign(0, 0b011), Some(1));
        assert_eq!(interior_sign(1, 0b011), Some(-1));
        assert_eq!(interior_sign(2, 0b011), None);
        assert_eq!(prefix_sign(1, 0b101), Some(-1));
    }

    #[test]
    fn sigma_pattern() {
        let signs: Vec<i32> = [0b0, 0b1, 0b11, 0b111, 0b1111, 0b11111].iter().map(|&m| sigma_sign(m)).collect();
        assert_eq!(signs, vec![1, 1, -1, -1, 1, 1]);
    }
}
