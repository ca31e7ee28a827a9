//! Seeded random generators of small rational data for the identity suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ratio, Polynomial, Rational};
use crate::blade::{degree as mask_degree, full_mask, indices_of};
use crate::forms::{MixedForm, VectorField};
use crate::generalized::GenSection;
use crate::metric::GeneralizedMetric;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    /// `p/q` with `|p| ≤ 3`, `1 ≤ q ≤ 3`.
    pub fn rational(&mut self) -> Rational {
        ratio(self.int(-3, 3), self.int(1, 3))
    }

    pub fn nonzero_rational(&mut self) -> Rational {
        loop {
            let q = self.rational();
            if q != Rational::from_integer(0.into()) {
                return q;
            }
        }
    }

    pub fn point(&mut self, dim: usize) -> Vec<Rational> {
        (0..dim).map(|_| self.rational()).collect()
    }

    /// Up to three monomials of total degree at most `degree`.
    pub fn polynomial(&mut self, dim: usize, degree: u32) -> Polynomial {
        let terms = self.rng.gen_range(0..=3);
        let mut out = Vec::with_capacity(terms);
        for _ in 0..terms {
            let total = self.rng.gen_range(0..=degree);
            let mut e = vec![0u16; dim];
            for _ in 0..total {
                e[self.rng.gen_range(0..dim)] += 1;
            }
            out.push((e, self.nonzero_rational()));
        }
        Polynomial::from_terms(dim, out).expect("exponent length matches dim")
    }

    pub fn vector_field(&mut self, dim: usize, degree: u32) -> VectorField {
        VectorField::new((0..dim).map(|_| self.polynomial(dim, degree)).collect()).expect("dim components")
    }

    pub fn section(&mut self, dim: usize, degree: u32) -> GenSection {
        let x = self.vector_field(dim, degree);
        let xi = (0..dim).map(|_| self.polynomial(dim, degree)).collect();
        GenSection::new(x, xi).expect("dim components")
    }

    fn form_from_masks(&mut self, dim: usize, masks: &[u16], count: usize, degree: u32) -> MixedForm {
        let mut out = MixedForm::zero(dim);
        if masks.is_empty() {
            return out;
        }
        for _ in 0..count {
            let m = masks[self.rng.gen_range(0..masks.len())];
            let c = self.polynomial(dim, degree);
            out = &out + &MixedForm::monomial(&indices_of(m), c).expect("valid mask");
        }
        out
    }

    /// Up to four terms of mixed degree.
    pub fn form(&mut self, dim: usize, degree: u32) -> MixedForm {
        let masks: Vec<u16> = (0..=full_mask(dim)).collect();
        let count = self.rng.gen_range(1..=4);
        self.form_from_masks(dim, &masks, count, degree)
    }

    pub fn form_of_degree(&mut self, dim: usize, k: usize, degree: u32) -> MixedForm {
        let masks: Vec<u16> = (0..=full_mask(dim)).filter(|&m| mask_degree(m) == k).collect();
        let count = self.rng.gen_range(1..=3);
        self.form_from_masks(dim, &masks, count, degree)
    }

    pub fn even_form(&mut self, dim: usize, degree: u32) -> MixedForm {
        let masks: Vec<u16> = (0..=full_mask(dim)).filter(|&m| mask_degree(m).is_multiple_of(2)).collect();
        let count = self.rng.gen_range(2..=6);
        self.form_from_masks(dim, &masks, count, degree)
    }

    /// Even form with constant coefficients on every even mask.
    pub fn dense_constant_even_form(&mut self, dim: usize) -> MixedForm {
        let mut out = MixedForm::zero(dim);
        for m in (0..=full_mask(dim)).filter(|&m| mask_degree(m).is_multiple_of(2)) {
            let c = Polynomial::constant(dim, self.rational());
            out = &out + &MixedForm::monomial(&indices_of(m), c).expect("valid mask");
        }
        out
    }

    /// `dβ` for a random 2-form `β`.
    pub fn closed_three_form(&mut self, dim: usize, degree: u32) -> MixedForm {
        self.form_of_degree(dim, 2, degree + 1).exterior_derivative()
    }

    /// `dA` for a random 1-form `A`.
    pub fn closed_two_form(&mut self, dim: usize, degree: u32) -> MixedForm {
        self.form_of_degree(dim, 1, degree + 1).exterior_derivative()
    }

    /// Constant positive diagonal part plus a small polynomial symmetric
    /// perturbation, and a random 2-form `B`.
    pub fn metric(&mut self, dim: usize, degree: u32, with_b: bool) -> GeneralizedMetric {
        let mut g = vec![vec![Polynomial::zero(dim); dim]; dim];
        for i in 0..dim {
            g[i][i] = Polynomial::constant(dim, ratio(self.int(2, 5), 1));
            for j in 0..i {
                let p = self.polynomial(dim, degree).scale(&ratio(1, 8));
                g[i][j] = p.clone();
                g[j][i] = p;
            }
        }
        let b = if with_b { self.form_of_degree(dim, 2, degree) } else { MixedForm::zero(dim) };
        GeneralizedMetric::from_parts(&g, &b).expect("square symmetric data")
    }

    /// Invertible `2×2` rational matrix.
    pub fn gl2(&mut self) -> [[Rational; 2]; 2] {
        loop {
            let m = [[self.rational(), self.rational()], [self.rational(), self.rational()]];
            if &m[0][0] * &m[1][1] != &m[0][1] * &m[1][0] {
                return m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_repeat() {
        let mut a = Sampler::new(7);
        let mut b = Sampler::new(7);
        for _ in 0..10 {
            assert_eq!(a.form(4, 2), b.form(4, 2));
        }
    }

    #[test]
    fn closed_forms_are_closed() {
        let mut s = Sampler::new(1);
        for _ in 0..10 {
            assert!(s.closed_three_form(5, 2).exterior_derivative().is_zero());
        }
    }
}
