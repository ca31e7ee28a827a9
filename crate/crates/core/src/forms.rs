//! Non-homogeneous differential forms with polynomial coefficients.
//!
//! A [`MixedForm`] is a finite sum `Σ_I f_I dx_I` over strictly increasing
//! multi-indices of every degree. Forms are treated as spinors for `T⊕T*`,
//! so most operations ignore the grading and act on all components at once.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::Zero;

use crate::algebra::{check_same, format_rational, Chart, Polynomial, Rational};
use crate::blade::{self, Mask};
use crate::error::{Error, Result};

/// A vector field `Σ X^i ∂/∂x_i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VectorField {
    comps: Vec<Polynomial>,
}

impl VectorField {
    pub fn new(comps: Vec<Polynomial>) -> Result<Self> {
        let dim = comps.len();
        Chart::new(dim)?;
        for c in &comps {
            check_same(dim, c.dim())?;
        }
        Ok(Self { comps })
    }

    pub fn zero(dim: usize) -> Self {
        Self { comps: vec![Polynomial::zero(dim); dim] }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        let mut v = Self::zero(dim);
        v.comps[i] = Polynomial::one(dim);
        Ok(v)
    }

    pub fn constant(comps: &[Rational]) -> Self {
        let dim = comps.len();
        Self { comps: comps.iter().map(|c| Polynomial::constant(dim, c.clone())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Polynomial::is_zero)
    }

    /// Directional derivative `X(f) = Σ X^i ∂_i f`.
    pub fn apply(&self, f: &Polynomial) -> Result<Polynomial> {
        check_same(self.dim(), f.dim())?;
        let mut out = Polynomial::zero(f.dim());
        for (i, xi) in self.comps.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            out += &(xi * &f.partial(i));
        }
        Ok(out)
    }

    /// Lie bracket `[X, Y]^j = X(Y^j) - Y(X^j)`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        let comps = (0..self.dim())
            .map(|j| Ok(&self.apply(&other.comps[j])? - &other.apply(&self.comps[j])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { comps })
    }

    pub fn scale(&self, f: &Polynomial) -> Self {
        Self { comps: self.comps.iter().map(|c| c * f).collect() }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        Self { comps: self.comps.iter().map(|c| c.scale(q)).collect() }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect() })
    }

    pub fn evaluate(&self, pt: &[Rational]) -> Result<Vec<Rational>> {
        self.comps.iter().map(|c| c.evaluate(pt)).collect()
    }
}

/// A mixed-degree differential form on a chart.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MixedForm {
    dim: usize,
    terms: BTreeMap<Mask, Polynomial>,
}

impl MixedForm {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    /// The constant function `c` viewed as a 0-form.
    pub fn scalar(p: Polynomial) -> Self {
        let mut f = Self::zero(p.dim());
        f.add_term(0, p);
        f
    }

    pub fn one(dim: usize) -> Self {
        Self::scalar(Polynomial::one(dim))
    }

    /// `coeff · dx_{i_1} ∧ … ∧ dx_{i_k}` for indices in any order (sign applied).
    pub fn monomial(indices: &[usize], coeff: Polynomial) -> Result<Self> {
        let dim = coeff.dim();
        let mut mask: Mask = 0;
        let mut sign = 1;
        for &i in indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            match blade::wedge_sign(mask, 1 << i) {
                Some(s) => sign *= s,
                None => return Ok(Self::zero(dim)),
            }
            mask |= 1 << i;
        }
        let mut f = Self::zero(dim);
        f.add_term(mask, if sign < 0 { -coeff } else { coeff });
        Ok(f)
    }

    /// Basis form `dx_I` with unit coefficient.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        Self::monomial(indices, Polynomial::one(dim))
    }

    /// The 1-form `Σ ξ_i dx_i`.
    pub fn one_form(comps: &[Polynomial]) -> Result<Self> {
        let dim = comps.len();
        let mut f = Self::zero(dim);
        for (i, c) in comps.iter().enumerate() {
            check_same(dim, c.dim())?;
            f.add_term(1 << i, c.clone());
        }
        Ok(f)
    }

    /// The 2-form `Σ_{i<j} b_ij dx_i ∧ dx_j` from an antisymmetric matrix.
    pub fn two_form_from_matrix(b: &[Vec<Polynomial>]) -> Result<Self> {
        let dim = b.len();
        let mut f = Self::zero(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                check_same(dim, b[i][j].dim())?;
                f.add_term((1 << i) | (1 << j), b[i][j].clone());
            }
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart(&self) -> Chart {
        Chart::new(self.dim).expect("valid chart")
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mask, &Polynomial)> {
        self.terms.iter().map(|(m, p)| (*m, p))
    }

    /// Coefficient of `dx_I` for a set of indices; the order is ignored.
    pub fn coefficient(&self, indices: &[usize]) -> Polynomial {
        self.coeff_mask(blade::mask_from_indices(indices))
    }

    /// Tensor component `φ(∂_{i_1}, …, ∂_{i_k})`: signed by the permutation, zero on repeats.
    pub fn coefficient_signed(&self, indices: &[usize]) -> Polynomial {
        let mut mask: Mask = 0;
        let mut sign = 1;
        for &i in indices {
            match blade::wedge_sign(mask, 1 << i) {
                Some(s) => sign *= s,
                None => return Polynomial::zero(self.dim),
            }
            mask |= 1 << i;
        }
        let c = self.coeff_mask(mask);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    pub fn coeff_mask(&self, m: Mask) -> Polynomial {
        self.terms.get(&m).cloned().unwrap_or_else(|| Polynomial::zero(self.dim))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn add_term(&mut self, m: Mask, p: Polynomial) {
        if p.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(p);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &p;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add_signed(&mut self, m: Mask, sign: i32, p: Polynomial) {
        self.add_term(m, if sign < 0 { -p } else { p });
    }

    /// Degree-`k` component (the `φ_k` of `φ_0 + φ_2 + …`).
    pub fn component(&self, k: usize) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| blade::degree(**m) == k).map(|(m, p)| (*m, p.clone())).collect();
        Self { dim: self.dim, terms }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(|m| blade::degree(*m)).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn is_homogeneous(&self, k: usize) -> bool {
        self.terms.keys().all(|m| blade::degree(*m) == k)
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| blade::degree(*m).is_multiple_of(2))
    }

    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| blade::degree(*m) % 2 == 1)
    }

    pub fn require_degree(&self, k: usize) -> Result<()> {
        if self.is_homogeneous(k) {
            Ok(())
        } else {
            Err(Error::NotPureDegree { expected: k })
        }
    }

    /// Components of a pure 1-form.
    pub fn one_form_components(&self) -> Result<Vec<Polynomial>> {
        self.require_degree(1)?;
        Ok((0..self.dim).map(|i| self.coeff_mask(1 << i)).collect())
    }

    pub fn scale(&self, f: &Polynomial) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, p) in &self.terms {
            out.add_term(*m, p * f);
        }
        out
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero(self.dim);
        }
        Self { dim: self.dim, terms: self.terms.iter().map(|(m, p)| (*m, p.scale(q))).collect() }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same(self.dim, other.dim)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same(self.dim, other.dim)?;
        Ok(self - other)
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        check_same(self.dim, other.dim)?;
        Ok(self.wedge_unchecked(other))
    }

    pub(crate) fn wedge_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ma, pa) in &self.terms {
            for (mb, pb) in &other.terms {
                if let Some(s) = blade::wedge_sign(*ma, *mb) {
                    out.add_signed(ma | mb, s, pa * pb);
                }
            }
        }
        out
    }

    /// Exterior derivative `d(f dx_I) = Σ_k ∂_k f dx_k ∧ dx_I`.
    pub fn exterior_derivative(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, p) in &self.terms {
            for k in 0..self.dim {
                if let Some(s) = blade::prefix_sign(k, *m) {
                    let dp = p.partial(k);
                    if !dp.is_zero() {
                        out.add_signed(m | (1 << k), s, dp);
                    }
                }
            }
        }
        out
    }

    /// `i_{∂_k}` applied to every component.
    pub fn interior_coordinate(&self, k: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, p) in &self.terms {
            if let Some(s) = blade::interior_sign(k, *m) {
                out.add_signed(m & !(1 << k), s, p.clone());
            }
        }
        out
    }

    /// Interior product `i_X`.
    pub fn interior_product(&self, x: &VectorField) -> Result<Self> {
        check_same(self.dim, x.dim())?;
        let mut out = Self::zero(self.dim);
        for (k, xk) in x.components().iter().enumerate() {
            if xk.is_zero() {
                continue;
            }
            for (m, p) in &self.terms {
                if let Some(s) = blade::interior_sign(k, *m) {
                    out.add_signed(m & !(1 << k), s, xk * p);
                }
            }
        }
        Ok(out)
    }

    /// Lie derivative through Cartan's formula `ℒ_X = d i_X + i_X d`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<Self> {
        let a = self.interior_product(x)?.exterior_derivative();
        let b = self.exterior_derivative().interior_product(x)?;
        Ok(&a + &b)
    }

    /// Parity involution: degree `2m` and `2m+1` components scaled by `(-1)^m`.
    pub fn sigma(&self) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, p)| (*m, if blade::sigma_sign(*m) < 0 { -p } else { p.clone() }))
                .collect(),
        }
    }

    /// Coefficient of `dx_1 ∧ … ∧ dx_n`.
    pub fn top_coefficient(&self) -> Polynomial {
        self.coeff_mask(blade::full_mask(self.dim))
    }

    /// Mukai pairing `[a ∧ σ(b)]_n`, returned as the coefficient of the coordinate volume form.
    pub fn mukai_pairing(&self, other: &Self) -> Result<Polynomial> {
        check_same(self.dim, other.dim)?;
        Ok(self.mukai_unchecked(other))
    }

    pub(crate) fn mukai_unchecked(&self, other: &Self) -> Polynomial {
        let full = blade::full_mask(self.dim);
        let mut acc = Polynomial::zero(self.dim);
        for (ma, pa) in &self.terms {
            let mb = full & !ma;
            if let Some(pb) = other.terms.get(&mb) {
                let s = blade::wedge_sign(*ma, mb).unwrap() * blade::sigma_sign(mb);
                let t = pa * pb;
                if s < 0 {
                    acc -= &t;
                } else {
                    acc += &t;
                }
            }
        }
        acc
    }

    /// Evaluates every coefficient at a rational point (result has constant coefficients).
    pub fn evaluate(&self, pt: &[Rational]) -> Result<Self> {
        let mut out = Self::zero(self.dim);
        for (m, p) in &self.terms {
            out.add_term(*m, Polynomial::constant(self.dim, p.evaluate(pt)?));
        }
        Ok(out)
    }

    /// Dense coefficient vector indexed by mask, evaluated in f64.
    pub fn evaluate_dense_f64(&self, pt: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.dim];
        for (m, p) in &self.terms {
            out[*m as usize] = p.evaluate_f64(pt);
        }
        out
    }

    pub fn map_coefficients(&self, f: impl Fn(&Polynomial) -> Polynomial) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, p) in &self.terms {
            out.add_term(*m, f(p));
        }
        out
    }

    /// Largest absolute coefficient over all terms.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(Polynomial::max_abs_coeff).fold(0.0, f64::max)
    }
}

impl Add for &MixedForm {
    type Output = MixedForm;
    fn add(self, rhs: &MixedForm) -> MixedForm {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        let mut out = self.clone();
        for (m, p) in &rhs.terms {
            out.add_term(*m, p.clone());
        }
        out
    }
}

impl Sub for &MixedForm {
    type Output = MixedForm;
    fn sub(self, rhs: &MixedForm) -> MixedForm {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        let mut out = self.clone();
        for (m, p) in &rhs.terms {
            out.add_term(*m, -p);
        }
        out
    }
}

impl Neg for &MixedForm {
    type Output = MixedForm;
    fn neg(self) -> MixedForm {
        MixedForm { dim: self.dim, terms: self.terms.iter().map(|(m, p)| (*m, -p)).collect() }
    }
}

impl fmt::Debug for MixedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MixedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, p) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let idx: String = blade::indices_of(*m).iter().map(|i| (i + 1).to_string()).collect();
            let coeff = match p.constant_value() {
                Some(c) => format_rational(&c),
                None => format!("({p})"),
            };
            if *m == 0 {
                write!(f, "{coeff}")?;
            } else {
                write!(f, "{coeff}·dx{idx}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn dx(dim: usize, idx: &[usize]) -> MixedForm {
        MixedForm::basis(dim, idx).unwrap()
    }

    fn x(dim: usize, i: usize) -> Polynomial {
        Polynomial::var(dim, i).unwrap()
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(dx(4, &[0]).wedge(&dx(4, &[1])).unwrap(), dx(4, &[0, 1]));
        assert!(dx(4, &[0]).wedge(&dx(4, &[0])).unwrap().is_zero());
        let a = &MixedForm::one(5) + &dx(5, &[0, 1]);
        let b = &MixedForm::one(5) + &dx(5, &[2, 3]);
        let expected = &(&(&MixedForm::one(5) + &dx(5, &[0, 1])) + &dx(5, &[2, 3])) + &dx(5, &[0, 1, 2, 3]);
        assert_eq!(a.wedge(&b).unwrap(), expected);
        assert!(dx(3, &[0]).wedge(&dx(4, &[1])).is_err());
    }

    #[test]
    fn monomial_reorders_with_sign() {
        assert_eq!(MixedForm::basis(3, &[1, 0]).unwrap(), -&dx(3, &[0, 1]));
        assert!(MixedForm::basis(3, &[1, 1]).unwrap().is_zero());
    }

    #[test]
    fn exterior_derivative_examples() {
        let a = MixedForm::monomial(&[1], x(2, 0)).unwrap();
        assert_eq!(a.exterior_derivative(), dx(2, &[0, 1]));
        let nf = &(&dx(5, &[0, 1]) + &dx(5, &[2, 3])) + &dx(5, &[0, 2, 3, 4]);
        assert!(nf.exterior_derivative().is_zero());
        let f = MixedForm::scalar(&x(2, 0) * &x(2, 1));
        let expected = &MixedForm::monomial(&[0], x(2, 1)).unwrap() + &MixedForm::monomial(&[1], x(2, 0)).unwrap();
        assert_eq!(f.exterior_derivative(), expected);
    }

    #[test]
    fn interior_product_examples() {
        let d1 = VectorField::coordinate(3, 0).unwrap();
        let d3 = VectorField::coordinate(3, 2).unwrap();
        assert_eq!(dx(3, &[0, 1]).interior_product(&d1).unwrap(), dx(3, &[1]));
        assert!(dx(3, &[0, 1]).interior_product(&d3).unwrap().is_zero());
        let a = MixedForm::monomial(&[0, 1, 2], x(3, 0)).unwrap();
        assert_eq!(a.interior_product(&d1).unwrap(), MixedForm::monomial(&[1, 2], x(3, 0)).unwrap());
    }

    #[test]
    fn lie_derivative_examples() {
        let d1 = VectorField::coordinate(2, 0).unwrap();
        let a = MixedForm::monomial(&[1], x(2, 0)).unwrap();
        assert_eq!(a.lie_derivative(&d1).unwrap(), dx(2, &[1]));
        assert!(dx(2, &[1]).lie_derivative(&d1).unwrap().is_zero());
        let euler = VectorField::new(vec![x(2, 0), Polynomial::zero(2)]).unwrap();
        assert_eq!(dx(2, &[0]).lie_derivative(&euler).unwrap(), dx(2, &[0]));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(MixedForm::one(5).sigma(), MixedForm::one(5));
        assert_eq!(dx(5, &[0]).sigma(), dx(5, &[0]));
        assert_eq!(dx(5, &[0, 1]).sigma(), -&dx(5, &[0, 1]));
        assert_eq!(dx(5, &[0, 1, 2]).sigma(), -&dx(5, &[0, 1, 2]));
        assert_eq!(dx(5, &[0, 1, 2, 3]).sigma(), dx(5, &[0, 1, 2, 3]));
    }

    #[test]
    fn mukai_examples() {
        let one = MixedForm::one(5);
        assert_eq!(one.mukai_pairing(&dx(5, &[0, 1, 2, 3, 4])).unwrap(), Polynomial::one(5));
        assert_eq!(dx(5, &[0, 1]).mukai_pairing(&dx(5, &[2, 3, 4])).unwrap(), Polynomial::from_int(5, -1));
        assert_eq!(dx(5, &[0, 1, 2, 3]).mukai_pairing(&dx(5, &[4])).unwrap(), Polynomial::one(5));
        assert!(dx(5, &[0, 1]).mukai_pairing(&dx(4, &[2, 3])).is_err());
    }

    #[test]
    fn component_access() {
        let f = &(&MixedForm::one(5) + &dx(5, &[0, 1])).scale_rational(&rat(3)) + &dx(5, &[1, 2, 3, 4]);
        assert_eq!(f.component(2), dx(5, &[0, 1]).scale_rational(&rat(3)));
        assert_eq!(f.degrees(), vec![0, 2, 4]);
        assert!(f.is_even());
        assert!(f.require_degree(2).is_err());
    }
}
