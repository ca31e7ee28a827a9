//! Dense floating-point forms and sections at a single point, for charts of
//! dimension up to 6, and the pointwise five-dimensional invariant algebra.

use crate::blade::{self, Mask};
use crate::error::{Error, Result};

pub const MAX_POINT_DIM: usize = 6;
const SLOTS: usize = 1 << MAX_POINT_DIM;

/// A mixed form at a point: one coefficient per basis monomial `dx_I`.
#[derive(Clone, Copy, PartialEq)]
pub struct PointForm {
    n: usize,
    c: [f64; SLOTS],
}

impl std::fmt::Debug for PointForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = (0..1usize << self.n)
            .filter(|&m| self.c[m] != 0.0)
            .map(|m| format!("{:+e}·{:?}", self.c[m], blade::indices_of(m as Mask)))
            .collect();
        write!(f, "PointForm[{}]({})", self.n, terms.join(" "))
    }
}

impl PointForm {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_POINT_DIM, "point forms support dimension ≤ {MAX_POINT_DIM}");
        Self { n, c: [0.0; SLOTS] }
    }

    /// Coefficients indexed by mask; `coeffs.len()` must be `2^n`.
    pub fn from_dense(n: usize, coeffs: &[f64]) -> Result<Self> {
        if n > MAX_POINT_DIM {
            return Err(Error::InvalidDimension(n));
        }
        if coeffs.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: coeffs.len() });
        }
        let mut f = Self::zero(n);
        f.c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(f)
    }

    pub fn basis(n: usize, m: Mask) -> Self {
        let mut f = Self::zero(n);
        f.c[m as usize] = 1.0;
        f
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..1 << self.n]
    }

    pub fn get(&self, m: Mask) -> f64 {
        self.c[m as usize]
    }

    pub fn set(&mut self, m: Mask, v: f64) {
        self.c[m as usize] = v;
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: f64) {
        debug_assert_eq!(self.n, other.n);
        for m in 0..1 << self.n {
            self.c[m] += s * other.c[m];
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for v in &mut out.c[..1 << self.n] {
            *v *= s;
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = *self;
        out.add_assign_scaled(other, 1.0);
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = *self;
        out.add_assign_scaled(other, -1.0);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// `i_{∂_k}`.
    pub fn interior(&self, k: usize) -> Self {
        let mut out = Self::zero(self.n);
        for m in 0..1usize << self.n {
            let v = self.c[m];
            if v != 0.0 {
                if let Some(s) = blade::interior_sign(k, m as Mask) {
                    out.c[m & !(1 << k)] += s as f64 * v;
                }
            }
        }
        out
    }

    /// `dx_k ∧ ·`.
    pub fn wedge_dx(&self, k: usize) -> Self {
        let mut out = Self::zero(self.n);
        for m in 0..1usize << self.n {
            let v = self.c[m];
            if v != 0.0 {
                if let Some(s) = blade::prefix_sign(k, m as Mask) {
                    out.c[m | (1 << k)] += s as f64 * v;
                }
            }
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for a in 0..1usize << self.n {
            if self.c[a] == 0.0 {
                continue;
            }
            for b in 0..1usize << self.n {
                if other.c[b] == 0.0 {
                    continue;
                }
                if let Some(s) = blade::wedge_sign(a as Mask, b as Mask) {
                    out.c[a | b] += s as f64 * self.c[a] * other.c[b];
                }
            }
        }
        out
    }

    pub fn sigma(&self) -> Self {
        let mut out = *self;
        for m in 0..1usize << self.n {
            out.c[m] *= blade::sigma_sign(m as Mask) as f64;
        }
        out
    }

    /// Mukai pairing: top coefficient of `self ∧ σ(other)`.
    pub fn mukai(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let full = blade::full_mask(self.n);
        let mut acc = 0.0;
        for a in 0..1usize << self.n {
            let b = full as usize & !a;
            let (x, y) = (self.c[a], other.c[b]);
            if x != 0.0 && y != 0.0 {
                let s = blade::wedge_sign(a as Mask, b as Mask).unwrap() * blade::sigma_sign(b as Mask);
                acc += s as f64 * x * y;
            }
        }
        acc
    }

    /// Prepends a new coordinate at index 0 (`x_k ↦ x_{k+1}`).
    pub fn lift_with_leading_axis(&self) -> Self {
        let mut out = Self::zero(self.n + 1);
        for m in 0..1usize << self.n {
            out.c[m << 1] = self.c[m];
        }
        out
    }
}

/// A section `X + ξ` at a point.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PointSection {
    n: usize,
    pub x: [f64; MAX_POINT_DIM],
    pub xi: [f64; MAX_POINT_DIM],
}

impl PointSection {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_POINT_DIM);
        Self { n, x: [0.0; MAX_POINT_DIM], xi: [0.0; MAX_POINT_DIM] }
    }

    pub fn new(x: &[f64], xi: &[f64]) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: xi.len() });
        }
        if x.len() > MAX_POINT_DIM {
            return Err(Error::InvalidDimension(x.len()));
        }
        let mut s = Self::zero(x.len());
        s.x[..x.len()].copy_from_slice(x);
        s.xi[..xi.len()].copy_from_slice(xi);
        Ok(s)
    }

    /// Basis element `a` of the `2n` sections `∂_0 … ∂_{n-1}, dx_0 … dx_{n-1}`.
    pub fn basis(n: usize, a: usize) -> Self {
        let mut s = Self::zero(n);
        if a < n {
            s.x[a] = 1.0;
        } else {
            s.xi[a - n] = 1.0;
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Components `(X^0 … X^{n-1}, ξ_0 … ξ_{n-1})`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.x[..self.n].iter().chain(&self.xi[..self.n]).copied().collect()
    }

    pub fn from_slice(n: usize, v: &[f64]) -> Self {
        let mut s = Self::zero(n);
        s.x[..n].copy_from_slice(&v[..n]);
        s.xi[..n].copy_from_slice(&v[n..2 * n]);
        s
    }

    pub fn inner(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.x[i] * other.xi[i] + other.x[i] * self.xi[i];
        }
        0.5 * acc
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            out.x[i] *= s;
            out.xi[i] *= s;
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            out.x[i] += other.x[i];
            out.xi[i] += other.xi[i];
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `i_X a + ξ ∧ a`.
    pub fn act(&self, a: &PointForm) -> PointForm {
        debug_assert_eq!(self.n, a.n);
        let mut out = PointForm::zero(a.n);
        for k in 0..self.n {
            if self.x[k] != 0.0 {
                out.add_assign_scaled(&a.interior(k), self.x[k]);
            }
            if self.xi[k] != 0.0 {
                out.add_assign_scaled(&a.wedge_dx(k), self.xi[k]);
            }
        }
        out
    }

    /// Prepends a new coordinate at index 0 with zero components.
    pub fn lift_with_leading_axis(&self) -> Self {
        let mut out = Self::zero(self.n + 1);
        out.x[1..=self.n].copy_from_slice(&self.x[..self.n]);
        out.xi[1..=self.n].copy_from_slice(&self.xi[..self.n]);
        out
    }
}

/// `P(φ₁, φ₂)`, defined by `(P, v) = ⟨v·φ₁, φ₂⟩`, by pairing against the basis.
pub fn p_section(phi1: &PointForm, phi2: &PointForm) -> PointSection {
    let n = phi1.n;
    let mut s = PointSection::zero(n);
    for k in 0..n {
        s.x[k] = 2.0 * phi1.wedge_dx(k).mukai(phi2);
        s.xi[k] = 2.0 * phi1.interior(k).mukai(phi2);
    }
    s
}

pub fn q_section(phi: &PointForm) -> PointSection {
    p_section(phi, phi)
}

/// Even masks of a 5-chart in increasing order.
pub const EVEN5: [Mask; 16] = [0, 3, 5, 6, 9, 10, 12, 15, 17, 18, 20, 23, 24, 27, 29, 30];
/// Odd masks of a 5-chart in increasing order.
pub const ODD5: [Mask; 16] = [1, 2, 4, 7, 8, 11, 13, 14, 16, 19, 21, 22, 25, 26, 28, 31];

/// Position of a mask within `EVEN5` or `ODD5`.
pub fn parity_index(m: Mask) -> usize {
    let list = if blade::degree(m).is_multiple_of(2) { &EVEN5 } else { &ODD5 };
    list.iter().position(|&x| x == m).expect("5-chart mask")
}

/// Precomputed sparse tables for the five-dimensional algebra on 16-component
/// even forms and 16-component odd forms.
#[derive(Clone, Debug)]
pub struct Kernel5 {
    /// `(a, i, j, c)`: section component `a` of `P(φ, ψ)` gains `c·φ_i·ψ_j`.
    p_terms: Vec<(u8, u8, u8, f64)>,
    /// `(a, i, k, s)`: basis section `a` sends even slot `i` to odd slot `k` with sign `s`.
    act_terms: Vec<(u8, u8, u8, f64)>,
    /// `(i, k, s)`: the Mukai pairing of even slot `i` with odd slot `k`.
    mukai_terms: Vec<(u8, u8, f64)>,
}

/// Pointwise invariants of a pair of even forms on a 5-chart.
#[derive(Clone, Copy, Debug)]
pub struct RhoAnalysis5 {
    pub q1: [f64; 10],
    pub q2: [f64; 10],
    pub f: f64,
    /// `|f|^{1/2}`.
    pub density: f64,
    /// `sign(f)`.
    pub sign: f64,
    pub rho_hat1: [f64; 16],
    pub rho_hat2: [f64; 16],
}

impl Default for Kernel5 {
    fn default() -> Self {
        Self::new()
    }
}

impl Kernel5 {
    pub fn new() -> Self {
        let mut p_terms = Vec::new();
        let mut act_terms = Vec::new();
        for a in 0..10 {
            let sec = PointSection::basis(5, a);
            for (i, &mi) in EVEN5.iter().enumerate() {
                let moved = sec.act(&PointForm::basis(5, mi));
                for (j, &mj) in EVEN5.iter().enumerate() {
                    // (P, e_a) = ⟨e_a·φ, ψ⟩ and P^a = 2 (P, dual basis)
                    let c = 2.0 * moved.mukai(&PointForm::basis(5, mj));
                    if c != 0.0 {
                        p_terms.push((dual(a) as u8, i as u8, j as u8, c));
                    }
                }
                for (k, &mk) in ODD5.iter().enumerate() {
                    let s = moved.get(mk);
                    if s != 0.0 {
                        act_terms.push((a as u8, i as u8, k as u8, s));
                    }
                }
            }
        }
        let mut mukai_terms = Vec::new();
        for (i, &mi) in EVEN5.iter().enumerate() {
            for (k, &mk) in ODD5.iter().enumerate() {
                let s = PointForm::basis(5, mi).mukai(&PointForm::basis(5, mk));
                if s != 0.0 {
                    mukai_terms.push((i as u8, k as u8, s));
                }
            }
        }
        Self { p_terms, act_terms, mukai_terms }
    }

    /// Components `(X^0..X^4, ξ_0..ξ_4)` of `P(φ, ψ)` for even 16-vectors.
    pub fn p(&self, phi: &[f64; 16], psi: &[f64; 16]) -> [f64; 10] {
        let mut out = [0.0; 10];
        for &(a, i, j, c) in &self.p_terms {
            out[a as usize] += c * phi[i as usize] * psi[j as usize];
        }
        out
    }

    pub fn q(&self, phi: &[f64; 16]) -> [f64; 10] {
        self.p(phi, phi)
    }

    /// Clifford action of a section on an even 16-vector, giving an odd 16-vector.
    pub fn act(&self, sec: &[f64; 10], phi: &[f64; 16]) -> [f64; 16] {
        let mut out = [0.0; 16];
        for &(a, i, k, s) in &self.act_terms {
            out[k as usize] += s * sec[a as usize] * phi[i as usize];
        }
        out
    }

    /// `⟨even, odd⟩`.
    pub fn mukai(&self, even: &[f64; 16], odd: &[f64; 16]) -> f64 {
        self.mukai_terms.iter().map(|&(i, k, s)| s * even[i as usize] * odd[k as usize]).sum()
    }

    pub fn inner(u: &[f64; 10], v: &[f64; 10]) -> f64 {
        let mut acc = 0.0;
        for k in 0..5 {
            acc += u[k] * v[5 + k] + v[k] * u[5 + k];
        }
        0.5 * acc
    }

    /// `f`, `φ = |f|^{1/2}` and `ρ̂ = (s·Q₁·ρ₂/φ, −s·Q₂·ρ₁/φ)` with `s = sign f`.
    pub fn analyze(&self, rho1: &[f64; 16], rho2: &[f64; 16]) -> Result<RhoAnalysis5> {
        let q1 = self.q(rho1);
        let q2 = self.q(rho2);
        let f = Self::inner(&q1, &q2);
        if f == 0.0 || !f.is_finite() {
            return Err(Error::Unstable(format!("f = {f}")));
        }
        let density = f.abs().sqrt();
        let sign = f.signum();
        let n1 = self.act(&q1, rho2);
        let n2 = self.act(&q2, rho1);
        let mut rho_hat1 = [0.0; 16];
        let mut rho_hat2 = [0.0; 16];
        let scale = sign / density;
        for k in 0..16 {
            rho_hat1[k] = scale * n1[k];
            rho_hat2[k] = -scale * n2[k];
        }
        Ok(RhoAnalysis5 { q1, q2, f, density, sign, rho_hat1, rho_hat2 })
    }

    /// `Dφ(ρ̇) = ⟨ρ̇₂, ρ̂₁⟩ − ⟨ρ̇₁, ρ̂₂⟩`.
    pub fn gradient_pairing(&self, an: &RhoAnalysis5, dot1: &[f64; 16], dot2: &[f64; 16]) -> f64 {
        self.mukai(dot2, &an.rho_hat1) - self.mukai(dot1, &an.rho_hat2)
    }
}

/// Index of the dual basis section: `(e_a, e_b) = ½` pairs `∂_k` with `dx_k`.
fn dual(a: usize) -> usize {
    if a < 5 {
        a + 5
    } else {
        a - 5
    }
}

/// Expands an even 16-vector into a dense point form on the 5-chart.
pub fn even_to_form(v: &[f64; 16]) -> PointForm {
    let mut f = PointForm::zero(5);
    for (k, &m) in EVEN5.iter().enumerate() {
        f.set(m, v[k]);
    }
    f
}

pub fn odd_to_form(v: &[f64; 16]) -> PointForm {
    let mut f = PointForm::zero(5);
    for (k, &m) in ODD5.iter().enumerate() {
        f.set(m, v[k]);
    }
    f
}

pub fn form_to_even(f: &PointForm) -> [f64; 16] {
    let mut v = [0.0; 16];
    for (k, &m) in EVEN5.iter().enumerate() {
        v[k] = f.get(m);
    }
    v
}

pub fn form_to_odd(f: &PointForm) -> [f64; 16] {
    let mut v = [0.0; 16];
    for (k, &m) in ODD5.iter().enumerate() {
        v[k] = f.get(m);
    }
    v
}

pub fn section_from_array(q: &[f64; 10]) -> PointSection {
    PointSection::from_slice(5, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_even(seed: u64) -> [f64; 16] {
        let mut v = [0.0; 16];
        let mut s = seed;
        for x in &mut v {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
        v
    }

    #[test]
    fn clifford_square_is_inner_product() {
        let u = PointSection::new(&[1.0, 2.0, 0.0, -1.0, 0.5], &[0.3, 0.0, 1.0, 2.0, -1.0]).unwrap();
        let a = even_to_form(&sample_even(3));
        let twice = u.act(&u.act(&a));
        let diff = twice.minus(&a.scaled(u.inner(&u)));
        assert!(diff.max_abs() < 1e-12);
    }

    #[test]
    fn kernel_matches_generic_algebra() {
        let k = Kernel5::new();
        let a = sample_even(11);
        let b = sample_even(12);
        let generic = p_section(&even_to_form(&a), &even_to_form(&b)).to_vec();
        let fast = k.p(&a, &b);
        for i in 0..10 {
            assert!((generic[i] - fast[i]).abs() < 1e-12);
        }
        let sec = [0.1, -0.2, 0.3, 0.4, 0.5, 1.0, 0.0, -1.0, 2.0, 0.25];
        let g = section_from_array(&sec).act(&even_to_form(&a));
        let fast = odd_to_form(&k.act(&sec, &a));
        assert!(g.minus(&fast).max_abs() < 1e-12);
    }

    #[test]
    fn q_is_null_and_annihilates() {
        let k = Kernel5::new();
        let a = sample_even(5);
        let q = k.q(&a);
        assert!(Kernel5::inner(&q, &q).abs() < 1e-12);
        assert!(k.act(&q, &a).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn companion_normalization() {
        let k = Kernel5::new();
        let an = k.analyze(&sample_even(1), &sample_even(2)).unwrap();
        let pairing = k.mukai(&sample_even(2), &an.rho_hat1);
        assert!((pairing - an.density).abs() < 1e-12 * an.density.max(1.0));
    }

    #[test]
    fn lifting_adds_axis() {
        let f = PointForm::basis(5, 0b101);
        assert_eq!(f.lift_with_leading_axis().get(0b1010), 1.0);
    }
}
