//! The five-dimensional invariant functional: `Q`, the quartic `f`, the volume
//! density, the triple `(v₁, h, v₂)`, the companion form `ρ̂`, the critical-point
//! equations `dρ = 0 = dρ̂`, and the generic and normal-form structures.
//!
//! Sections returned by `q_vector` and `p_vector` are densitized: their
//! components are multiples of the reference volume `dx_0∧…∧dx_4`.

use num_traits::{One, Zero};

use crate::algebra::{rat, ratio, Polynomial, Rational};
use crate::blade::full_mask;
use crate::error::{Error, Result};
use crate::forms::{MixedForm, VectorField};
use crate::generalized::{anchor_derivative, clifford_act, courant_bracket, gv_inner, GenSection};

pub const DIM: usize = 5;

/// A pair `(ρ₁, ρ₂)` of even forms on a 5-chart.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RhoPair {
    pub rho1: MixedForm,
    pub rho2: MixedForm,
}

impl RhoPair {
    pub fn new(rho1: MixedForm, rho2: MixedForm) -> Result<Self> {
        for r in [&rho1, &rho2] {
            if r.dim() != DIM {
                return Err(Error::DimensionMismatch { expected: DIM, found: r.dim() });
            }
            if !r.is_even() {
                return Err(Error::NotEven);
            }
        }
        Ok(Self { rho1, rho2 })
    }

    /// `ρ₁ + z ρ₂`.
    pub fn combination(&self, z: &Rational) -> MixedForm {
        &self.rho1 + &self.rho2.scale_rational(z)
    }

    /// `(a ρ₁ + b ρ₂, c ρ₁ + d ρ₂)`.
    pub fn transform(&self, a: [[Rational; 2]; 2]) -> Self {
        let mix = |p: &Rational, q: &Rational| &self.rho1.scale_rational(p) + &self.rho2.scale_rational(q);
        Self { rho1: mix(&a[0][0], &a[0][1]), rho2: mix(&a[1][0], &a[1][1]) }
    }

    pub fn map(&self, f: impl Fn(&MixedForm) -> Result<MixedForm>) -> Result<Self> {
        Self::new(f(&self.rho1)?, f(&self.rho2)?)
    }

    pub fn evaluate_f64(&self, pt: &[f64]) -> ([f64; 16], [f64; 16]) {
        let pack = |f: &MixedForm| {
            let dense = f.evaluate_dense_f64(pt);
            let mut v = [0.0; 16];
            for (k, &m) in crate::pointwise::EVEN5.iter().enumerate() {
                v[k] = dense[m as usize];
            }
            v
        };
        (pack(&self.rho1), pack(&self.rho2))
    }
}

fn require_dim5(a: &MixedForm) -> Result<()> {
    if a.dim() != DIM {
        return Err(Error::DimensionMismatch { expected: DIM, found: a.dim() });
    }
    Ok(())
}

/// `⟨v·a, b⟩` as a density.
pub fn clifford_pairing(v: &GenSection, a: &MixedForm, b: &MixedForm) -> Result<Polynomial> {
    clifford_act(v, a)?.mukai_pairing(b)
}

/// `P(φ₁, φ₂)` with `(P, v) = ⟨v·φ₁, φ₂⟩`.
pub fn p_vector(phi1: &MixedForm, phi2: &MixedForm) -> Result<GenSection> {
    require_dim5(phi1)?;
    require_dim5(phi2)?;
    if !phi1.is_even() || !phi2.is_even() {
        return Err(Error::NotEven);
    }
    let two = rat(2);
    let x = (0..DIM)
        .map(|i| Ok(MixedForm::basis(DIM, &[i])?.wedge_unchecked(phi1).mukai_unchecked(phi2).scale(&two)))
        .collect::<Result<Vec<_>>>()?;
    let xi = (0..DIM).map(|i| phi1.interior_coordinate(i).mukai_unchecked(phi2).scale(&two)).collect();
    GenSection::new(VectorField::new(x)?, xi)
}

/// `Q(φ) = P(φ, φ)`, a null section.
pub fn q_vector(phi: &MixedForm) -> Result<GenSection> {
    p_vector(phi, phi)
}

/// `f(ρ) = (Q(ρ₁), Q(ρ₂))`, a squared density.
pub fn quartic_invariant(rho: &RhoPair) -> Result<Polynomial> {
    gv_inner(&q_vector(&rho.rho1)?, &q_vector(&rho.rho2)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityPoint {
    pub point: Vec<Rational>,
    pub f: Rational,
    pub stable: bool,
    /// `sign(f)`; the two open orbits have opposite signs.
    pub orbit_sign: i32,
}

pub fn is_stable(rho: &RhoPair, pts: &[Vec<Rational>]) -> Result<Vec<StabilityPoint>> {
    let f = quartic_invariant(rho)?;
    pts.iter()
        .map(|pt| {
            let v = f.evaluate(pt)?;
            let sign = crate::algebra::signum(&v);
            Ok(StabilityPoint { point: pt.clone(), stable: sign != 0, orbit_sign: sign, f: v })
        })
        .collect()
}

/// `|f|^{1/2}` as a polynomial with its orbit sign, when `±f` is a perfect square.
pub fn volume_density_exact(rho: &RhoPair) -> Result<Option<(Polynomial, i32)>> {
    let f = quartic_invariant(rho)?;
    if f.is_zero() {
        return Ok(None);
    }
    if let Some(p) = f.sqrt_exact() {
        return Ok(Some((p, 1)));
    }
    Ok((-&f).sqrt_exact().map(|p| (p, -1)))
}

/// `|f|^{1/2}` at a floating-point point.
pub fn volume_density_at(rho: &RhoPair, pt: &[f64]) -> Result<f64> {
    let f = quartic_invariant(rho)?.evaluate_f64(pt);
    if f == 0.0 {
        return Err(Error::Unstable(format!("f = 0 at {pt:?}")));
    }
    Ok(f.abs().sqrt())
}

/// The triple `v₁ = Q(ρ₁)/φ`, `h = P(ρ₁,ρ₂)/φ`, `v₂ = Q(ρ₂)/φ`, stored densitized.
#[derive(Clone, Debug, PartialEq)]
pub struct VTriple {
    pub q1: GenSection,
    pub p12: GenSection,
    pub q2: GenSection,
    pub f: Polynomial,
    /// `φ = |f|^{1/2}` and `sign f` when exact.
    pub density: Option<(Polynomial, i32)>,
}

impl VTriple {
    pub fn densitized(&self) -> [&GenSection; 3] {
        [&self.q1, &self.p12, &self.q2]
    }

    /// `(v₁, h, v₂)` when `φ` is a polynomial dividing every component.
    pub fn exact_sections(&self) -> Option<[GenSection; 3]> {
        let (p, _) = self.density.as_ref()?;
        Some([self.q1.div_exact(p)?, self.p12.div_exact(p)?, self.q2.div_exact(p)?])
    }

    /// Gram matrix `(v_i, v_j) = (Q_i, Q_j)/|f|`, when every entry is constant.
    pub fn gram(&self) -> Result<Option<[[Rational; 3]; 3]>> {
        let abs_f = if self.f.leading().is_some_and(|(_, c)| c < Rational::zero()) { -&self.f } else { self.f.clone() };
        let secs = self.densitized();
        let mut g: [[Rational; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in 0..3 {
                let num = gv_inner(secs[i], secs[j])?;
                match num.div_exact(&abs_f).and_then(|q| q.constant_value()) {
                    Some(c) => g[i][j] = c,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(g))
    }

    /// Evaluates `(v₁, h, v₂)` at a floating-point point.
    pub fn sections_at(&self, pt: &[f64]) -> Result<[Vec<f64>; 3]> {
        let f = self.f.evaluate_f64(pt);
        if f == 0.0 {
            return Err(Error::Unstable(format!("f = 0 at {pt:?}")));
        }
        let p = f.abs().sqrt();
        let eval = |s: &GenSection| s.components().iter().map(|c| c.evaluate_f64(pt) / p).collect::<Vec<_>>();
        Ok([eval(&self.q1), eval(&self.p12), eval(&self.q2)])
    }
}

pub fn v_triple(rho: &RhoPair) -> Result<VTriple> {
    let f = quartic_invariant(rho)?;
    if f.is_zero() {
        return Err(Error::Unstable("f vanishes identically".into()));
    }
    Ok(VTriple {
        q1: q_vector(&rho.rho1)?,
        p12: p_vector(&rho.rho1, &rho.rho2)?,
        q2: q_vector(&rho.rho2)?,
        density: volume_density_exact(rho)?,
        f,
    })
}

/// Numerators of `ρ̂ = (s·Q₁·ρ₂, −s·Q₂·ρ₁)/φ`, with `s = sign f`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoHat {
    /// `Q₁·ρ₂`.
    pub n1: MixedForm,
    /// `−Q₂·ρ₁`.
    pub n2: MixedForm,
    pub f: Polynomial,
    pub density: Option<(Polynomial, i32)>,
}

impl RhoHat {
    /// `(ρ̂₁, ρ̂₂)` exactly, when `φ` is a polynomial dividing the numerators.
    pub fn exact(&self) -> Option<(MixedForm, MixedForm)> {
        let (p, s) = self.density.as_ref()?;
        let div = |n: &MixedForm| -> Option<MixedForm> {
            let mut out = MixedForm::zero(DIM);
            for (m, c) in n.terms() {
                let q = c.div_exact(p)?;
                let q = if *s < 0 { -q } else { q };
                out = &out + &MixedForm::monomial(&crate::blade::indices_of(m), q).ok()?;
            }
            Some(out)
        };
        Some((div(&self.n1)?, div(&self.n2)?))
    }

    /// `(ρ̂₁, ρ̂₂)` evaluated at a floating-point point, as dense odd forms.
    pub fn at(&self, pt: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = self.f.evaluate_f64(pt);
        if f == 0.0 {
            return Err(Error::Unstable(format!("f = 0 at {pt:?}")));
        }
        let scale = f.signum() / f.abs().sqrt();
        let eval = |n: &MixedForm| n.evaluate_dense_f64(pt).into_iter().map(|v| v * scale).collect();
        Ok((eval(&self.n1), eval(&self.n2)))
    }
}

pub fn rho_hat(rho: &RhoPair) -> Result<RhoHat> {
    let f = quartic_invariant(rho)?;
    if f.is_zero() {
        return Err(Error::Unstable("f vanishes identically".into()));
    }
    let q1 = q_vector(&rho.rho1)?;
    let q2 = q_vector(&rho.rho2)?;
    for (name, q, r) in [("v1·rho1", &q1, &rho.rho1), ("v2·rho2", &q2, &rho.rho2)] {
        if !clifford_act(q, r)?.is_zero() {
            return Err(Error::Annihilation(name.into()));
        }
    }
    Ok(RhoHat {
        n1: clifford_act(&q1, &rho.rho2)?,
        n2: -&clifford_act(&q2, &rho.rho1)?,
        density: volume_density_exact(rho)?,
        f,
    })
}

/// `f·dN − ½ df∧N`, which vanishes exactly when `d(N/|f|^{1/2}) = 0`.
pub fn normalized_closure_numerator(f: &Polynomial, n: &MixedForm) -> MixedForm {
    let df = MixedForm::scalar(f.clone()).exterior_derivative();
    &n.exterior_derivative().scale(f) - &df.wedge_unchecked(n).scale_rational(&ratio(1, 2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationalResidual {
    pub d_rho1: MixedForm,
    pub d_rho2: MixedForm,
    /// Polynomial numerators of `dρ̂₁` and `dρ̂₂`.
    pub d_rho_hat1: MixedForm,
    pub d_rho_hat2: MixedForm,
}

impl VariationalResidual {
    pub fn is_critical(&self) -> bool {
        self.d_rho1.is_zero() && self.d_rho2.is_zero() && self.d_rho_hat1.is_zero() && self.d_rho_hat2.is_zero()
    }
}

pub fn variational_residual(rho: &RhoPair) -> Result<VariationalResidual> {
    let hat = rho_hat(rho)?;
    Ok(VariationalResidual {
        d_rho1: rho.rho1.exterior_derivative(),
        d_rho2: rho.rho2.exterior_derivative(),
        d_rho_hat1: normalized_closure_numerator(&hat.f, &hat.n1),
        d_rho_hat2: normalized_closure_numerator(&hat.f, &hat.n2),
    })
}

/// Numerator of `[U/φ, V/φ]` over `|f|^2 / s`: `f[U,V] − ½(π(U)f)V + ½(π(V)f)U`.
pub fn normalized_bracket_numerator(f: &Polynomial, u: &GenSection, v: &GenSection) -> Result<GenSection> {
    let half = ratio(1, 2);
    courant_bracket(u, v)?
        .scale(f)
        .try_sub(&v.scale(&anchor_derivative(u, f)?.scale(&half)))?
        .try_add(&u.scale(&anchor_derivative(v, f)?.scale(&half)))
}

/// Numerator of `ℒ_X ρ + dξ∧ρ` for the section `U/φ`: `f(ℒ_Y ρ + dη∧ρ) − ½ df∧(U·ρ)`.
pub fn normalized_lie_numerator(f: &Polynomial, u: &GenSection, rho: &MixedForm) -> Result<MixedForm> {
    let lie = &rho.lie_derivative(u.vector_part())? + &u.form_part().exterior_derivative().wedge(rho)?;
    Ok(normalized_closure_like(f, &lie, &clifford_act(u, rho)?))
}

fn normalized_closure_like(f: &Polynomial, main: &MixedForm, acted: &MixedForm) -> MixedForm {
    let df = MixedForm::scalar(f.clone()).exterior_derivative();
    &main.scale(f) - &df.wedge_unchecked(acted).scale_rational(&ratio(1, 2))
}

pub const TRIPLE_NAMES: [&str; 3] = ["v1", "h", "v2"];

#[derive(Clone, Debug, PartialEq)]
pub struct TripleReport {
    /// Bracket numerators for `(v₁,h)`, `(v₁,v₂)`, `(h,v₂)`.
    pub brackets: Vec<(String, GenSection)>,
    /// Numerators of `ℒ_X ρ_A + dξ∧ρ_A` per section and `A`.
    pub lie: Vec<(String, MixedForm)>,
    /// `d(i_{X_A} φ)` for `A = 1, 2`.
    pub volume_preserving: Vec<(String, MixedForm)>,
    pub gram: Option<[[Rational; 3]; 3]>,
}

impl TripleReport {
    pub fn passed(&self) -> bool {
        self.brackets.iter().all(|(_, s)| s.is_zero())
            && self.lie.iter().all(|(_, f)| f.is_zero())
            && self.volume_preserving.iter().all(|(_, f)| f.is_zero())
            && self.gram.is_some()
    }
}

pub fn commuting_triple_check(rho: &RhoPair) -> Result<TripleReport> {
    let t = v_triple(rho)?;
    let secs = t.densitized();
    let mut brackets = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let b = normalized_bracket_numerator(&t.f, secs[i], secs[j])?;
        brackets.push((format!("[{},{}]", TRIPLE_NAMES[i], TRIPLE_NAMES[j]), b));
    }
    let mut lie = Vec::new();
    for (i, s) in secs.iter().enumerate() {
        for (a, r) in [(1, &rho.rho1), (2, &rho.rho2)] {
            lie.push((format!("{}:rho{a}", TRIPLE_NAMES[i]), normalized_lie_numerator(&t.f, s, r)?));
        }
    }
    let vol = MixedForm::basis(DIM, &[0, 1, 2, 3, 4])?;
    let volume_preserving = [(1, &t.q1), (2, &t.q2)]
        .into_iter()
        .map(|(a, q)| Ok((format!("X{a}"), vol.interior_product(q.vector_part())?.exterior_derivative())))
        .collect::<Result<Vec<_>>>()?;
    Ok(TripleReport { brackets, lie, volume_preserving, gram: t.gram()? })
}

/// The pieces of `ρ_A = c + ω + i_Y φ` and of `Q(ρ_A) = φ⊗(X + ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub c: Polynomial,
    pub omega2: MixedForm,
    pub y: VectorField,
    pub x: VectorField,
    pub xi: Vec<Polynomial>,
    /// `ξ + 4 i_Y ω`.
    pub xi_residual: MixedForm,
    /// `i_X φ + 2ω² − 4c i_Y φ`.
    pub x_residual: MixedForm,
}

impl Decomposition {
    pub fn holds(&self) -> bool {
        self.xi_residual.is_zero() && self.x_residual.is_zero()
    }
}

/// `Y` with `i_Y (p·dx_0…dx_4) = four_form`.
fn vector_from_four_form(four: &MixedForm, p: &Polynomial) -> Result<VectorField> {
    let full = full_mask(DIM);
    let comps = (0..DIM)
        .map(|k| {
            let c = four.coeff_mask(full & !(1 << k));
            let c = if k % 2 == 1 { -c } else { c };
            c.div_exact(p).ok_or_else(|| Error::NotExact(format!("component {k} by the density")))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

/// Splits `ρ_A` relative to the volume form `p·dx_0…dx_4`.
pub fn decompose(rho_a: &MixedForm, p: &Polynomial) -> Result<Decomposition> {
    require_dim5(rho_a)?;
    if !rho_a.is_even() {
        return Err(Error::NotEven);
    }
    if p.is_zero() {
        return Err(Error::Singular("zero volume density".into()));
    }
    let vol = MixedForm::basis(DIM, &[0, 1, 2, 3, 4])?.scale(p);
    let c = rho_a.component(0).coeff_mask(0);
    let omega2 = rho_a.component(2);
    let y = vector_from_four_form(&rho_a.component(4), p)?;
    let q = q_vector(rho_a)?;
    let div = |c: &Polynomial| c.div_exact(p).ok_or_else(|| Error::NotExact("Q by the density".into()));
    let x = VectorField::new(q.vector_part().components().iter().map(div).collect::<Result<Vec<_>>>()?)?;
    let xi = q.form_components().iter().map(div).collect::<Result<Vec<_>>>()?;
    let four = rat(4);
    let iy_omega = omega2.interior_product(&y)?;
    let xi_residual = &MixedForm::one_form(&xi)? + &iy_omega.scale_rational(&four);
    let omega_sq = omega2.wedge(&omega2)?;
    let x_residual = &(&vol.interior_product(&x)? + &omega_sq.scale_rational(&rat(2)))
        - &vol.interior_product(&y)?.scale(&c).scale_rational(&four);
    Ok(Decomposition { c, omega2, y, x, xi, xi_residual, x_residual })
}

/// `ρ₁ = dx_0∧dx_1 + dx_2∧dx_3 + dx_0∧dx_2∧dx_3∧dx_4`, `ρ₂ = 1 + dx_1∧dx_2∧dx_3∧dx_4`.
pub fn normal_form() -> RhoPair {
    let b = |idx: &[usize]| MixedForm::basis(DIM, idx).expect("valid indices");
    let rho1 = &(&b(&[0, 1]) + &b(&[2, 3])) + &b(&[0, 2, 3, 4]);
    let rho2 = &MixedForm::one(DIM) + &b(&[1, 2, 3, 4]);
    RhoPair::new(rho1, rho2).expect("even forms")
}

/// The sections `∂_4 + dx_0`, `∂_0`, `∂_1 + dx_1` spanning the normal form's triple.
pub fn normal_form_span() -> Vec<GenSection> {
    let v = |i| GenSection::coordinate_vector(DIM, i).unwrap();
    let w = |i| GenSection::coordinate_covector(DIM, i).unwrap();
    vec![v(4).try_add(&w(0)).unwrap(), v(0), v(1).try_add(&w(1)).unwrap()]
}

/// Data of the generic structure: closed `ω`, volume `φ`, commuting `Y₁, Y₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericData {
    pub omega2: MixedForm,
    pub phi: MixedForm,
    pub y1: VectorField,
    pub y2: VectorField,
    /// Degree-zero part of `ρ₂`.
    pub c: Rational,
}

impl GenericData {
    pub fn validate(&self) -> Result<()> {
        let hyp = |s: &str| Err(Error::Hypothesis(s.to_string()));
        require_dim5(&self.omega2)?;
        require_dim5(&self.phi)?;
        if self.y1.dim() != DIM || self.y2.dim() != DIM {
            return hyp("Y1 and Y2 must live on the 5-chart");
        }
        if !self.omega2.is_zero() && !self.omega2.is_homogeneous(2) {
            return hyp("omega must be a 2-form");
        }
        if self.phi.is_zero() || !self.phi.is_homogeneous(5) {
            return hyp("phi must be a nonzero 5-form");
        }
        if !self.c.is_one() {
            return hyp("degree-zero part must be normalized to 1");
        }
        if !self.omega2.exterior_derivative().is_zero() {
            return hyp("omega must be closed");
        }
        if !self.y1.lie_bracket(&self.y2)?.is_zero() {
            return hyp("[Y1, Y2] must vanish");
        }
        for (name, y) in [("Y1", &self.y1), ("Y2", &self.y2)] {
            if !self.omega2.lie_derivative(y)?.is_zero() {
                return Err(Error::Hypothesis(format!("{name} must preserve omega")));
            }
            if !self.phi.lie_derivative(y)?.is_zero() {
                return Err(Error::Hypothesis(format!("{name} must preserve phi")));
            }
        }
        let pairing = self.omega2.interior_product(&self.y1)?.interior_product(&self.y2)?.coeff_mask(0);
        if pairing != Polynomial::constant(DIM, ratio(-1, 8)) {
            return hyp("omega(Y1, Y2) must equal -1/8");
        }
        Ok(())
    }

    pub fn density(&self) -> Polynomial {
        self.phi.coeff_mask(full_mask(DIM))
    }
}

/// `ρ₁ = ω + i_{Y₁}φ`, `ρ₂ = c + i_{Y₂}φ`, checked to be a critical point.
pub fn generic_structure(gd: &GenericData) -> Result<RhoPair> {
    gd.validate()?;
    let rho1 = &gd.omega2 + &gd.phi.interior_product(&gd.y1)?;
    let rho2 = &MixedForm::scalar(Polynomial::constant(DIM, gd.c.clone())) + &gd.phi.interior_product(&gd.y2)?;
    let rho = RhoPair::new(rho1, rho2)?;
    if !variational_residual(&rho)?.is_critical() {
        return Err(Error::Inconsistent("generic structure is not critical".into()));
    }
    Ok(rho)
}

/// `Y₁ − i_{Y₂}ω`, `Y₂`, `X − i_{Y₁}ω` with `i_X φ = −8ω²`.
pub fn generic_commuting_sections(gd: &GenericData) -> Result<[GenSection; 3]> {
    gd.validate()?;
    let p = gd.density();
    let omega_sq = gd.omega2.wedge(&gd.omega2)?.scale_rational(&rat(-8));
    let x = vector_from_four_form(&omega_sq, &p)?;
    let s1 = GenSection::from_parts(gd.y1.clone(), &(-&gd.omega2.interior_product(&gd.y2)?))?;
    let s2 = GenSection::vector(gd.y2.clone());
    let s3 = GenSection::from_parts(x, &(-&gd.omega2.interior_product(&gd.y1)?))?;
    Ok([s1, s2, s3])
}

/// Sum of all pairwise exact Courant brackets of sections, for tests and reports.
pub fn pairwise_brackets(secs: &[GenSection]) -> Result<Vec<GenSection>> {
    let mut out = Vec::new();
    for i in 0..secs.len() {
        for j in i + 1..secs.len() {
            out.push(courant_bracket(&secs[i], &secs[j])?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Polynomial {
        Polynomial::var(DIM, i).unwrap()
    }

    #[test]
    fn scalar_has_zero_q() {
        assert!(q_vector(&MixedForm::one(DIM)).unwrap().is_zero());
    }

    #[test]
    fn normal_form_is_stable_and_critical() {
        let rho = normal_form();
        let f = quartic_invariant(&rho).unwrap();
        assert!(f.is_constant() && !f.is_zero());
        assert!(variational_residual(&rho).unwrap().is_critical());
        let t = v_triple(&rho).unwrap();
        let span: Vec<GenSection> = t.densitized().into_iter().cloned().collect();
        assert_eq!(crate::generalized::same_constant_span(&span, &normal_form_span()), Some(true));
        assert!(commuting_triple_check(&rho).unwrap().passed());
    }

    #[test]
    fn equal_components_are_unstable() {
        let rho = normal_form();
        let same = RhoPair::new(rho.rho1.clone(), rho.rho1.clone()).unwrap();
        assert!(quartic_invariant(&same).unwrap().is_zero());
        let zero = RhoPair::new(MixedForm::zero(DIM), MixedForm::zero(DIM)).unwrap();
        assert!(quartic_invariant(&zero).unwrap().is_zero());
    }

    fn flat_generic() -> GenericData {
        let omega2 = &MixedForm::basis(DIM, &[0, 1]).unwrap().scale_rational(&ratio(-1, 8))
            + &MixedForm::basis(DIM, &[2, 3]).unwrap();
        GenericData {
            omega2,
            phi: MixedForm::basis(DIM, &[0, 1, 2, 3, 4]).unwrap(),
            y1: VectorField::coordinate(DIM, 0).unwrap(),
            y2: VectorField::coordinate(DIM, 1).unwrap(),
            c: Rational::one(),
        }
    }

    #[test]
    fn generic_structure_flat() {
        let gd = flat_generic();
        let rho = generic_structure(&gd).unwrap();
        assert_eq!(quartic_invariant(&rho).unwrap(), Polynomial::one(DIM));
        let secs = generic_commuting_sections(&gd).unwrap();
        assert!(pairwise_brackets(&secs).unwrap().iter().all(GenSection::is_zero));
    }

    #[test]
    fn generic_structure_rejects_noncommuting() {
        let mut gd = flat_generic();
        gd.y2 = VectorField::new(vec![
            Polynomial::zero(DIM),
            Polynomial::one(DIM),
            Polynomial::zero(DIM),
            x(0),
            Polynomial::zero(DIM),
        ])
        .unwrap();
        assert!(matches!(generic_structure(&gd), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn decomposition_of_normal_form() {
        let rho = normal_form();
        let one = Polynomial::one(DIM);
        let d2 = decompose(&rho.rho2, &one).unwrap();
        assert_eq!(d2.c, one);
        assert!(d2.omega2.is_zero());
        assert!(d2.holds());
        assert_eq!(d2.x, d2.y.scale_rational(&rat(4)));
        let d1 = decompose(&rho.rho1, &one).unwrap();
        assert!(d1.c.is_zero());
        assert_eq!(d1.omega2, &MixedForm::basis(DIM, &[0, 1]).unwrap() + &MixedForm::basis(DIM, &[2, 3]).unwrap());
        assert!(d1.holds());
    }
}
