//! Sections of `T⊕T*`: the split-signature pairing, Clifford action on forms,
//! B-field transforms and the Courant bracket.

use crate::algebra::{check_same, ratio, Polynomial, Rational};
use crate::error::{Error, Result};
use crate::forms::{MixedForm, VectorField};

/// A section `X + ξ` of `T⊕T*`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GenSection {
    x: VectorField,
    xi: Vec<Polynomial>,
}

impl GenSection {
    pub fn new(x: VectorField, xi: Vec<Polynomial>) -> Result<Self> {
        check_same(x.dim(), xi.len())?;
        for c in &xi {
            check_same(x.dim(), c.dim())?;
        }
        Ok(Self { x, xi })
    }

    /// Builds a section from a vector field and a pure 1-form.
    pub fn from_parts(x: VectorField, xi: &MixedForm) -> Result<Self> {
        check_same(x.dim(), xi.dim())?;
        Self::new(x, xi.one_form_components()?)
    }

    pub fn zero(dim: usize) -> Self {
        Self { x: VectorField::zero(dim), xi: vec![Polynomial::zero(dim); dim] }
    }

    pub fn vector(x: VectorField) -> Self {
        let dim = x.dim();
        Self { x, xi: vec![Polynomial::zero(dim); dim] }
    }

    pub fn covector(xi: Vec<Polynomial>) -> Result<Self> {
        let dim = xi.len();
        Self::new(VectorField::zero(dim), xi)
    }

    /// Constant section from rational component lists.
    pub fn constant(vector: &[Rational], oneform: &[Rational]) -> Result<Self> {
        check_same(vector.len(), oneform.len())?;
        let dim = vector.len();
        Self::new(VectorField::constant(vector), oneform.iter().map(|c| Polynomial::constant(dim, c.clone())).collect())
    }

    /// `∂/∂x_i`.
    pub fn coordinate_vector(dim: usize, i: usize) -> Result<Self> {
        Ok(Self::vector(VectorField::coordinate(dim, i)?))
    }

    /// `dx_i`.
    pub fn coordinate_covector(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        let mut xi = vec![Polynomial::zero(dim); dim];
        xi[i] = Polynomial::one(dim);
        Self::covector(xi)
    }

    /// The `2n` basis sections `∂_0 … ∂_{n-1}, dx_0 … dx_{n-1}`.
    pub fn basis(dim: usize) -> Vec<Self> {
        (0..dim)
            .map(|i| Self::coordinate_vector(dim, i).unwrap())
            .chain((0..dim).map(|i| Self::coordinate_covector(dim, i).unwrap()))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn vector_part(&self) -> &VectorField {
        &self.x
    }

    pub fn form_components(&self) -> &[Polynomial] {
        &self.xi
    }

    pub fn form_part(&self) -> MixedForm {
        MixedForm::one_form(&self.xi).expect("consistent chart")
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.xi.iter().all(Polynomial::is_zero)
    }

    /// Components in the order `(X^0 … X^{n-1}, ξ_0 … ξ_{n-1})`.
    pub fn components(&self) -> Vec<Polynomial> {
        self.x.components().iter().chain(self.xi.iter()).cloned().collect()
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { x: self.x.try_add(&other.x)?, xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect() })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { x: self.x.try_sub(&other.x)?, xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a - b).collect() })
    }

    pub fn scale(&self, f: &Polynomial) -> Self {
        Self { x: self.x.scale(f), xi: self.xi.iter().map(|c| c * f).collect() }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        Self { x: self.x.scale_rational(q), xi: self.xi.iter().map(|c| c.scale(q)).collect() }
    }

    /// Exact quotient of every component by `d`; `None` if any division fails.
    pub fn div_exact(&self, d: &Polynomial) -> Option<Self> {
        let x = self.x.components().iter().map(|c| c.div_exact(d)).collect::<Option<Vec<_>>>()?;
        let xi = self.xi.iter().map(|c| c.div_exact(d)).collect::<Option<Vec<_>>>()?;
        Some(Self { x: VectorField::new(x).ok()?, xi })
    }

    pub fn evaluate(&self, pt: &[Rational]) -> Result<Vec<Rational>> {
        self.components().iter().map(|c| c.evaluate(pt)).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.components().iter().all(Polynomial::is_constant)
    }

    /// Constant component values, when every component is constant.
    pub fn constant_values(&self) -> Option<Vec<Rational>> {
        self.components().iter().map(Polynomial::constant_value).collect()
    }
}

/// Pairing of a vector field with 1-form components: `i_X ξ`.
fn contract(x: &VectorField, xi: &[Polynomial]) -> Polynomial {
    let mut acc = Polynomial::zero(x.dim());
    for (a, b) in x.components().iter().zip(xi) {
        if !a.is_zero() && !b.is_zero() {
            acc += &(a * b);
        }
    }
    acc
}

/// Split-signature inner product `(u, v) = ½(i_{X_u} ξ_v + i_{X_v} ξ_u)`.
pub fn gv_inner(u: &GenSection, v: &GenSection) -> Result<Polynomial> {
    check_same(u.dim(), v.dim())?;
    let s = &contract(&u.x, &v.xi) + &contract(&v.x, &u.xi);
    Ok(s.scale(&ratio(1, 2)))
}

/// `π(u) f`: derivative of `f` along the vector part of `u`.
pub fn anchor_derivative(u: &GenSection, f: &Polynomial) -> Result<Polynomial> {
    u.x.apply(f)
}

/// `df` as a section of `T*`.
pub fn differential(f: &Polynomial) -> GenSection {
    let dim = f.dim();
    GenSection { x: VectorField::zero(dim), xi: (0..dim).map(|i| f.partial(i)).collect() }
}

/// Clifford action `(X + ξ)·φ = i_X φ + ξ ∧ φ`.
pub fn clifford_act(u: &GenSection, a: &MixedForm) -> Result<MixedForm> {
    check_same(u.dim(), a.dim())?;
    let ix = a.interior_product(&u.x)?;
    let wedge = u.form_part().wedge_unchecked(a);
    Ok(&ix + &wedge)
}

/// B-field action on sections: `X + ξ ↦ X + ξ + i_X B`.
pub fn bfield_on_section(b: &MixedForm, u: &GenSection) -> Result<GenSection> {
    check_same(b.dim(), u.dim())?;
    b.require_degree(2)?;
    let ixb = b.interior_product(&u.x)?.one_form_components()?;
    Ok(GenSection { x: u.x.clone(), xi: u.xi.iter().zip(&ixb).map(|(a, c)| a + c).collect() })
}

/// Spinor lift `φ ↦ e^B ∧ φ = φ + B∧φ + ½ B∧B∧φ + …`.
pub fn bfield_on_form(b: &MixedForm, a: &MixedForm) -> Result<MixedForm> {
    check_same(b.dim(), a.dim())?;
    b.require_degree(2)?;
    let mut out = a.clone();
    let mut term = a.clone();
    let mut k = 1i64;
    loop {
        term = b.wedge_unchecked(&term).scale_rational(&ratio(1, k));
        if term.is_zero() {
            break;
        }
        out = &out + &term;
        k += 1;
    }
    Ok(out)
}

/// Courant bracket `[X+ξ, Y+η] = [X,Y] + ℒ_X η − ℒ_Y ξ − ½ d(i_X η − i_Y ξ)`.
pub fn courant_bracket(u: &GenSection, v: &GenSection) -> Result<GenSection> {
    check_same(u.dim(), v.dim())?;
    let x = u.x.lie_bracket(&v.x)?;
    let xi = u.form_part();
    let eta = v.form_part();
    let lx_eta = eta.lie_derivative(&u.x)?;
    let ly_xi = xi.lie_derivative(&v.x)?;
    let f = &contract(&u.x, &v.xi) - &contract(&v.x, &u.xi);
    let df = MixedForm::scalar(f).exterior_derivative().scale_rational(&ratio(1, 2));
    let form = &(&lx_eta - &ly_xi) - &df;
    GenSection::from_parts(x, &form)
}

/// `LHS − RHS` of the spinorial definition of the Courant bracket,
/// `2[u,v]·α = d((uv−vu)·α) + 2u·d(v·α) − 2v·d(u·α) + (uv−vu)·dα`.
/// Identically zero for every `u`, `v`, `α`.
pub fn courant_spinor_residual(u: &GenSection, v: &GenSection, a: &MixedForm) -> Result<MixedForm> {
    check_same(u.dim(), v.dim())?;
    check_same(u.dim(), a.dim())?;
    let two = Rational::from_integer(2.into());
    let bracket = courant_bracket(u, v)?;
    let lhs = clifford_act(&bracket, a)?.scale_rational(&two);
    let commutator = |f: &MixedForm| -> Result<MixedForm> {
        Ok(&clifford_act(u, &clifford_act(v, f)?)? - &clifford_act(v, &clifford_act(u, f)?)?)
    };
    let t1 = commutator(a)?.exterior_derivative();
    let t2 = clifford_act(u, &clifford_act(v, a)?.exterior_derivative())?.scale_rational(&two);
    let t3 = clifford_act(v, &clifford_act(u, a)?.exterior_derivative())?.scale_rational(&two);
    let t4 = commutator(&a.exterior_derivative())?;
    let rhs = &(&(&t1 + &t2) - &t3) + &t4;
    Ok(&lhs - &rhs)
}

/// Residual of `[u, f v] = f[u,v] + (π(u)f) v − (u,v) df`.
pub fn function_linearity_residual(u: &GenSection, v: &GenSection, f: &Polynomial) -> Result<GenSection> {
    let lhs = courant_bracket(u, &v.scale(f))?;
    let rhs = courant_bracket(u, v)?
        .scale(f)
        .try_add(&v.scale(&anchor_derivative(u, f)?))?
        .try_sub(&differential(f).scale(&gv_inner(u, v)?))?;
    lhs.try_sub(&rhs)
}

/// Residual of `π(u)(v,w) = ([u,v] + d(u,v), w) + (v, [u,w] + d(u,w))`.
pub fn metric_invariance_residual(u: &GenSection, v: &GenSection, w: &GenSection) -> Result<Polynomial> {
    let lhs = anchor_derivative(u, &gv_inner(v, w)?)?;
    let a = courant_bracket(u, v)?.try_add(&differential(&gv_inner(u, v)?))?;
    let b = courant_bracket(u, w)?.try_add(&differential(&gv_inner(u, w)?))?;
    let rhs = &gv_inner(&a, w)? + &gv_inner(v, &b)?;
    Ok(&lhs - &rhs)
}

/// `[e^B u, e^B v] − e^B [u, v]` for a 2-form `B` acting on sections.
pub fn bfield_bracket_defect(b: &MixedForm, u: &GenSection, v: &GenSection) -> Result<GenSection> {
    let lhs = courant_bracket(&bfield_on_section(b, u)?, &bfield_on_section(b, v)?)?;
    let rhs = bfield_on_section(b, &courant_bracket(u, v)?)?;
    lhs.try_sub(&rhs)
}

/// `−i_X i_Y H` as a section of `T*`, for a 3-form `H`.
pub fn minus_double_contraction(x: &VectorField, y: &VectorField, h: &MixedForm) -> Result<GenSection> {
    let c = h.interior_product(y)?.interior_product(x)?;
    GenSection::covector((-&c).one_form_components()?)
}

/// Exact check that a constant section family spans the same space as another.
pub fn same_constant_span(a: &[GenSection], b: &[GenSection]) -> Option<bool> {
    let rows = |s: &[GenSection]| s.iter().map(GenSection::constant_values).collect::<Option<Vec<_>>>();
    let ra = rows(a)?;
    let rb = rows(b)?;
    let rank_a = crate::algebra::rank_rational(&ra);
    let rank_b = crate::algebra::rank_rational(&rb);
    let mut all = ra.clone();
    all.extend(rb);
    let rank_ab = crate::algebra::rank_rational(&all);
    Some(rank_a == rank_b && rank_a == rank_ab)
}
