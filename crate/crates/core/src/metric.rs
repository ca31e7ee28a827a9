//! Generalized metrics given by a splitting tensor `C = g + B`, the lifts
//! `X±`, the operator `Δ_X Y = [X⁻, Y⁺] − [X, Y]⁻` and the connection it defines.

use num_traits::Zero;

use crate::algebra::{check_same, determinant_rational, invert_rational, ratio, signum, Polynomial, Rational};
use crate::error::{Error, Result};
use crate::forms::{MixedForm, VectorField};
use crate::generalized::{courant_bracket, GenSection};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LiftSign {
    Plus,
    Minus,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneralizedMetric {
    c: Vec<Vec<Polynomial>>,
}

impl GeneralizedMetric {
    pub fn new(c: Vec<Vec<Polynomial>>) -> Result<Self> {
        let n = c.len();
        crate::algebra::Chart::new(n)?;
        for row in &c {
            check_same(n, row.len())?;
            for p in row {
                check_same(n, p.dim())?;
            }
        }
        Ok(Self { c })
    }

    /// `C = g + B` from a symmetric `g` and the 2-form `B`.
    pub fn from_parts(g: &[Vec<Polynomial>], b: &MixedForm) -> Result<Self> {
        let n = g.len();
        check_same(n, b.dim())?;
        if !b.is_zero() {
            b.require_degree(2)?;
        }
        let mut c = g.to_vec();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[i][j] = &c[i][j] + &b.coefficient_signed(&[i, j]);
                }
            }
        }
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn splitting(&self) -> &[Vec<Polynomial>] {
        &self.c
    }

    /// `g_ij = ½(C_ij + C_ji)`.
    pub fn g(&self) -> Vec<Vec<Polynomial>> {
        let n = self.dim();
        let half = ratio(1, 2);
        (0..n).map(|i| (0..n).map(|j| (&self.c[i][j] + &self.c[j][i]).scale(&half)).collect()).collect()
    }

    /// The curving `B = Σ_{i<j} ½(C_ij − C_ji) dx_i∧dx_j`.
    pub fn b(&self) -> MixedForm {
        let n = self.dim();
        let half = ratio(1, 2);
        let mut out = MixedForm::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                let coeff = (&self.c[i][j] - &self.c[j][i]).scale(&half);
                if !coeff.is_zero() {
                    out = &out + &MixedForm::monomial(&[i, j], coeff).unwrap();
                }
            }
        }
        out
    }

    pub fn h(&self) -> MixedForm {
        self.b().exterior_derivative()
    }

    /// The splitting of the orthogonal complement, `C' = −Cᵀ`.
    pub fn swapped(&self) -> Self {
        let n = self.dim();
        Self { c: (0..n).map(|i| (0..n).map(|j| -&self.c[j][i]).collect()).collect() }
    }

    pub fn g_at(&self, pt: &[Rational]) -> Result<Vec<Vec<Rational>>> {
        self.g().iter().map(|row| row.iter().map(|p| p.evaluate(pt)).collect()).collect()
    }
}

/// `X⁺ = X + C(X, ·)` and `X⁻ = X − C(·, X)`.
pub fn lift(x: &VectorField, sign: LiftSign, v: &GeneralizedMetric) -> Result<GenSection> {
    check_same(x.dim(), v.dim())?;
    let n = v.dim();
    let mut xi = vec![Polynomial::zero(n); n];
    for (k, slot) in xi.iter_mut().enumerate() {
        for i in 0..n {
            let xi_comp = x.component(i);
            if xi_comp.is_zero() {
                continue;
            }
            match sign {
                LiftSign::Plus => *slot += &(xi_comp * &v.c[i][k]),
                LiftSign::Minus => *slot -= &(xi_comp * &v.c[k][i]),
            }
        }
    }
    GenSection::new(x.clone(), xi)
}

/// The 1-form `Δ_X Y = [X⁻, Y⁺] − [X, Y]⁻`, equal to `2g(∇_X Y)`.
pub fn delta(x: &VectorField, y: &VectorField, v: &GeneralizedMetric) -> Result<MixedForm> {
    check_same(x.dim(), y.dim())?;
    let bracket = courant_bracket(&lift(x, LiftSign::Minus, v)?, &lift(y, LiftSign::Plus, v)?)?;
    let diff = bracket.try_sub(&lift(&x.lie_bracket(y)?, LiftSign::Minus, v)?)?;
    if !diff.vector_part().is_zero() {
        return Err(Error::NonvanishingVectorPart(format!("{:?}", diff.vector_part())));
    }
    Ok(diff.form_part())
}

/// Lowered coefficients `Γ_{ij,k} = g(∇_{∂i} ∂j, ∂k)`, indexed `[i][j][k]`.
pub fn lowered_connection(v: &GeneralizedMetric) -> Result<Vec<Vec<Vec<Polynomial>>>> {
    let n = v.dim();
    let half = ratio(1, 2);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let di = VectorField::coordinate(n, i)?;
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let dj = VectorField::coordinate(n, j)?;
            let comps = delta(&di, &dj, v)?.one_form_components()?;
            row.push(comps.iter().map(|c| c.scale(&half)).collect());
        }
        out.push(row);
    }
    Ok(out)
}

/// Christoffel symbols `Γ^ℓ_ij` at a rational point, indexed `[ℓ][i][j]`.
pub fn connection_at(v: &GeneralizedMetric, pt: &[Rational]) -> Result<Vec<Vec<Vec<Rational>>>> {
    let lowered = lowered_connection(v)?;
    connection_from_lowered(v, &lowered, pt)
}

/// Raises lowered coefficients with `g⁻¹` evaluated at `pt`.
pub fn connection_from_lowered(
    v: &GeneralizedMetric,
    lowered: &[Vec<Vec<Polynomial>>],
    pt: &[Rational],
) -> Result<Vec<Vec<Vec<Rational>>>> {
    let n = v.dim();
    let ginv = invert_rational(&v.g_at(pt)?).ok_or_else(|| Error::Singular(format!("g at {pt:?}")))?;
    let mut low = vec![vec![vec![Rational::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                low[i][j][k] = lowered[i][j][k].evaluate(pt)?;
            }
        }
    }
    let mut out = vec![vec![vec![Rational::zero(); n]; n]; n];
    for (l, gl) in ginv.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let mut acc = Rational::zero();
                for k in 0..n {
                    acc += &gl[k] * &low[i][j][k];
                }
                out[l][i][j] = acc;
            }
        }
    }
    Ok(out)
}

/// `Σ_k (∂_i g_jk + ∂_j g_ik − ∂_k g_ij) dx_k` for the symmetric part of `v`.
pub fn christoffel_form(v: &GeneralizedMetric, i: usize, j: usize) -> Result<MixedForm> {
    let n = v.dim();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { index: i.max(j), dim: n });
    }
    let g = v.g();
    let comps: Vec<Polynomial> =
        (0..n).map(|k| &(&g[j][k].partial(i) + &g[i][k].partial(j)) - &g[i][j].partial(k)).collect();
    MixedForm::one_form(&comps)
}

/// `(i_{∂i} i_{∂j} H)(∂k)`.
fn double_contraction(h: &MixedForm, i: usize, j: usize, k: usize) -> Polynomial {
    h.coefficient_signed(&[j, i, k])
}

/// The torsion 3-form `τ` with `g(T(X,Y)) = i_X i_Y τ`, so skew torsion `−H` means `τ = −H`.
pub fn lowered_torsion(v: &GeneralizedMetric) -> Result<MixedForm> {
    let n = v.dim();
    let gamma = lowered_connection(v)?;
    let mut out = MixedForm::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = &gamma[i][j][k] - &gamma[j][i][k];
                if !t.is_zero() {
                    out = &out + &MixedForm::monomial(&[j, i, k], t)?;
                }
            }
        }
    }
    // fails unless the torsion tensor is totally skew
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t = &gamma[i][j][k] - &gamma[j][i][k];
                if t != double_contraction(&out, i, j, k) {
                    return Err(Error::Inconsistent(format!("torsion not totally skew at ({i},{j},{k})")));
                }
            }
        }
    }
    Ok(out)
}

/// `∂_i g_jk − Γ_{ij,k} − Γ_{ik,j}`, indexed `[i][j][k]`.
pub fn compatibility_residual(v: &GeneralizedMetric) -> Result<Vec<Vec<Vec<Polynomial>>>> {
    let n = v.dim();
    let g = v.g();
    let gamma = lowered_connection(v)?;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| &(&g[j][k].partial(i) - &gamma[i][j][k]) - &gamma[i][k][j]).collect())
                .collect()
        })
        .collect())
}

/// Sylvester's criterion on `g` at a rational point.
pub fn is_positive_definite_at(v: &GeneralizedMetric, pt: &[Rational]) -> Result<bool> {
    let g = v.g_at(pt)?;
    for k in 1..=g.len() {
        let minor: Vec<Vec<Rational>> = g[..k].iter().map(|r| r[..k].to_vec()).collect();
        if signum(&determinant_rational(&minor)) <= 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointTorsion {
    pub point: Vec<Rational>,
    /// Largest component of `g(T(∂i,∂j)) + i_{∂i} i_{∂j} H`.
    pub torsion_residual: Rational,
    /// Largest component of `g(T'(∂i,∂j)) − i_{∂i} i_{∂j} H` for the swapped splitting.
    pub swapped_torsion_residual: Rational,
    /// Largest `|∂_i g_jk − g(∇_i ∂_j, ∂_k) − g(∂_j, ∇_i ∂_k)|`.
    pub compatibility_residual: Rational,
    pub positive_definite: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionReport {
    pub points: Vec<PointTorsion>,
    pub warnings: Vec<String>,
}

impl TorsionReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| {
            p.torsion_residual.is_zero() && p.swapped_torsion_residual.is_zero() && p.compatibility_residual.is_zero()
        })
    }
}

fn max_abs(acc: &mut Rational, q: Rational) {
    let a = if q < Rational::zero() { -q } else { q };
    if a > *acc {
        *acc = a;
    }
}

/// Checks skew torsion `−H`, torsion `+H` for the swapped splitting, and metric
/// compatibility at each point.
pub fn torsion_check(v: &GeneralizedMetric, pts: &[Vec<Rational>]) -> Result<TorsionReport> {
    let n = v.dim();
    let g = v.g();
    let h = v.h();
    let gamma = lowered_connection(v)?;
    let swapped = lowered_connection(&v.swapped())?;
    let mut points = Vec::with_capacity(pts.len());
    let mut warnings = Vec::new();
    for pt in pts {
        check_same(n, pt.len())?;
        let mut torsion = Rational::zero();
        let mut swapped_torsion = Rational::zero();
        let mut compat = Rational::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let ijh = double_contraction(&h, i, j, k).evaluate(pt)?;
                    let t = (&gamma[i][j][k] - &gamma[j][i][k]).evaluate(pt)?;
                    max_abs(&mut torsion, &t + &ijh);
                    // Γ' is lowered by g' = −g
                    let ts = -(&swapped[i][j][k] - &swapped[j][i][k]).evaluate(pt)?;
                    max_abs(&mut swapped_torsion, &ts - &ijh);
                    let c = (&(&g[j][k].partial(i) - &gamma[i][j][k]) - &gamma[i][k][j]).evaluate(pt)?;
                    max_abs(&mut compat, c);
                }
            }
        }
        let positive_definite = is_positive_definite_at(v, pt)?;
        if !positive_definite {
            warnings.push(format!(
                "g is not positive definite at ({})",
                pt.iter().map(crate::algebra::format_rational).collect::<Vec<_>>().join(", ")
            ));
        }
        points.push(PointTorsion {
            point: pt.clone(),
            torsion_residual: torsion,
            swapped_torsion_residual: swapped_torsion,
            compatibility_residual: compat,
            positive_definite,
        });
    }
    Ok(TorsionReport { points, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn x(dim: usize, i: usize) -> Polynomial {
        Polynomial::var(dim, i).unwrap()
    }

    fn identity(n: usize) -> Vec<Vec<Polynomial>> {
        (0..n).map(|i| (0..n).map(|j| Polynomial::from_int(n, (i == j) as i64)).collect()).collect()
    }

    #[test]
    fn euclidean_lifts() {
        let v = GeneralizedMetric::from_parts(&identity(3), &MixedForm::zero(3)).unwrap();
        let d1 = VectorField::coordinate(3, 0).unwrap();
        let plus = lift(&d1, LiftSign::Plus, &v).unwrap();
        let minus = lift(&d1, LiftSign::Minus, &v).unwrap();
        let e = GenSection::coordinate_covector(3, 0).unwrap();
        assert_eq!(plus, GenSection::vector(d1.clone()).try_add(&e).unwrap());
        assert_eq!(minus, GenSection::vector(d1).try_sub(&e).unwrap());
    }

    #[test]
    fn lifts_are_orthogonal_and_recover_g() {
        let g = vec![
            vec![&Polynomial::from_int(2, 2) + &x(2, 1), Polynomial::from_int(2, 1)],
            vec![Polynomial::from_int(2, 1), Polynomial::from_int(2, 3)],
        ];
        let b = MixedForm::monomial(&[0, 1], &x(2, 0) * &x(2, 1)).unwrap();
        let v = GeneralizedMetric::from_parts(&g, &b).unwrap();
        assert_eq!(v.b(), b);
        let xs = VectorField::new(vec![x(2, 0), Polynomial::from_int(2, 1)]).unwrap();
        let ys = VectorField::new(vec![Polynomial::from_int(2, 2), x(2, 1)]).unwrap();
        let xm = lift(&xs, LiftSign::Minus, &v).unwrap();
        let yp = lift(&ys, LiftSign::Plus, &v).unwrap();
        assert!(crate::generalized::gv_inner(&xm, &yp).unwrap().is_zero());
        let xp = lift(&xs, LiftSign::Plus, &v).unwrap();
        let mut gxy = Polynomial::zero(2);
        for i in 0..2 {
            for j in 0..2 {
                gxy += &(&(xs.component(i) * ys.component(j)) * &g[i][j]);
            }
        }
        assert_eq!(crate::generalized::gv_inner(&xp, &yp).unwrap(), gxy);
    }

    #[test]
    fn delta_linearity() {
        let g = vec![vec![&Polynomial::from_int(2, 1) + &x(2, 1), Polynomial::zero(2)], identity(2)[1].clone()];
        let b = MixedForm::monomial(&[0, 1], x(2, 0)).unwrap();
        let v = GeneralizedMetric::from_parts(&g, &b).unwrap();
        let xs = VectorField::coordinate(2, 1).unwrap();
        let ys = VectorField::new(vec![x(2, 1), Polynomial::from_int(2, 1)]).unwrap();
        let f = &x(2, 0) * &x(2, 1);
        let base = delta(&xs, &ys, &v).unwrap();
        assert_eq!(delta(&xs.scale(&f), &ys, &v).unwrap(), base.scale(&f));
        let xf = xs.apply(&f).unwrap();
        let gy: Vec<Polynomial> =
            (0..2).map(|k| (0..2).fold(Polynomial::zero(2), |acc, i| &acc + &(ys.component(i) * &g[i][k]))).collect();
        let expected = &base.scale(&f) + &MixedForm::one_form(&gy).unwrap().scale(&xf.scale(&rat(2)));
        assert_eq!(delta(&xs, &ys.scale(&f), &v).unwrap(), expected);
        let flat = GeneralizedMetric::from_parts(&identity(2), &MixedForm::zero(2)).unwrap();
        assert!(delta(&xs, &VectorField::coordinate(2, 0).unwrap(), &flat).unwrap().is_zero());
    }

    #[test]
    fn skew_torsion_example() {
        let b = MixedForm::monomial(&[1, 2], x(3, 0)).unwrap();
        let v = GeneralizedMetric::from_parts(&identity(3), &b).unwrap();
        assert_eq!(lowered_torsion(&v).unwrap(), -&MixedForm::basis(3, &[0, 1, 2]).unwrap());
        let pts = vec![vec![rat(0), rat(1), ratio(1, 2)], vec![rat(-2), rat(3), rat(5)]];
        let report = torsion_check(&v, &pts).unwrap();
        assert!(report.passed());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn flat_connection_vanishes() {
        let v = GeneralizedMetric::from_parts(&identity(3), &MixedForm::zero(3)).unwrap();
        let gamma = connection_at(&v, &[rat(1), rat(2), rat(3)]).unwrap();
        assert!(gamma.iter().flatten().flatten().all(Zero::is_zero));
    }

    #[test]
    fn closed_b_gives_no_torsion() {
        let b = MixedForm::basis(3, &[0, 1]).unwrap();
        let v = GeneralizedMetric::from_parts(&identity(3), &b).unwrap();
        assert!(lowered_torsion(&v).unwrap().is_zero());
    }

    #[test]
    fn indefinite_metric_warns() {
        let mut g = identity(2);
        g[1][1] = Polynomial::from_int(2, -1);
        let v = GeneralizedMetric::from_parts(&g, &MixedForm::zero(2)).unwrap();
        let report = torsion_check(&v, &[vec![rat(0), rat(0)]]).unwrap();
        assert!(report.passed());
        assert_eq!(report.warnings.len(), 1);
    }
}
