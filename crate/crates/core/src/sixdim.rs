//! The six-dimensional structure `σ(z) = dt∧ρ̂(z) + ρ(z)` on `R × M`.
//!
//! Coordinate 0 of the 6-chart is `t`; spatial coordinates shift up by one.
//! With `s = sign f` the companion form is `ρ̂(z) = ũ(z)·ρ(z)`, `ũ = s·u`,
//! `u(z) = z⁻¹v₁ − z v₂`, and the second annihilating section is
//! `w(z) = ∂_t − (ũ,ũ) dt − ũ(z)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{grid_courant, lambda_field, triple_fields, Flow, GridState, SectionField, Trajectory};
use crate::pointwise::{even_to_form, odd_to_form, section_from_array, Kernel5, PointForm, PointSection};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ZValue {
    Finite(f64),
    Infinity,
}

impl ZValue {
    pub fn label(&self) -> String {
        match self {
            ZValue::Finite(z) => format!("{z}"),
            ZValue::Infinity => "inf".into(),
        }
    }

    /// Coefficients `(a, b)` with `ρ(z) ∝ a ρ₁ + b ρ₂`.
    fn weights(&self) -> (f64, f64) {
        match *self {
            ZValue::Finite(z) => (1.0, z),
            ZValue::Infinity => (0.0, 1.0),
        }
    }
}

/// `±1/2, ±1, ±2` and the reduced representatives at `0` and `∞`.
pub fn default_sweep() -> Vec<ZValue> {
    let mut out: Vec<ZValue> = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0].into_iter().map(ZValue::Finite).collect();
    out.push(ZValue::Finite(0.0));
    out.push(ZValue::Infinity);
    out
}

/// Pointwise data of a stable pair on the 5-chart.
#[derive(Clone, Debug)]
pub struct NodeTriple {
    pub rho1: PointForm,
    pub rho2: PointForm,
    pub rho_hat1: PointForm,
    pub rho_hat2: PointForm,
    pub v1: PointSection,
    pub h: PointSection,
    pub v2: PointSection,
    pub sign: f64,
}

pub fn node_triple(kernel: &Kernel5, r1: &[f64; 16], r2: &[f64; 16]) -> Result<NodeTriple> {
    let an = kernel.analyze(r1, r2)?;
    let p12 = kernel.p(r1, r2);
    let sec = |q: &[f64; 10]| section_from_array(q).scaled(1.0 / an.density);
    Ok(NodeTriple {
        rho1: even_to_form(r1),
        rho2: even_to_form(r2),
        rho_hat1: odd_to_form(&an.rho_hat1),
        rho_hat2: odd_to_form(&an.rho_hat2),
        v1: sec(&an.q1),
        h: sec(&p12),
        v2: sec(&an.q2),
        sign: an.sign,
    })
}

impl NodeTriple {
    /// `v(z) = v₁ + 2z h + z² v₂`, divided by `z²` at infinity.
    pub fn v(&self, z: ZValue) -> PointSection {
        match z {
            ZValue::Finite(z) => self.v1.plus(&self.h.scaled(2.0 * z)).plus(&self.v2.scaled(z * z)),
            ZValue::Infinity => self.v2,
        }
    }

    /// `ũ(z) = s(z⁻¹v₁ − z v₂)`, replaced by `s(u ∓ z⁻¹v)` at `z = 0, ∞`.
    pub fn u_eff(&self, z: ZValue) -> PointSection {
        let u = match z {
            ZValue::Finite(z) if z == 0.0 => self.h.scaled(-2.0),
            ZValue::Finite(z) => self.v1.scaled(1.0 / z).minus(&self.v2.scaled(z)),
            ZValue::Infinity => self.h.scaled(2.0),
        };
        u.scaled(self.sign)
    }

    pub fn rho(&self, z: ZValue) -> PointForm {
        let (a, b) = z.weights();
        self.rho1.scaled(a).plus(&self.rho2.scaled(b))
    }

    pub fn rho_hat(&self, z: ZValue) -> PointForm {
        let (a, b) = z.weights();
        self.rho_hat1.scaled(a).plus(&self.rho_hat2.scaled(b))
    }
}

/// `σ(z)`, `v(z)` and `w(z)` at one node, on the 6-chart.
#[derive(Clone, Debug)]
pub struct SigmaSlice {
    pub z: ZValue,
    pub sigma: PointForm,
    pub v: PointSection,
    pub w: PointSection,
}

pub fn sigma_slice(nt: &NodeTriple, z: ZValue) -> SigmaSlice {
    let sigma = nt.rho_hat(z).lift_with_leading_axis().wedge_dx(0).plus(&nt.rho(z).lift_with_leading_axis());
    let u = nt.u_eff(z);
    let mut w = u.lift_with_leading_axis().scaled(-1.0);
    w.x[0] = 1.0;
    w.xi[0] = -u.inner(&u);
    SigmaSlice { z, sigma, v: nt.v(z).lift_with_leading_axis(), w }
}

impl SigmaSlice {
    /// `(|v·σ|, |w·σ|)`.
    pub fn annihilator_residual(&self) -> (f64, f64) {
        (self.v.act(&self.sigma).max_abs(), self.w.act(&self.sigma).max_abs())
    }

    /// `((v,v), (v,w), (w,w))`.
    pub fn inner_products(&self) -> [f64; 3] {
        [self.v.inner(&self.v), self.v.inner(&self.w), self.w.inner(&self.w)]
    }
}

/// Matrix whose column `a` is `e_a·σ` for the 12 basis sections of the 6-chart.
fn action_matrix(sigma: &PointForm) -> DMatrix<f64> {
    let n = sigma.dim();
    let mut m = DMatrix::zeros(1 << n, 2 * n);
    for a in 0..2 * n {
        let col = PointSection::basis(n, a).act(sigma);
        for (r, &v) in col.coeffs().iter().enumerate() {
            m[(r, a)] = v;
        }
    }
    m
}

/// Orthonormal basis (in the Euclidean sense) of the annihilator of `σ`.
pub fn annihilator_basis(sigma: &PointForm, rel_tol: f64) -> Vec<Vec<f64>> {
    let svd = action_matrix(sigma).svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= rel_tol * top)
        .map(|i| v_t.row(i).iter().copied().collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanReport {
    /// Annihilator dimension for each `z`.
    pub nullities: Vec<usize>,
    pub rank: usize,
    /// `(positive, negative)` eigenvalue counts of the Gram matrix on the span.
    pub signature: (usize, usize),
    pub gram_eigenvalues: Vec<f64>,
}

/// Span of the annihilators of `σ(z)` over the sweep, and its Gram signature.
pub fn annihilator_span(nt: &NodeTriple, zs: &[ZValue], rel_tol: f64) -> SpanReport {
    let mut rows = Vec::new();
    let mut nullities = Vec::new();
    for &z in zs {
        let basis = annihilator_basis(&sigma_slice(nt, z).sigma, rel_tol);
        nullities.push(basis.len());
        rows.extend(basis);
    }
    let k = DMatrix::from_fn(rows.len(), 12, |i, j| rows[i][j]);
    let svd = k.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let span: Vec<Vec<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * top)
        .map(|i| v_t.row(i).iter().copied().collect())
        .collect();
    let r = span.len();
    let gram = DMatrix::from_fn(r, r, |i, j| {
        PointSection::from_slice(6, &span[i]).inner(&PointSection::from_slice(6, &span[j]))
    });
    let ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    let big = ev.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let pos = ev.iter().filter(|&&e| e > rel_tol * big).count();
    let neg = ev.iter().filter(|&&e| e < -rel_tol * big).count();
    let mut gram_eigenvalues = ev;
    gram_eigenvalues.sort_by(f64::total_cmp);
    SpanReport { nullities, rank: r, signature: (pos, neg), gram_eigenvalues }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnihilatorReport {
    pub z: String,
    pub max_v_residual: f64,
    pub max_w_residual: f64,
    /// `max |(v,v)|, |(v,w)|, |(w,w)|` over nodes.
    pub max_inner_products: [f64; 3],
}

/// Annihilator residuals and null inner products at every node of a state.
pub fn annihilator_check(flow: &Flow, s: &GridState, zs: &[ZValue]) -> Result<Vec<AnnihilatorReport>> {
    let nn = flow.grid.nodes();
    let mut out: Vec<AnnihilatorReport> = zs
        .iter()
        .map(|z| AnnihilatorReport {
            z: z.label(),
            max_v_residual: 0.0,
            max_w_residual: 0.0,
            max_inner_products: [0.0; 3],
        })
        .collect();
    for node in 0..nn {
        let (r1, r2) = s.rho_at(nn, node);
        let nt = node_triple(flow.kernel(), &r1, &r2)?;
        for (rep, &z) in out.iter_mut().zip(zs) {
            let slice = sigma_slice(&nt, z);
            let (rv, rw) = slice.annihilator_residual();
            rep.max_v_residual = rep.max_v_residual.max(rv);
            rep.max_w_residual = rep.max_w_residual.max(rw);
            for (m, ip) in rep.max_inner_products.iter_mut().zip(slice.inner_products()) {
                *m = m.max(ip.abs());
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosureReport {
    pub step: usize,
    pub t: f64,
    /// `max |dσ(z)|` for each `z`.
    pub per_z: Vec<(String, f64)>,
}

impl ClosureReport {
    pub fn max(&self) -> f64 {
        self.per_z.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// `dσ(z) = dt∧(∂_t ρ(z) − dρ̂(z)) + dρ(z)` with central time differences.
pub fn sigma_closure(flow: &Flow, traj: &Trajectory, zs: &[ZValue]) -> Result<Vec<ClosureReport>> {
    let steps = traj.centered_steps();
    if steps.is_empty() {
        return Err(Error::TooFewSteps { needed: 3, have: traj.frames.len() });
    }
    let nn = flow.grid.nodes();
    steps
        .into_iter()
        .map(|k| {
            let prev = &traj.frame(k - 1).unwrap().state;
            let next = &traj.frame(k + 1).unwrap().state;
            let cur = &traj.frame(k).unwrap().state;
            let d_hat = flow.d_odd(&flow.hat_field(cur)?.rho_hat);
            let d_rho = flow.d_even(&cur.data);
            let per_z = zs
                .iter()
                .map(|z| {
                    let (a, b) = z.weights();
                    let mut worst = 0.0f64;
                    for c in 0..16 {
                        for i in 0..nn {
                            let i1 = c * nn + i;
                            let i2 = (16 + c) * nn + i;
                            let rate = |j: usize| (next.data[j] - prev.data[j]) / (2.0 * traj.dt) - d_hat[j];
                            worst = worst.max((a * rate(i1) + b * rate(i2)).abs());
                        }
                    }
                    for c in 0..16 {
                        for i in 0..nn {
                            worst = worst.max((a * d_rho[c * nn + i] + b * d_rho[(16 + c) * nn + i]).abs());
                        }
                    }
                    (z.label(), worst)
                })
                .collect();
            Ok(ClosureReport { step: k, t: cur.t, per_z })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub step: usize,
    pub z: String,
    /// `max |[w(z), v(z)] − λ v(z)|`.
    pub residual: f64,
}

/// `[w(z), v(z)] − λ v(z) = ∂_t v + [v, ũ] − λ v` on the grid.
pub fn bracket_check(flow: &Flow, traj: &Trajectory, zs: &[ZValue]) -> Result<Vec<BracketReport>> {
    let steps = traj.centered_steps();
    if steps.is_empty() {
        return Err(Error::TooFewSteps { needed: 3, have: traj.frames.len() });
    }
    let nn = flow.grid.nodes();
    let combine = |t: &[SectionField; 3], z: ZValue| -> SectionField {
        match z {
            ZValue::Finite(z) => (0..10 * nn).map(|i| t[0][i] + 2.0 * z * t[1][i] + z * z * t[2][i]).collect(),
            ZValue::Infinity => t[2].clone(),
        }
    };
    let mut out = Vec::new();
    for k in steps {
        let prev = triple_fields(flow, &traj.frame(k - 1).unwrap().state)?.0;
        let next = triple_fields(flow, &traj.frame(k + 1).unwrap().state)?.0;
        let (cur, sign) = triple_fields(flow, &traj.frame(k).unwrap().state)?;
        let lambda = lambda_field(nn, &cur[1], &grid_courant(&flow.grid, &cur[0], &cur[2]), &sign);
        for &z in zs {
            let v = combine(&cur, z);
            let rate: Vec<f64> =
                combine(&next, z).iter().zip(combine(&prev, z)).map(|(a, b)| (a - b) / (2.0 * traj.dt)).collect();
            let u: SectionField = (0..10 * nn)
                .map(|i| {
                    let s = sign[i % nn];
                    s * match z {
                        ZValue::Finite(z) if z == 0.0 => -2.0 * cur[1][i],
                        ZValue::Finite(z) => cur[0][i] / z - z * cur[2][i],
                        ZValue::Infinity => 2.0 * cur[1][i],
                    }
                })
                .collect();
            let b = grid_courant(&flow.grid, &v, &u);
            let residual = (0..10 * nn).map(|i| (rate[i] + b[i] - lambda[i % nn] * v[i]).abs()).fold(0.0, f64::max);
            out.push(BracketReport { step: k, z: z.label(), residual });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin55::normal_form;

    fn normal_triple() -> NodeTriple {
        let (r1, r2) = normal_form().evaluate_f64(&[0.0; 5]);
        node_triple(&Kernel5::new(), &r1, &r2).unwrap()
    }

    #[test]
    fn normal_form_slices_are_annihilated() {
        let nt = normal_triple();
        for z in default_sweep() {
            let s = sigma_slice(&nt, z);
            let (rv, rw) = s.annihilator_residual();
            assert!(rv < 1e-12 && rw < 1e-12, "{z:?}: {rv} {rw}");
            assert!(s.inner_products().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn sigma_is_linear_in_z() {
        let nt = normal_triple();
        let s0 = sigma_slice(&nt, ZValue::Finite(0.0)).sigma;
        let s1 = sigma_slice(&nt, ZValue::Infinity).sigma;
        let s = sigma_slice(&nt, ZValue::Finite(2.0)).sigma;
        assert!(s.minus(&s0.plus(&s1.scaled(2.0))).max_abs() < 1e-14);
    }

    #[test]
    fn corrupted_sigma_detected() {
        let nt = normal_triple();
        let mut s = sigma_slice(&nt, ZValue::Finite(1.0));
        s.sigma.set(0b11, s.sigma.get(0b11) + 1.0);
        let (rv, rw) = s.annihilator_residual();
        assert!(rv.max(rw) > 0.1);
    }

    #[test]
    fn annihilator_span_has_split_signature() {
        let rep = annihilator_span(&normal_triple(), &default_sweep(), 1e-9);
        assert!(rep.nullities.iter().all(|&k| k == 2), "{rep:?}");
        assert_eq!(rep.rank, 4);
        assert_eq!(rep.signature, (2, 2));
    }
}
