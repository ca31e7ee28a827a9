//! The flow `∂ρ/∂t = dρ̂` on the periodic torus `[0, 2π)⁵`, sampled on an
//! `N⁵` lattice, with conservation and Nahm-residual diagnostics.
//!
//! Grid data is stored component-major: component `c` occupies
//! `data[c·N⁵ .. (c+1)·N⁵]`. A state has 32 components: the 16 even slots of
//! `ρ₁` in `EVEN5` order followed by those of `ρ₂`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::blade::{self, Mask};
use crate::error::{Error, Result};
use crate::pointwise::{parity_index, Kernel5, RhoAnalysis5, EVEN5, ODD5};
use crate::spin55::RhoPair;

pub const AXES: usize = 5;
pub const STATE_COMPONENTS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    #[default]
    Spectral,
    FiniteDifference4,
}

/// Periodic lattice with a dense per-axis derivative matrix.
#[derive(Clone, Debug)]
pub struct Grid {
    n: usize,
    scheme: DerivativeScheme,
    d: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, scheme: DerivativeScheme) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("N = {n} < 4")));
        }
        if scheme == DerivativeScheme::Spectral && !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("spectral differentiation needs even N, got {n}")));
        }
        let h = 2.0 * PI / n as f64;
        let mut d = vec![0.0; n * n];
        for j in 0..n {
            match scheme {
                DerivativeScheme::Spectral => {
                    for k in 0..n {
                        if j != k {
                            let diff = j as f64 - k as f64;
                            let sign = if (j + n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
                            d[j * n + k] = 0.5 * sign / (0.5 * diff * h).tan();
                        }
                    }
                }
                DerivativeScheme::FiniteDifference4 => {
                    for (off, w) in [(-2i64, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)] {
                        let k = (j as i64 + off).rem_euclid(n as i64) as usize;
                        d[j * n + k] += w / h;
                    }
                }
            }
        }
        Ok(Self { n, scheme, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn nodes(&self) -> usize {
        self.n.pow(AXES as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(AXES as i32)
    }

    /// Lattice coordinates of a node; axis 0 varies slowest.
    pub fn node_coords(&self, node: usize) -> [usize; AXES] {
        let mut out = [0; AXES];
        let mut rest = node;
        for k in (0..AXES).rev() {
            out[k] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn node_point(&self, node: usize) -> [f64; AXES] {
        self.node_coords(node).map(|i| i as f64 * self.spacing())
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((AXES - 1 - axis) as u32)
    }

    /// `dst = ∂_axis src` for one scalar field.
    pub fn derivative(&self, src: &[f64], dst: &mut [f64], axis: usize) {
        let n = self.n;
        let s = self.stride(axis);
        let blocks = self.nodes() / (n * s);
        let mut line = vec![0.0; n];
        for b in 0..blocks {
            for inner in 0..s {
                let base = b * n * s + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = src[base + k * s];
                }
                for j in 0..n {
                    let row = &self.d[j * n..(j + 1) * n];
                    dst[base + j * s] = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// A differential form on the grid, indexed by mask; empty vectors are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GridForm {
    pub coeffs: Vec<Vec<f64>>,
}

impl GridForm {
    pub fn zero() -> Self {
        Self { coeffs: vec![Vec::new(); 1 << AXES] }
    }

    pub fn set(&mut self, m: Mask, values: Vec<f64>) {
        self.coeffs[m as usize] = values;
    }

    pub fn get(&self, m: Mask) -> Option<&[f64]> {
        let v = &self.coeffs[m as usize];
        (!v.is_empty()).then_some(v.as_slice())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flatten().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

/// Exterior derivative on the grid.
pub fn grid_d(grid: &Grid, form: &GridForm) -> GridForm {
    let nn = grid.nodes();
    let mut out = GridForm::zero();
    let mut tmp = vec![0.0; nn];
    for m in 0..(1u16 << AXES) {
        let Some(src) = form.get(m) else { continue };
        for axis in 0..AXES {
            let Some(sign) = blade::prefix_sign(axis, m) else { continue };
            grid.derivative(src, &mut tmp, axis);
            let target = &mut out.coeffs[(m | 1 << axis) as usize];
            if target.is_empty() {
                target.resize(nn, 0.0);
            }
            for (t, v) in target.iter_mut().zip(&tmp) {
                *t += sign as f64 * v;
            }
        }
    }
    out
}

/// One Fourier term `(a cos(k·x) + b sin(k·x)) dx_I` of component 1 or 2 of a periodic form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    #[serde(default = "first_component")]
    pub component: usize,
    pub indices: Vec<usize>,
    pub mode: [i32; AXES],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

fn first_component() -> usize {
    1
}

/// A periodic `R²`-valued odd form `α`; the flow is started at `ρ₀ + ε dα`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Perturbation {
    pub terms: Vec<FourierTerm>,
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if !(1..=2).contains(&t.component) {
                return Err(Error::Parse(format!("component must be 1 or 2, got {}", t.component)));
            }
            if t.indices.iter().any(|&i| i >= AXES) {
                return Err(Error::IndexOutOfRange { index: *t.indices.iter().max().unwrap(), dim: AXES });
            }
            let m = blade::mask_from_indices(&t.indices);
            if blade::degree(m) != t.indices.len() {
                return Err(Error::Parse(format!("repeated index in {:?}", t.indices)));
            }
            if m.count_ones().is_multiple_of(2) {
                return Err(Error::Parse(format!("perturbation potential must be odd, got indices {:?}", t.indices)));
            }
        }
        Ok(())
    }

    /// `(dα₁, dα₂)` at a point as dense 32-vectors indexed by mask.
    pub fn exterior_derivative_at(&self, x: &[f64; AXES]) -> [[f64; 32]; 2] {
        let mut out = [[0.0; 32]; 2];
        for t in &self.terms {
            let (m, sign) = sorted_mask(&t.indices);
            let phase: f64 = t.mode.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
            let dc = -t.cos * phase.sin() + t.sin * phase.cos();
            for (j, &k) in t.mode.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if let Some(s) = blade::prefix_sign(j, m) {
                    out[t.component - 1][(m | 1 << j) as usize] += (sign * s) as f64 * k as f64 * dc;
                }
            }
        }
        out
    }
}

/// Mask and permutation sign of an index list.
fn sorted_mask(indices: &[usize]) -> (Mask, i32) {
    let mut m: Mask = 0;
    let mut sign = 1;
    for &i in indices {
        sign *= blade::prefix_sign(i, m).unwrap_or(0);
        m |= 1 << i;
    }
    (m, sign)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub data: Vec<f64>,
}

impl GridState {
    pub fn component(&self, nodes: usize, c: usize) -> &[f64] {
        &self.data[c * nodes..(c + 1) * nodes]
    }

    /// `(ρ₁, ρ₂)` at a node.
    pub fn rho_at(&self, nodes: usize, node: usize) -> ([f64; 16], [f64; 16]) {
        let mut r1 = [0.0; 16];
        let mut r2 = [0.0; 16];
        for k in 0..16 {
            r1[k] = self.data[k * nodes + node];
            r2[k] = self.data[(16 + k) * nodes + node];
        }
        (r1, r2)
    }

    /// Splits the state into the grid forms `ρ₁`, `ρ₂`.
    pub fn forms(&self, nodes: usize) -> [GridForm; 2] {
        [0, 1].map(|a| {
            let mut f = GridForm::zero();
            for (k, &m) in EVEN5.iter().enumerate() {
                f.set(m, self.component(nodes, 16 * a + k).to_vec());
            }
            f
        })
    }
}

/// `ρ₀ + ε dα` sampled on the grid; `ρ₀` must have constant coefficients.
pub fn initial_state(grid: &Grid, base: &RhoPair, epsilon: f64, alpha: &Perturbation) -> Result<GridState> {
    alpha.validate()?;
    for r in [&base.rho1, &base.rho2] {
        if r.terms().any(|(_, c)| !c.is_constant()) {
            return Err(Error::InvalidGrid("base forms must have constant coefficients".into()));
        }
    }
    let (b1, b2) = base.evaluate_f64(&[0.0; AXES]);
    let nn = grid.nodes();
    let mut data = vec![0.0; STATE_COMPONENTS * nn];
    for node in 0..nn {
        let da = alpha.exterior_derivative_at(&grid.node_point(node));
        for (k, &m) in EVEN5.iter().enumerate() {
            data[k * nn + node] = b1[k] + epsilon * da[0][m as usize];
            data[(16 + k) * nn + node] = b2[k] + epsilon * da[1][m as usize];
        }
    }
    Ok(GridState { t: 0.0, data })
}

/// Evaluator of `dρ̂` and the pointwise invariants on a grid.
#[derive(Clone, Debug)]
pub struct Flow {
    pub grid: Grid,
    kernel: Kernel5,
}

/// Nodewise `ρ̂` (32 odd components), density and orbit sign.
#[derive(Clone, Debug)]
pub struct HatField {
    pub rho_hat: Vec<f64>,
    pub density: Vec<f64>,
    pub sign: Vec<f64>,
}

impl Flow {
    pub fn new(grid: Grid) -> Self {
        Self { grid, kernel: Kernel5::new() }
    }

    pub fn kernel(&self) -> &Kernel5 {
        &self.kernel
    }

    pub fn analyze_node(&self, s: &GridState, node: usize) -> Result<RhoAnalysis5> {
        let (r1, r2) = s.rho_at(self.grid.nodes(), node);
        self.kernel
            .analyze(&r1, &r2)
            .map_err(|_| Error::Unstable(format!("node {:?}, t = {}", self.grid.node_coords(node), s.t)))
    }

    pub fn hat_field(&self, s: &GridState) -> Result<HatField> {
        let nn = self.grid.nodes();
        let mut rho_hat = vec![0.0; STATE_COMPONENTS * nn];
        let mut density = vec![0.0; nn];
        let mut sign = vec![0.0; nn];
        for node in 0..nn {
            let an = self.analyze_node(s, node)?;
            for k in 0..16 {
                rho_hat[k * nn + node] = an.rho_hat1[k];
                rho_hat[(16 + k) * nn + node] = an.rho_hat2[k];
            }
            density[node] = an.density;
            sign[node] = an.sign;
        }
        Ok(HatField { rho_hat, density, sign })
    }

    /// `d` of a 32-component odd field, giving a 32-component even field.
    pub fn d_odd(&self, odd: &[f64]) -> Vec<f64> {
        self.d_packed(odd, &ODD5)
    }

    /// `d` of a 32-component even field, giving a 32-component odd field.
    pub fn d_even(&self, even: &[f64]) -> Vec<f64> {
        self.d_packed(even, &EVEN5)
    }

    fn d_packed(&self, src_field: &[f64], masks: &[Mask; 16]) -> Vec<f64> {
        let nn = self.grid.nodes();
        let mut out = vec![0.0; STATE_COMPONENTS * nn];
        let mut tmp = vec![0.0; nn];
        for a in 0..2 {
            for (k, &m) in masks.iter().enumerate() {
                let src = &src_field[(16 * a + k) * nn..(16 * a + k + 1) * nn];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for axis in 0..AXES {
                    let Some(sign) = blade::prefix_sign(axis, m) else { continue };
                    self.grid.derivative(src, &mut tmp, axis);
                    let slot = 16 * a + parity_index(m | 1 << axis);
                    let dst = &mut out[slot * nn..(slot + 1) * nn];
                    for (t, v) in dst.iter_mut().zip(&tmp) {
                        *t += sign as f64 * v;
                    }
                }
            }
        }
        out
    }

    /// `max |dρ|` over nodes and components.
    pub fn closure_norm(&self, s: &GridState) -> f64 {
        self.d_even(&s.data).iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    /// `V = Σ φ · (2π/N)⁵`.
    pub fn hamiltonian(&self, s: &GridState) -> Result<f64> {
        Ok(self.hat_field(s)?.density.iter().sum::<f64>() * self.grid.cell_volume())
    }

    fn rhs(&self, s: &GridState, orbit: &[f64]) -> Result<(Vec<f64>, HatField)> {
        let hat = self.hat_field(s)?;
        if let Some(node) = hat.sign.iter().zip(orbit).position(|(a, b)| a != b) {
            return Err(Error::OrbitFlip(format!("node {:?}, t = {}", self.grid.node_coords(node), s.t)));
        }
        Ok((self.d_odd(&hat.rho_hat), hat))
    }

    /// One classical Runge–Kutta step; also returns `V` at the start of the step.
    pub fn step(&self, s: &GridState, dt: f64, orbit: &[f64]) -> Result<(GridState, f64)> {
        let at =
            |k: &[f64], c: f64, t: f64| GridState { t, data: s.data.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        let (k1, hat) = self.rhs(s, orbit)?;
        let v = hat.density.iter().sum::<f64>() * self.grid.cell_volume();
        let (k2, _) = self.rhs(&at(&k1, 0.5 * dt, s.t + 0.5 * dt), orbit)?;
        let (k3, _) = self.rhs(&at(&k2, 0.5 * dt, s.t + 0.5 * dt), orbit)?;
        let (k4, _) = self.rhs(&at(&k3, dt, s.t + dt), orbit)?;
        let data =
            (0..s.data.len()).map(|i| s.data[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        Ok((GridState { t: s.t + dt, data }, v))
    }

    pub fn orbit_signs(&self, s: &GridState) -> Result<Vec<f64>> {
        Ok(self.hat_field(s)?.sign)
    }
}

/// Spatial means of every component.
pub fn zero_modes(s: &GridState, nodes: usize) -> Vec<f64> {
    (0..STATE_COMPONENTS).map(|c| s.component(nodes, c).iter().sum::<f64>() / nodes as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub hamiltonian: f64,
    /// `max_c |mean_c(t) − mean_c(0)|`.
    pub zero_mode_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub state: GridState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub dt: f64,
    pub t0: f64,
    pub frames: Vec<Frame>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn nodes(&self) -> usize {
        self.n.pow(AXES as u32)
    }

    pub fn frame(&self, step: usize) -> Option<&Frame> {
        self.frames.iter().find(|f| f.step == step)
    }

    /// Steps `k` with frames at `k − 1`, `k`, `k + 1`.
    pub fn centered_steps(&self) -> Vec<usize> {
        self.frames
            .iter()
            .map(|f| f.step)
            .filter(|&k| k >= 1 && self.frame(k - 1).is_some() && self.frame(k + 1).is_some())
            .collect()
    }
}

/// Which steps to store as frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Every(usize),
    Steps(Vec<usize>),
}

impl Record {
    fn keeps(&self, step: usize) -> bool {
        match self {
            Record::Every(k) => *k > 0 && step.is_multiple_of(*k),
            Record::Steps(s) => s.contains(&step),
        }
    }
}

pub fn run(flow: &Flow, initial: &GridState, dt: f64, steps: usize, record: &Record) -> Result<Trajectory> {
    let nn = flow.grid.nodes();
    let orbit = flow.orbit_signs(initial)?;
    let modes0 = zero_modes(initial, nn);
    let mut frames = Vec::new();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    let mut s = initial.clone();
    for step in 0..=steps {
        if record.keeps(step) {
            frames.push(Frame { step, state: s.clone() });
        }
        let drift = zero_modes(&s, nn).iter().zip(&modes0).fold(0.0, |a, (x, y)| f64::max(a, (x - y).abs()));
        if step == steps {
            let v = flow.hamiltonian(&s)?;
            diagnostics.push(StepDiagnostics { step, t: s.t, hamiltonian: v, zero_mode_drift: drift });
            break;
        }
        let (next, v) = flow.step(&s, dt, &orbit)?;
        diagnostics.push(StepDiagnostics { step, t: s.t, hamiltonian: v, zero_mode_drift: drift });
        s = next;
    }
    Ok(Trajectory { n: flow.grid.n(), dt, t0: initial.t, frames, diagnostics })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanModeReport {
    pub max_drift: f64,
    pub per_component: Vec<f64>,
}

/// Drift of the spatial zero mode of every component across stored frames.
pub fn mean_mode_invariants(traj: &Trajectory) -> MeanModeReport {
    let nn = traj.nodes();
    let mut per_component = vec![0.0; STATE_COMPONENTS];
    if let Some(first) = traj.frames.first() {
        let m0 = zero_modes(&first.state, nn);
        for f in &traj.frames[1..] {
            for (c, (a, b)) in zero_modes(&f.state, nn).iter().zip(&m0).enumerate() {
                per_component[c] = f64::max(per_component[c], (a - b).abs());
            }
        }
    }
    MeanModeReport { max_drift: per_component.iter().cloned().fold(0.0, f64::max), per_component }
}

/// Section fields with 10 components `(X⁰..X⁴, ξ₀..ξ₄)`, component-major.
pub type SectionField = Vec<f64>;

/// Courant bracket of two section fields, using the grid derivative.
pub fn grid_courant(grid: &Grid, u: &[f64], v: &[f64]) -> SectionField {
    let nn = grid.nodes();
    let comp = |f: &[f64], c: usize| -> Vec<f64> { f[c * nn..(c + 1) * nn].to_vec() };
    let derivs = |f: &[f64]| -> Vec<Vec<Vec<f64>>> {
        (0..10)
            .map(|c| {
                let src = comp(f, c);
                (0..AXES)
                    .map(|axis| {
                        let mut d = vec![0.0; nn];
                        grid.derivative(&src, &mut d, axis);
                        d
                    })
                    .collect()
            })
            .collect()
    };
    let du = derivs(u);
    let dv = derivs(v);
    let mut out = vec![0.0; 10 * nn];
    let mut f = vec![0.0; nn];
    for i in 0..nn {
        f[i] = (0..AXES).map(|j| u[j * nn + i] * v[(5 + j) * nn + i] - v[j * nn + i] * u[(5 + j) * nn + i]).sum();
    }
    let mut df = vec![0.0; nn];
    for k in 0..AXES {
        grid.derivative(&f, &mut df, k);
        for i in 0..nn {
            let mut vec_part = 0.0;
            let mut form_part = 0.0;
            for j in 0..AXES {
                let xj = u[j * nn + i];
                let yj = v[j * nn + i];
                vec_part += xj * dv[k][j][i] - yj * du[k][j][i];
                form_part += xj * dv[5 + k][j][i] + v[(5 + j) * nn + i] * du[j][k][i];
                form_part -= yj * du[5 + k][j][i] + u[(5 + j) * nn + i] * dv[j][k][i];
            }
            out[k * nn + i] = vec_part;
            out[(5 + k) * nn + i] = form_part - 0.5 * df[i];
        }
    }
    out
}

/// Nodewise `(v₁, h, v₂)` and orbit sign for one state.
pub fn triple_fields(flow: &Flow, s: &GridState) -> Result<([SectionField; 3], Vec<f64>)> {
    let nn = flow.grid.nodes();
    let mut fields = [vec![0.0; 10 * nn], vec![0.0; 10 * nn], vec![0.0; 10 * nn]];
    let mut sign = vec![0.0; nn];
    for node in 0..nn {
        let (r1, r2) = s.rho_at(nn, node);
        let an = flow.analyze_node(s, node)?;
        let p12 = flow.kernel().p(&r1, &r2);
        for c in 0..10 {
            fields[0][c * nn + node] = an.q1[c] / an.density;
            fields[1][c * nn + node] = p12[c] / an.density;
            fields[2][c * nn + node] = an.q2[c] / an.density;
        }
        sign[node] = an.sign;
    }
    Ok((fields, sign))
}

fn field_inner(nn: usize, u: &[f64], v: &[f64], node: usize) -> f64 {
    0.5 * (0..AXES)
        .map(|k| u[k * nn + node] * v[(5 + k) * nn + node] + v[k * nn + node] * u[(5 + k) * nn + node])
        .sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NahmResidual {
    pub step: usize,
    pub t: f64,
    /// `max |·|` of the `v₁`, `h`, `v₂` equations.
    pub residual: [f64; 3],
    /// The same with `λ = 0`.
    pub residual_without_lambda: [f64; 3],
    pub lambda_max: f64,
}

impl NahmResidual {
    pub fn max(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }
}

/// `λ = −s (h,[v₁,v₂]) / (h,h)` per node, from the triple and its bracket.
pub fn lambda_field(nn: usize, h: &[f64], bracket12: &[f64], sign: &[f64]) -> Vec<f64> {
    (0..nn).map(|i| -sign[i] * field_inner(nn, h, bracket12, i) / field_inner(nn, h, h, i)).collect()
}

/// Residuals of `v₁' = −2s[h,v₁] + λv₁`, `h' = s[v₁,v₂] + λh`, `v₂' = 2s[h,v₂] + λv₂`
/// at every stored step with both time neighbours.
pub fn nahm_residual(flow: &Flow, traj: &Trajectory) -> Result<Vec<NahmResidual>> {
    let steps = traj.centered_steps();
    if steps.is_empty() {
        return Err(Error::TooFewSteps { needed: 3, have: traj.frames.len() });
    }
    let nn = flow.grid.nodes();
    steps
        .into_iter()
        .map(|k| {
            let prev = triple_fields(flow, &traj.frame(k - 1).unwrap().state)?.0;
            let next = triple_fields(flow, &traj.frame(k + 1).unwrap().state)?.0;
            let state = &traj.frame(k).unwrap().state;
            let ([v1, h, v2], sign) = triple_fields(flow, state)?;
            let b_h1 = grid_courant(&flow.grid, &h, &v1);
            let b_12 = grid_courant(&flow.grid, &v1, &v2);
            let b_h2 = grid_courant(&flow.grid, &h, &v2);
            let lambda = lambda_field(nn, &h, &b_12, &sign);
            let mut residual = [0.0f64; 3];
            let mut bare = [0.0f64; 3];
            for c in 0..10 {
                for i in 0..nn {
                    let idx = c * nn + i;
                    let s = sign[i];
                    let rates = [0, 1, 2].map(|a| (next[a][idx] - prev[a][idx]) / (2.0 * traj.dt));
                    let brackets = [-2.0 * s * b_h1[idx], s * b_12[idx], 2.0 * s * b_h2[idx]];
                    let values = [v1[idx], h[idx], v2[idx]];
                    for a in 0..3 {
                        let r0 = rates[a] - brackets[a];
                        residual[a] = residual[a].max((r0 - lambda[i] * values[a]).abs());
                        bare[a] = bare[a].max(r0.abs());
                    }
                }
            }
            Ok(NahmResidual {
                step: k,
                t: state.t,
                residual,
                residual_without_lambda: bare,
                lambda_max: lambda.iter().fold(0.0, |a, b| f64::max(a, b.abs())),
            })
        })
        .collect()
}

const MAGIC: &[u8; 8] = b"GGTRAJ01";

/// Little-endian binary trajectory: header, then per frame `step`, `t`, data.
pub fn write_trajectory(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(traj.n as u32).to_le_bytes())?;
    w.write_all(&(STATE_COMPONENTS as u32).to_le_bytes())?;
    w.write_all(&(traj.frames.len() as u64).to_le_bytes())?;
    w.write_all(&traj.dt.to_le_bytes())?;
    w.write_all(&traj.t0.to_le_bytes())?;
    for f in &traj.frames {
        w.write_all(&(f.step as u64).to_le_bytes())?;
        w.write_all(&f.state.t.to_le_bytes())?;
        for v in &f.state.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_trajectory(mut r: impl Read) -> Result<Trajectory> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a trajectory file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_ = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut b4)?;
        Ok(u32::from_le_bytes(b4))
    };
    let n = u32_(&mut r)? as usize;
    let ncomp = u32_(&mut r)? as usize;
    if ncomp != STATE_COMPONENTS || !(4..=64).contains(&n) {
        return Err(Error::Parse(format!("unsupported trajectory header N = {n}, components = {ncomp}")));
    }
    let mut read8 = |r: &mut dyn Read| -> Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let nframes = u64::from_le_bytes(read8(&mut r)?) as usize;
    let dt = f64::from_le_bytes(read8(&mut r)?);
    let t0 = f64::from_le_bytes(read8(&mut r)?);
    let len = ncomp * n.pow(AXES as u32);
    let mut frames = Vec::with_capacity(nframes);
    let mut buf = vec![0u8; 8 * len];
    for _ in 0..nframes {
        let step = u64::from_le_bytes(read8(&mut r)?) as usize;
        let t = f64::from_le_bytes(read8(&mut r)?);
        r.read_exact(&mut buf)?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        frames.push(Frame { step, state: GridState { t, data } });
    }
    Ok(Trajectory { n, dt, t0, frames, diagnostics: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin55::normal_form;

    fn small_grid() -> Grid {
        Grid::new(8, DerivativeScheme::Spectral).unwrap()
    }

    #[test]
    fn spectral_derivative_of_sine_is_cosine() {
        let g = small_grid();
        let nn = g.nodes();
        let mut form = GridForm::zero();
        form.set(1 << 2, (0..nn).map(|i| g.node_point(i)[1].sin()).collect());
        let d = grid_d(&g, &form);
        // d(sin x₁ dx₂) = cos x₁ dx₁∧dx₂
        let c = d.get(0b110).unwrap();
        let err = (0..nn).map(|i| (c[i] - g.node_point(i)[1].cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
        assert!(grid_d(&g, &d).max_abs() < 1e-12);
    }

    #[test]
    fn finite_difference_is_fourth_order() {
        let err = |n: usize| {
            let g = Grid::new(n, DerivativeScheme::FiniteDifference4).unwrap();
            let line: Vec<f64> = (0..g.nodes()).map(|i| g.node_point(i)[4].sin()).collect();
            let mut d = vec![0.0; g.nodes()];
            g.derivative(&line, &mut d, 4);
            (0..g.nodes()).map(|i| (d[i] - g.node_point(i)[4].cos()).abs()).fold(0.0, f64::max)
        };
        let order = (err(8) / err(16)).log2();
        assert!(order > 3.7, "{order}");
    }

    #[test]
    fn perturbation_is_closed() {
        let g = small_grid();
        let alpha = Perturbation {
            terms: vec![
                FourierTerm { component: 1, indices: vec![1], mode: [1, 0, 1, 0, 0], cos: 1.0, sin: 0.0 },
                FourierTerm { component: 2, indices: vec![4, 2, 3], mode: [0, 1, 0, 0, 0], cos: 0.0, sin: 0.5 },
            ],
        };
        let s = initial_state(&g, &normal_form(), 0.1, &alpha).unwrap();
        let flow = Flow::new(g);
        assert!(flow.closure_norm(&s) < 1e-12);
    }

    #[test]
    fn even_perturbation_rejected() {
        let alpha = Perturbation {
            terms: vec![FourierTerm { component: 1, indices: vec![0, 1], mode: [1, 0, 0, 0, 0], cos: 1.0, sin: 0.0 }],
        };
        assert!(alpha.validate().is_err());
    }

    #[test]
    fn courant_bracket_on_grid() {
        let g = small_grid();
        let nn = g.nodes();
        // u = sin x₁ ∂₀, v = ∂₁ + cos x₀ dx₂
        let mut u = vec![0.0; 10 * nn];
        let mut v = vec![0.0; 10 * nn];
        for i in 0..nn {
            let p = g.node_point(i);
            u[i] = p[1].sin();
            v[nn + i] = 1.0;
            v[7 * nn + i] = p[0].cos();
        }
        let b = grid_courant(&g, &u, &v);
        // [X,Y] = −cos x₁ ∂₀ and ℒ_X η = −sin x₁ sin x₀ dx₂
        for i in 0..nn {
            let p = g.node_point(i);
            assert!((b[i] + p[1].cos()).abs() < 1e-12);
            assert!((b[7 * nn + i] + p[1].sin() * p[0].sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let g = Grid::new(4, DerivativeScheme::Spectral).unwrap();
        let flow = Flow::new(g);
        let s = initial_state(&flow.grid, &normal_form(), 0.0, &Perturbation::default()).unwrap();
        let traj = run(&flow, &s, 0.1, 2, &Record::Every(1)).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let back = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back.frames, traj.frames);
        assert_eq!(back.dt, traj.dt);
    }
}
