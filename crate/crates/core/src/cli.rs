//! Command-line front end: argument parsing, suite orchestration and JSON reports.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage or
//! input errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{format_rational, ratio, Rational};
use crate::error::{Error, Result};
use crate::flow::{
    initial_state, mean_mode_invariants, nahm_residual, read_trajectory, run as run_flow, write_trajectory,
    DerivativeScheme, Flow, Grid, Perturbation, Record,
};
use crate::forms::MixedForm;
use crate::generalized::{
    bfield_bracket_defect, bfield_on_form, courant_spinor_residual, function_linearity_residual,
    metric_invariance_residual, minus_double_contraction, GenSection,
};
use crate::io::{parse_points, read_json, section_to_json, CoverJson, MetricJson, RhoJson};
use crate::metric::{torsion_check, GeneralizedMetric};
use crate::sampling::Sampler;
use crate::sixdim::{annihilator_check, annihilator_span, bracket_check, node_triple, sigma_closure, ZValue};
use crate::spin55::{
    self, commuting_triple_check, is_stable, quartic_invariant, v_triple, variational_residual, RhoPair,
};
use crate::twisted::{check_cocycle, globalize_with_curving, twisted_differential, CoverData};

#[derive(Debug, Parser)]
#[command(
    name = "gengeom",
    version,
    about = "Generalized-geometry identity suites, Spin(5,5) analysis and flow diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact identity suites.
    #[command(subcommand)]
    Verify(Verify),
    /// Invariants of a pair of even forms in dimension 5.
    #[command(subcommand)]
    Spin55(Spin55Cmd),
    /// Numeric flow on the periodic 5-torus.
    #[command(subcommand)]
    Flow(FlowCmd),
    /// Six-dimensional checks on a stored trajectory.
    #[command(subcommand)]
    Sixdim(SixdimCmd),
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// Courant bracket identities on random polynomial data.
    Identities {
        /// Fixed chart dimension; by default cases cycle through 2..=5.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum polynomial degree of random coefficients.
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Skew torsion and metric compatibility of the connection of a generalized metric.
    SkewTorsion {
        /// Metric as `{"C": [[poly, ...], ...]}`; random metrics otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        /// JSON list of rational points; random points otherwise.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        cases: usize,
        #[arg(long, default_value_t = 4)]
        point_count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Cocycle, twisted differential and curving round trip.
    Twisted {
        /// Cover data; a random two-chart cover otherwise.
        #[arg(long)]
        cover: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum Spin55Cmd {
    /// Stability, volume density, companion form and the commuting triple.
    Analyze {
        /// `{"rho1": form, "rho2": form}` on a 5-chart.
        rho: PathBuf,
        /// Points at which to test stability; the origin and unit points otherwise.
        #[arg(long)]
        points: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum FlowCmd {
    /// Integrates the flow from a closed perturbation of a base pair.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write stored frames to this binary trajectory file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum SixdimCmd {
    /// Annihilators, Gram signature, closure and integrability of σ(z).
    Check {
        #[arg(long)]
        trajectory: PathBuf,
        /// Comma-separated z values; `inf` for the reduced representative at infinity.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,-0.5,0.5,1,2,0,inf")]
        z: Vec<String>,
        #[arg(long, value_enum, default_value_t = SchemeArg::Spectral)]
        scheme: SchemeArg,
        /// Number of nodes at which the annihilator span is computed.
        #[arg(long, default_value_t = 8)]
        sample_nodes: usize,
        /// Bound for the pointwise algebraic residuals.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Bound for the discretized closure and bracket residuals.
        #[arg(long, default_value_t = 1e-4)]
        discrete_tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum SchemeArg {
    Spectral,
    FiniteDifference4,
}

impl From<SchemeArg> for DerivativeScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Spectral => DerivativeScheme::Spectral,
            SchemeArg::FiniteDifference4 => DerivativeScheme::FiniteDifference4,
        }
    }
}

/// One line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// What the check establishes, in words.
    pub anchor: String,
    /// `"0"` for an exact zero, otherwise a float in exponent notation.
    pub residual: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub metadata: BTreeMap<String, Value>,
    #[serde(flatten)]
    pub results: BTreeMap<String, Value>,
}

impl Report {
    fn new(suite: &str) -> Self {
        Self { suite: suite.into(), checks: Vec::new(), metadata: BTreeMap::new(), results: BTreeMap::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn meta(&mut self, key: &str, v: impl Serialize) {
        self.metadata.insert(key.into(), json!(v));
    }

    fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.into(), json!(v));
    }

    fn push(&mut self, id: &str, anchor: &str, residual: String, passed: bool, detail: Option<String>) {
        self.checks.push(Check { id: id.into(), anchor: anchor.into(), residual, passed, detail });
    }

    fn push_exact(&mut self, acc: ExactAcc, id: &str, anchor: &str) {
        let passed = acc.failures == 0 && acc.errors.is_empty();
        let detail = if acc.errors.is_empty() {
            Some(format!("{} cases, {} nonzero", acc.cases, acc.failures))
        } else {
            Some(format!("{} cases, {} nonzero, errors: {}", acc.cases, acc.failures, acc.errors.join("; ")))
        };
        self.push(id, anchor, exact_residual(acc.worst, acc.failures), passed, detail);
    }

    fn push_bound(&mut self, id: &str, anchor: &str, value: f64, bound: f64) {
        let passed = value.is_finite() && value < bound;
        self.push(id, anchor, float_residual(value), passed, Some(format!("bound {bound:e}")));
    }

    fn push_error(&mut self, id: &str, anchor: &str, e: &Error) {
        self.push(id, anchor, "nan".into(), false, Some(e.to_string()));
    }
}

fn float_residual(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

fn exact_residual(worst: f64, failures: usize) -> String {
    if failures == 0 {
        "0".into()
    } else {
        format!("{worst:e}")
    }
}

/// Tally of an exact check over many cases; `worst` is the largest coefficient seen.
#[derive(Default)]
struct ExactAcc {
    cases: usize,
    failures: usize,
    worst: f64,
    errors: Vec<String>,
}

impl ExactAcc {
    fn add(&mut self, r: Result<f64>) {
        self.cases += 1;
        match r {
            Ok(x) if x == 0.0 => {}
            Ok(x) => {
                self.failures += 1;
                self.worst = self.worst.max(x);
            }
            Err(e) => {
                if self.errors.len() < 3 {
                    self.errors.push(e.to_string());
                }
                self.failures += 1;
            }
        }
    }
}

fn section_size(s: &GenSection) -> f64 {
    s.components().iter().map(|c| c.max_abs_coeff()).fold(0.0, f64::max)
}

/// Size of an exact residual, with `0.0` reserved for an exact zero.
fn form_size(f: &MixedForm) -> f64 {
    if f.is_zero() {
        0.0
    } else {
        f.max_abs_coeff().max(f64::MIN_POSITIVE)
    }
}

fn gen_size(s: &GenSection) -> f64 {
    if s.is_zero() {
        0.0
    } else {
        section_size(s).max(f64::MIN_POSITIVE)
    }
}

/// Runs the Courant identity suite on seeded random data.
pub fn verify_identities(dim: Option<usize>, cases: usize, seed: u64, degree: u32) -> Result<Report> {
    let dims: Vec<usize> = match dim {
        Some(d) => {
            crate::algebra::Chart::new(d)?;
            vec![d]
        }
        None => (2..=5).collect(),
    };
    let mut rng = Sampler::new(seed);
    let mut spinor = ExactAcc::default();
    let mut linearity = ExactAcc::default();
    let mut invariance = ExactAcc::default();
    let mut closed_b = ExactAcc::default();
    let mut open_b = ExactAcc::default();
    for case in 0..cases {
        let n = dims[case % dims.len()];
        let u = rng.section(n, degree);
        let v = rng.section(n, degree);
        let w = rng.section(n, degree);
        let a = rng.form(n, degree);
        let f = rng.polynomial(n, degree);
        spinor.add(courant_spinor_residual(&u, &v, &a).map(|r| form_size(&r)));
        linearity.add(function_linearity_residual(&u, &v, &f).map(|r| gen_size(&r)));
        invariance.add(metric_invariance_residual(&u, &v, &w).map(|r| form_size(&MixedForm::scalar(r))));
        let b = rng.closed_two_form(n, degree);
        closed_b.add(bfield_bracket_defect(&b, &u, &v).map(|r| gen_size(&r)));
        let b = rng.form_of_degree(n, 2, degree);
        let defect = bfield_bracket_defect(&b, &u, &v).and_then(|d| {
            d.try_sub(&minus_double_contraction(u.vector_part(), v.vector_part(), &b.exterior_derivative())?)
        });
        open_b.add(defect.map(|r| gen_size(&r)));
    }
    let mut rep = Report::new("identities");
    rep.push_exact(spinor, "courant_spinor", "Courant bracket as the derived bracket of the Clifford action on forms");
    rep.push_exact(linearity, "anchor_linearity", "[u, fv] = f[u,v] + (π(u)f)v − (u,v)df");
    rep.push_exact(invariance, "pairing_invariance", "π(u)(v,w) = ([u,v]+d(u,v), w) + (v, [u,w]+d(u,w))");
    rep.push_exact(closed_b, "closed_b_invariance", "a closed B-field is a Courant automorphism");
    rep.push_exact(open_b, "bfield_defect", "[e^B u, e^B v] − e^B[u,v] = −i_X i_Y dB");
    rep.meta("seed", seed);
    rep.meta("cases", cases);
    rep.meta("degree", degree);
    rep.meta("dims", &dims);
    Ok(rep)
}

fn default_points(rng: &mut Sampler, dim: usize, count: usize) -> Vec<Vec<Rational>> {
    (0..count).map(|_| rng.point(dim)).collect()
}

fn verify_skew_torsion(
    input: Option<&Path>,
    points: Option<&Path>,
    dim: usize,
    cases: usize,
    point_count: usize,
    seed: u64,
    degree: u32,
) -> Result<Report> {
    let mut rng = Sampler::new(seed);
    let metrics: Vec<GeneralizedMetric> = match input {
        Some(p) => vec![read_json::<MetricJson>(p)?.to_metric()?],
        None => (0..cases).map(|_| rng.metric(dim, degree, true)).collect(),
    };
    let file_points = match points {
        Some(p) => Some(parse_points(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let mut torsion = ExactAcc::default();
    let mut swapped = ExactAcc::default();
    let mut compat = ExactAcc::default();
    let mut warnings = Vec::new();
    for v in &metrics {
        let pts = match &file_points {
            Some(p) => p.clone(),
            None => default_points(&mut rng, v.dim(), point_count),
        };
        match torsion_check(v, &pts) {
            Ok(r) => {
                for p in &r.points {
                    torsion.add(Ok(crate::algebra::rational_to_f64(&p.torsion_residual).abs()));
                    swapped.add(Ok(crate::algebra::rational_to_f64(&p.swapped_torsion_residual).abs()));
                    compat.add(Ok(crate::algebra::rational_to_f64(&p.compatibility_residual).abs()));
                }
                warnings.extend(r.warnings);
            }
            Err(e) => {
                let msg = e.to_string();
                torsion.add(Err(e));
                swapped.add(Err(Error::Inconsistent(msg.clone())));
                compat.add(Err(Error::Inconsistent(msg)));
            }
        }
    }
    let mut rep = Report::new("skew-torsion");
    rep.push_exact(torsion, "skew_torsion", "the connection of a generalized metric has skew torsion −H");
    rep.push_exact(swapped, "swapped_torsion", "exchanging V and its complement gives torsion +H");
    rep.push_exact(compat, "metric_compatibility", "the connection preserves g");
    rep.meta("seed", seed);
    rep.meta("metrics", metrics.len());
    rep.meta("degree", degree);
    rep.result("warnings", warnings);
    Ok(rep)
}

/// Two charts sharing one coordinate space, with `B_b = B_a + dA_ab`.
fn random_two_chart_cover(rng: &mut Sampler, dim: usize, degree: u32) -> Result<CoverData> {
    let a = rng.form_of_degree(dim, 1, degree + 1);
    let b_a = rng.form_of_degree(dim, 2, degree);
    let b_b = &b_a + &a.exterior_derivative();
    let mut conn = BTreeMap::new();
    conn.insert(("a".to_string(), "b".to_string()), a);
    let mut curv = BTreeMap::new();
    curv.insert("a".to_string(), b_a);
    curv.insert("b".to_string(), b_b);
    CoverData::new(dim, vec!["a".into(), "b".into()], conn, curv)
}

/// Pulls a global form back to each chart and checks `globalize_with_curving` recovers it.
fn curving_round_trip(cover: &CoverData, psi: &MixedForm) -> Result<f64> {
    let mut phis = BTreeMap::new();
    for name in cover.charts() {
        let phi = match cover.curving(name) {
            Some(b) if !b.is_zero() => bfield_on_form(&-b, psi)?,
            _ => psi.clone(),
        };
        phis.insert(name.clone(), phi);
    }
    let out = globalize_with_curving(&phis, cover)?;
    Ok(out.values().map(|g| form_size(&(g - psi))).fold(0.0, f64::max))
}

fn verify_twisted(cover: Option<&Path>, dim: usize, cases: usize, seed: u64, degree: u32) -> Result<Report> {
    let mut rng = Sampler::new(seed);
    let cover = match cover {
        Some(p) => read_json::<CoverJson>(p)?.to_cover()?,
        None => random_two_chart_cover(&mut rng, dim, degree)?,
    };
    let n = cover.dim();
    let mut rep = Report::new("twisted");
    match check_cocycle(&cover) {
        Ok(c) => {
            let worst = c
                .triples
                .iter()
                .map(|t| form_size(&t.residual))
                .chain(c.curving.iter().map(|(_, r)| form_size(r)))
                .fold(0.0, f64::max);
            let failures = usize::from(!c.passed());
            rep.push(
                "cocycle",
                "dA is a cocycle with values in closed 2-forms and B_β − B_α = dA_αβ",
                exact_residual(worst, failures),
                c.passed(),
                Some(format!("{} triples, {} curving overlaps", c.triples.len(), c.curving.len())),
            );
        }
        Err(e) => rep.push_error("cocycle", "dA cocycle", &e),
    }
    let mut square = ExactAcc::default();
    for _ in 0..cases {
        let psi = rng.form(n, degree);
        let h = rng.closed_three_form(n, degree);
        square.add(twisted_differential(&psi, &h).and_then(|x| twisted_differential(&x, &h)).map(|r| form_size(&r)));
    }
    rep.push_exact(square, "twisted_square", "(d − H)² = 0 for closed H");
    let mut trip = ExactAcc::default();
    if !cover.curvings().is_empty() {
        for _ in 0..cases {
            trip.add(curving_round_trip(&cover, &rng.form(n, degree)));
        }
        rep.push_exact(trip, "curving_round_trip", "e^{B_α} φ_α agree on overlaps and define one global form");
    }
    rep.meta("seed", seed);
    rep.meta("cases", cases);
    rep.meta("dim", n);
    rep.meta("charts", cover.charts());
    Ok(rep)
}

fn rational_matrix_json(m: &[[Rational; 3]; 3]) -> Value {
    json!(m.iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// The origin and the five unit points.
pub fn default_stability_points() -> Vec<Vec<Rational>> {
    let mut pts = vec![vec![ratio(0, 1); spin55::DIM]];
    for i in 0..spin55::DIM {
        let mut p = vec![ratio(0, 1); spin55::DIM];
        p[i] = ratio(1, 1);
        pts.push(p);
    }
    pts
}

fn spin55_analyze(rho_path: &Path, points: Option<&Path>) -> Result<Report> {
    let rho: RhoPair = read_json::<RhoJson>(rho_path)?.to_rho()?;
    let pts = match points {
        Some(p) => parse_points(&std::fs::read_to_string(p)?)?,
        None => default_stability_points(),
    };
    let mut rep = analyze_rho(&rho, &pts)?;
    rep.meta("input", rho_path.display().to_string());
    Ok(rep)
}

/// Stability at `pts`, closure of `ρ` and `ρ̂`, the triple, its Gram matrix and brackets.
pub fn analyze_rho(rho: &RhoPair, pts: &[Vec<Rational>]) -> Result<Report> {
    let mut rep = Report::new("spin55");
    let f = quartic_invariant(rho)?;
    rep.result(
        "f",
        match f.constant_value() {
            Some(c) => json!(format_rational(&c)),
            None => crate::io::polynomial_to_json(&f),
        },
    );
    let stab = is_stable(rho, pts)?;
    let stable = stab.iter().all(|p| p.stable);
    let signs: Vec<i32> = stab.iter().map(|p| p.orbit_sign).collect();
    let orbit_sign = if stable && signs.windows(2).all(|w| w[0] == w[1]) { json!(signs[0]) } else { Value::Null };
    rep.result("stable", stable);
    rep.result("orbit_sign", orbit_sign);
    rep.push(
        "stable",
        "f(ρ) ≠ 0 at every sample point",
        "0".into(),
        stable,
        Some(format!("{} points, signs {signs:?}", pts.len())),
    );
    if !stable {
        rep.meta("points", pts.len());
        return Ok(rep);
    }

    let mut residuals = BTreeMap::new();
    match variational_residual(rho) {
        Ok(r) => {
            let entries = [
                ("d_rho1", &r.d_rho1, "dρ₁ = 0"),
                ("d_rho2", &r.d_rho2, "dρ₂ = 0"),
                ("d_rho_hat1", &r.d_rho_hat1, "dρ̂₁ = 0"),
                ("d_rho_hat2", &r.d_rho_hat2, "dρ̂₂ = 0"),
            ];
            for (id, form, anchor) in entries {
                let size = form_size(form);
                residuals.insert(id.to_string(), exact_residual(size, usize::from(size != 0.0)));
                rep.push(id, anchor, exact_residual(size, usize::from(size != 0.0)), size == 0.0, None);
            }
        }
        Err(e) => rep.push_error("companion_form", "v_A·ρ_A = 0 so that ρ̂ is defined", &e),
    }
    rep.result("residuals", residuals);

    match v_triple(rho) {
        Ok(t) => {
            rep.result(
                "triple",
                json!({
                    "densitized": {
                        "v1": section_to_json(&t.q1),
                        "h": section_to_json(&t.p12),
                        "v2": section_to_json(&t.q2),
                    },
                    "exact": t.exact_sections().map(|[a, b, c]| json!({
                        "v1": section_to_json(&a), "h": section_to_json(&b), "v2": section_to_json(&c),
                    })),
                }),
            );
            match t.gram() {
                Ok(Some(g)) => {
                    rep.result("gram", rational_matrix_json(&g));
                    rep.push("gram_constant", "the triple has constant inner products", "0".into(), true, None);
                }
                Ok(None) => {
                    rep.result("gram", Value::Null);
                    rep.push("gram_constant", "the triple has constant inner products", "nan".into(), false, None);
                }
                Err(e) => rep.push_error("gram_constant", "the triple has constant inner products", &e),
            }
        }
        Err(e) => rep.push_error("triple", "v₁, h, v₂ from Q(ρ₁ + zρ₂)", &e),
    }

    match commuting_triple_check(rho) {
        Ok(tr) => {
            let mut commuting = BTreeMap::new();
            for (name, b) in &tr.brackets {
                commuting.insert(name.clone(), float_residual(gen_size(b)));
            }
            for (name, l) in tr.lie.iter().chain(&tr.volume_preserving) {
                commuting.insert(name.clone(), float_residual(form_size(l)));
            }
            let worst = tr
                .brackets
                .iter()
                .map(|(_, b)| gen_size(b))
                .chain(tr.lie.iter().chain(&tr.volume_preserving).map(|(_, l)| form_size(l)))
                .fold(0.0, f64::max);
            rep.result("commuting", json!({"passed": tr.passed(), "residuals": commuting}));
            rep.push(
                "commuting_triple",
                "v₁, h, v₂ Courant-commute and preserve ρ and the volume form",
                exact_residual(worst, usize::from(worst != 0.0)),
                tr.passed(),
                None,
            );
        }
        Err(e) => rep.push_error("commuting_triple", "v₁, h, v₂ Courant-commute", &e),
    }
    rep.meta("points", pts.len());
    Ok(rep)
}

fn default_base() -> RhoPair {
    spin55::normal_form()
}

/// Configuration of `flow run`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub scheme: DerivativeScheme,
    /// Base pair with constant coefficients; the normal form when absent.
    #[serde(default)]
    pub base: Option<RhoJson>,
    /// Steps to keep as frames; every step when absent.
    #[serde(default)]
    pub record: Option<Vec<usize>>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    #[serde(default = "yes")]
    pub hamiltonian: bool,
    #[serde(default = "yes")]
    pub zero_modes: bool,
    #[serde(default = "yes")]
    pub closure: bool,
    #[serde(default = "yes")]
    pub nahm: bool,
}

fn yes() -> bool {
    true
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self { hamiltonian: true, zero_modes: true, closure: true, nahm: true }
    }
}

fn flow_run(config: &Path, trajectory: Option<&Path>) -> Result<Report> {
    let cfg: FlowConfig = read_json(config)?;
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::Parse(format!("dt must be positive, got {}", cfg.dt)));
    }
    let base = match &cfg.base {
        Some(b) => b.to_rho()?,
        None => default_base(),
    };
    let flow = Flow::new(Grid::new(cfg.n, cfg.scheme)?);
    let init = initial_state(&flow.grid, &base, cfg.epsilon, &cfg.perturbation)?;
    let record = match &cfg.record {
        Some(s) => Record::Steps(s.clone()),
        None => Record::Every(1),
    };
    let mut rep = Report::new("flow");
    rep.meta("N", cfg.n);
    rep.meta("dt", cfg.dt);
    rep.meta("steps", cfg.steps);
    rep.meta("epsilon", cfg.epsilon);
    rep.meta("scheme", cfg.scheme);
    let initial_closure = flow.closure_norm(&init);
    let traj = match run_flow(&flow, &init, cfg.dt, cfg.steps, &record) {
        Ok(t) => t,
        Err(e) => {
            rep.push_error("stable_run", "the orbit sign stays fixed at every node", &e);
            return Ok(rep);
        }
    };
    rep.push("stable_run", "the orbit sign stays fixed at every node", "0".into(), true, None);
    if let Some(p) = trajectory {
        write_trajectory(&traj, BufWriter::new(File::create(p)?))?;
    }
    if cfg.diagnostics.hamiltonian {
        let v0 = traj.diagnostics[0].hamiltonian;
        let drift = traj.diagnostics.iter().map(|d| (d.hamiltonian - v0).abs()).fold(0.0, f64::max);
        rep.result("hamiltonian", traj.diagnostics.iter().map(|d| json!([d.t, d.hamiltonian])).collect::<Vec<_>>());
        rep.result("hamiltonian_drift", float_residual(drift));
    }
    if cfg.diagnostics.zero_modes {
        let drift = traj.diagnostics.iter().map(|d| d.zero_mode_drift).fold(0.0, f64::max);
        rep.push_bound("zero_modes", "dρ̂ has no spatial mean, so the zero Fourier modes are constant", drift, 1e-10);
        rep.result("zero_mode_drift", mean_mode_invariants(&traj).per_component);
    }
    if cfg.diagnostics.closure {
        let last = &traj.frames.last().map(|f| &f.state).unwrap_or(&init);
        let c = flow.closure_norm(last);
        rep.push_bound("closure", "dρ = 0 is preserved by the flow", c, initial_closure.max(1e-12) * 10.0 + 1e-10);
    }
    if cfg.diagnostics.nahm && traj.centered_steps().is_empty() {
        rep.result("nahm", Value::Null);
    } else if cfg.diagnostics.nahm {
        match nahm_residual(&flow, &traj) {
            Ok(r) => {
                rep.result("nahm_max", float_residual(r.iter().map(|x| x.max()).fold(0.0, f64::max)));
                rep.result("nahm", r);
            }
            Err(e) => rep.push_error("nahm", "evolution of the triple in Nahm form", &e),
        }
    }
    Ok(rep)
}

fn parse_z(s: &str) -> Result<ZValue> {
    let t = s.trim();
    match t {
        "inf" | "infinity" | "∞" => Ok(ZValue::Infinity),
        _ => {
            if let Some((p, q)) = t.split_once('/') {
                let p: f64 = p.trim().parse().map_err(|_| Error::Parse(format!("bad z value {s:?}")))?;
                let q: f64 = q.trim().parse().map_err(|_| Error::Parse(format!("bad z value {s:?}")))?;
                return Ok(ZValue::Finite(p / q));
            }
            t.parse().map(ZValue::Finite).map_err(|_| Error::Parse(format!("bad z value {s:?}")))
        }
    }
}

fn sixdim_check(
    path: &Path,
    z: &[String],
    scheme: DerivativeScheme,
    sample_nodes: usize,
    tol: f64,
    discrete_tol: f64,
) -> Result<Report> {
    let zs = z.iter().map(|s| parse_z(s)).collect::<Result<Vec<_>>>()?;
    let traj = read_trajectory(BufReader::new(File::open(path)?))?;
    let flow = Flow::new(Grid::new(traj.n, scheme)?);
    let nn = flow.grid.nodes();
    let mut rep = Report::new("sixdim");
    rep.meta("N", traj.n);
    rep.meta("dt", traj.dt);
    rep.meta("frames", traj.frames.len());
    rep.meta("z", zs.iter().map(ZValue::label).collect::<Vec<_>>());

    let mut worst_v = 0.0f64;
    let mut worst_w = 0.0f64;
    let mut worst_ip = 0.0f64;
    let mut per_z: BTreeMap<String, [f64; 2]> = BTreeMap::new();
    for f in &traj.frames {
        for r in annihilator_check(&flow, &f.state, &zs)? {
            worst_v = worst_v.max(r.max_v_residual);
            worst_w = worst_w.max(r.max_w_residual);
            worst_ip = r.max_inner_products.iter().fold(worst_ip, |a, &b| a.max(b));
            let e = per_z.entry(r.z).or_default();
            e[0] = e[0].max(r.max_v_residual);
            e[1] = e[1].max(r.max_w_residual);
        }
    }
    rep.push_bound("v_annihilates", "v(z)·σ(z) = 0", worst_v, tol);
    rep.push_bound("w_annihilates", "w(z)·σ(z) = 0", worst_w, tol);
    rep.push_bound("isotropic", "span{v(z), w(z)} is isotropic", worst_ip, tol);
    rep.result("annihilator_by_z", per_z);

    if let Some(first) = traj.frames.first() {
        let stride = (nn / sample_nodes.max(1)).max(1);
        let mut signatures = Vec::new();
        let mut all_22 = true;
        for node in (0..nn).step_by(stride).take(sample_nodes) {
            let (r1, r2) = first.state.rho_at(nn, node);
            let nt = node_triple(flow.kernel(), &r1, &r2)?;
            let span = annihilator_span(&nt, &zs, 1e-9);
            all_22 &= span.rank == 4 && span.signature == (2, 2);
            signatures
                .push(json!({"node": node, "rank": span.rank, "signature": [span.signature.0, span.signature.1]}));
        }
        rep.push(
            "span_signature",
            "the annihilators over z span a 4-dimensional space of signature (2,2)",
            "0".into(),
            all_22,
            Some(format!("{} nodes", signatures.len())),
        );
        rep.result("span", signatures);
    }

    if traj.centered_steps().is_empty() {
        rep.result("closure", Value::Null);
        rep.result("bracket", Value::Null);
    } else {
        let closure = sigma_closure(&flow, &traj, &zs)?;
        let c = closure.iter().map(|r| r.max()).fold(0.0, f64::max);
        rep.push_bound("sigma_closed", "dσ(z) = 0 up to the time discretization", c, discrete_tol);
        rep.result("closure", closure);
        let bracket = bracket_check(&flow, &traj, &zs)?;
        let b = bracket.iter().map(|r| r.residual).fold(0.0, f64::max);
        rep.push_bound("integrable", "[w(z), v(z)] = λ v(z) up to the time discretization", b, discrete_tol);
        rep.result("bracket", bracket);
    }
    Ok(rep)
}

fn emit(rep: &Report, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(rep)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(Report, Option<PathBuf>)> {
    Ok(match cli.command {
        Command::Verify(Verify::Identities { dim, cases, seed, degree, out }) => {
            (verify_identities(dim, cases, seed, degree)?, out.out)
        }
        Command::Verify(Verify::SkewTorsion { input, points, dim, cases, point_count, seed, degree, out }) => {
            (verify_skew_torsion(input.as_deref(), points.as_deref(), dim, cases, point_count, seed, degree)?, out.out)
        }
        Command::Verify(Verify::Twisted { cover, dim, cases, seed, degree, out }) => {
            (verify_twisted(cover.as_deref(), dim, cases, seed, degree)?, out.out)
        }
        Command::Spin55(Spin55Cmd::Analyze { rho, points, out }) => (spin55_analyze(&rho, points.as_deref())?, out.out),
        Command::Flow(FlowCmd::Run { config, trajectory, out }) => (flow_run(&config, trajectory.as_deref())?, out.out),
        Command::Sixdim(SixdimCmd::Check { trajectory, z, scheme, sample_nodes, tol, discrete_tol, out }) => {
            (sixdim_check(&trajectory, &z, scheme.into(), sample_nodes, tol, discrete_tol)?, out.out)
        }
    })
}

/// Parses `argv` (including the program name), runs the suite and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok((rep, out)) => {
            if let Err(e) = emit(&rep, out.as_deref()) {
                eprintln!("error: {e}");
                return 2;
            }
            for c in rep.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: residual {}", c.id, c.residual);
            }
            if rep.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
