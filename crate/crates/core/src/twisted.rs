//! Gluing data for `T⊕T*` over a finite cover: the 1-forms `A_αβ`, curvings
//! `B_α`, the curvature `H`, and the twisted differential `d − H`.
//!
//! All charts share one ambient coordinate system, so an overlap is just a
//! pair of chart names.

use std::collections::BTreeMap;

use crate::algebra::check_same;
use crate::error::{Error, Result};
use crate::forms::MixedForm;
use crate::generalized::{bfield_on_form, bfield_on_section, GenSection};

#[derive(Clone, Debug, PartialEq)]
pub struct CoverData {
    dim: usize,
    charts: Vec<String>,
    a: BTreeMap<(String, String), MixedForm>,
    b: BTreeMap<String, MixedForm>,
}

impl CoverData {
    pub fn new(
        dim: usize,
        charts: Vec<String>,
        a: BTreeMap<(String, String), MixedForm>,
        b: BTreeMap<String, MixedForm>,
    ) -> Result<Self> {
        crate::algebra::Chart::new(dim)?;
        for (i, c) in charts.iter().enumerate() {
            if charts[..i].contains(c) {
                return Err(Error::MalformedCover(format!("duplicate chart {c}")));
            }
        }
        let known = |c: &String| charts.contains(c);
        for ((x, y), form) in &a {
            if !known(x) || !known(y) {
                return Err(Error::MalformedCover(format!("overlap ({x},{y}) names an unknown chart")));
            }
            if x == y {
                return Err(Error::MalformedCover(format!("self-overlap ({x},{x})")));
            }
            check_same(dim, form.dim())?;
            if !form.is_zero() && !form.is_homogeneous(1) {
                return Err(Error::MalformedCover(format!("A({x},{y}) is not a 1-form")));
            }
            if let Some(back) = a.get(&(y.clone(), x.clone())) {
                if !(back + form).is_zero() {
                    return Err(Error::MalformedCover(format!("A({y},{x}) != -A({x},{y})")));
                }
            }
        }
        for (x, form) in &b {
            if !known(x) {
                return Err(Error::MalformedCover(format!("curving on unknown chart {x}")));
            }
            check_same(dim, form.dim())?;
            if !form.is_zero() && !form.is_homogeneous(2) {
                return Err(Error::MalformedCover(format!("B({x}) is not a 2-form")));
            }
        }
        Ok(Self { dim, charts, a, b })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[String] {
        &self.charts
    }

    pub fn connection_forms(&self) -> &BTreeMap<(String, String), MixedForm> {
        &self.a
    }

    pub fn curvings(&self) -> &BTreeMap<String, MixedForm> {
        &self.b
    }

    pub fn has_overlap(&self, alpha: &str, beta: &str) -> bool {
        self.a.contains_key(&(alpha.to_string(), beta.to_string()))
            || self.a.contains_key(&(beta.to_string(), alpha.to_string()))
    }

    /// `A_αβ`, using `A_βα = −A_αβ` when only the reverse is stored.
    pub fn a(&self, alpha: &str, beta: &str) -> Result<MixedForm> {
        if let Some(f) = self.a.get(&(alpha.to_string(), beta.to_string())) {
            return Ok(f.clone());
        }
        if let Some(f) = self.a.get(&(beta.to_string(), alpha.to_string())) {
            return Ok(-f);
        }
        Err(Error::UnknownOverlap(alpha.to_string(), beta.to_string()))
    }

    pub fn curving(&self, alpha: &str) -> Option<&MixedForm> {
        self.b.get(alpha)
    }

    /// The curvature `H = dB_α`, checked to agree on every chart with a curving.
    pub fn curvature(&self) -> Result<Option<MixedForm>> {
        let mut h: Option<MixedForm> = None;
        for (name, b) in &self.b {
            let hb = b.exterior_derivative();
            match &h {
                None => h = Some(hb),
                Some(prev) if *prev != hb => {
                    return Err(Error::Inconsistent(format!("dB differs on chart {name}")));
                }
                _ => {}
            }
        }
        Ok(h)
    }

    /// Unordered triples of charts with all three overlaps present.
    pub fn triples(&self) -> Vec<(String, String, String)> {
        let c = &self.charts;
        let mut out = Vec::new();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                for k in j + 1..c.len() {
                    if self.has_overlap(&c[i], &c[j])
                        && self.has_overlap(&c[j], &c[k])
                        && self.has_overlap(&c[k], &c[i])
                    {
                        out.push((c[i].clone(), c[j].clone(), c[k].clone()));
                    }
                }
            }
        }
        out
    }

    /// Pairs of charts with an overlap, as stored.
    pub fn overlaps(&self) -> Vec<(String, String)> {
        self.a.keys().cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleResidual {
    pub charts: (String, String, String),
    /// `dA_αβ + dA_βγ + dA_γα`.
    pub residual: MixedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CocycleReport {
    pub triples: Vec<TripleResidual>,
    /// `B_β − B_α − dA_αβ` per overlap where both curvings are present.
    pub curving: Vec<((String, String), MixedForm)>,
}

impl CocycleReport {
    pub fn passed(&self) -> bool {
        self.triples.iter().all(|t| t.residual.is_zero()) && self.curving.iter().all(|(_, r)| r.is_zero())
    }
}

pub fn check_cocycle(c: &CoverData) -> Result<CocycleReport> {
    let mut triples = Vec::new();
    for (x, y, z) in c.triples() {
        let residual = &(&c.a(&x, &y)?.exterior_derivative() + &c.a(&y, &z)?.exterior_derivative())
            + &c.a(&z, &x)?.exterior_derivative();
        triples.push(TripleResidual { charts: (x, y, z), residual });
    }
    let mut curving = Vec::new();
    for (x, y) in c.overlaps() {
        if let (Some(bx), Some(by)) = (c.curving(&x), c.curving(&y)) {
            let r = &(by - bx) - &c.a(&x, &y)?.exterior_derivative();
            curving.push(((x, y), r));
        }
    }
    Ok(CocycleReport { triples, curving })
}

/// Transports a section from `U_α` to `U_β` by the B-field `dA_αβ`.
pub fn glue_section(u: &GenSection, c: &CoverData, alpha: &str, beta: &str) -> Result<GenSection> {
    check_same(u.dim(), c.dim())?;
    let da = c.a(alpha, beta)?.exterior_derivative();
    if da.is_zero() {
        return Ok(u.clone());
    }
    bfield_on_section(&da, u)
}

/// `(d − H)ψ = dψ − H∧ψ` for a closed 3-form `H`.
pub fn twisted_differential(psi: &MixedForm, h: &MixedForm) -> Result<MixedForm> {
    check_same(psi.dim(), h.dim())?;
    if h.is_zero() {
        return Ok(psi.exterior_derivative());
    }
    h.require_degree(3)?;
    if !h.exterior_derivative().is_zero() {
        return Err(Error::NotClosed("H".into()));
    }
    Ok(&psi.exterior_derivative() - &h.wedge(psi)?)
}

/// Computes `ψ_α = e^{B_α} φ_α` per chart and checks that the results agree on overlaps.
pub fn globalize_with_curving(
    phis: &BTreeMap<String, MixedForm>,
    c: &CoverData,
) -> Result<BTreeMap<String, MixedForm>> {
    let mut out = BTreeMap::new();
    for name in c.charts() {
        let phi = phis.get(name).ok_or_else(|| Error::MalformedCover(format!("no form on chart {name}")))?;
        check_same(phi.dim(), c.dim())?;
        let zero = MixedForm::zero(c.dim());
        let b = c.curving(name).unwrap_or(&zero);
        let psi = if b.is_zero() { phi.clone() } else { bfield_on_form(b, phi)? };
        out.insert(name.clone(), psi);
    }
    for (x, y) in c.overlaps() {
        if out[&x] != out[&y] {
            return Err(Error::Inconsistent(format!("e^B φ differs between charts {x} and {y}")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Polynomial;
    use crate::forms::VectorField;

    fn x(dim: usize, i: usize) -> Polynomial {
        Polynomial::var(dim, i).unwrap()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn failing_cocycle() {
        let mut a = BTreeMap::new();
        a.insert(pair("a", "b"), MixedForm::monomial(&[1], x(3, 0)).unwrap());
        a.insert(pair("b", "c"), MixedForm::monomial(&[1], -x(3, 0)).unwrap());
        a.insert(pair("c", "a"), MixedForm::monomial(&[0], x(3, 1)).unwrap());
        let c = CoverData::new(3, names(&["a", "b", "c"]), a, BTreeMap::new()).unwrap();
        let report = check_cocycle(&c).unwrap();
        assert!(!report.passed());
        assert_eq!(report.triples[0].residual, -&MixedForm::basis(3, &[0, 1]).unwrap());
    }

    #[test]
    fn exact_cocycle_passes_and_glues_round_trip() {
        // A = d(φ) with φ_ab + φ_bc + φ_ca = 0, plus a closed non-exact part on one edge
        let f = &x(3, 0) * &x(3, 1);
        let g = &x(3, 2) * &x(3, 2);
        let dfa = MixedForm::scalar(f.clone()).exterior_derivative();
        let dga = MixedForm::scalar(g.clone()).exterior_derivative();
        let mut a = BTreeMap::new();
        a.insert(pair("a", "b"), &MixedForm::monomial(&[2], x(3, 1)).unwrap() + &dfa);
        a.insert(pair("b", "c"), &dga - &MixedForm::monomial(&[2], x(3, 1)).unwrap());
        a.insert(pair("c", "a"), -&(&dfa + &dga));
        let c = CoverData::new(3, names(&["a", "b", "c"]), a, BTreeMap::new()).unwrap();
        assert!(check_cocycle(&c).unwrap().passed());
        let u = GenSection::vector(VectorField::new(vec![x(3, 2), Polynomial::one(3), x(3, 0)]).unwrap());
        let ab = glue_section(&u, &c, "a", "b").unwrap();
        assert_ne!(ab, u);
        assert_eq!(glue_section(&ab, &c, "b", "a").unwrap(), u);
        let abc = glue_section(&glue_section(&ab, &c, "b", "c").unwrap(), &c, "c", "a").unwrap();
        assert_eq!(abc, u);
        let covector = GenSection::coordinate_covector(3, 1).unwrap();
        assert_eq!(glue_section(&covector, &c, "a", "b").unwrap(), covector);
        assert!(matches!(glue_section(&u, &c, "a", "z"), Err(Error::UnknownOverlap(..))));
    }

    #[test]
    fn single_chart_is_vacuous() {
        let c = CoverData::new(2, names(&["a"]), BTreeMap::new(), BTreeMap::new()).unwrap();
        assert!(check_cocycle(&c).unwrap().passed());
        let mut phis = BTreeMap::new();
        let phi = &MixedForm::one(2) + &MixedForm::basis(2, &[0, 1]).unwrap();
        phis.insert("a".to_string(), phi.clone());
        assert_eq!(globalize_with_curving(&phis, &c).unwrap()["a"], phi);
    }

    #[test]
    fn malformed_covers_rejected() {
        let mut a = BTreeMap::new();
        a.insert(pair("a", "q"), MixedForm::basis(2, &[0]).unwrap());
        assert!(CoverData::new(2, names(&["a", "b"]), a, BTreeMap::new()).is_err());
        let mut a = BTreeMap::new();
        a.insert(pair("a", "b"), MixedForm::basis(2, &[0]).unwrap());
        a.insert(pair("b", "a"), MixedForm::basis(2, &[0]).unwrap());
        assert!(CoverData::new(2, names(&["a", "b"]), a, BTreeMap::new()).is_err());
    }

    #[test]
    fn twisted_differential_cases() {
        let psi = &MixedForm::scalar(&x(4, 0) * &x(4, 3)) + &MixedForm::monomial(&[1, 2], x(4, 0)).unwrap();
        assert_eq!(twisted_differential(&psi, &MixedForm::zero(4)).unwrap(), psi.exterior_derivative());
        let h = MixedForm::monomial(&[0, 1, 2], &x(4, 0) + &x(4, 1)).unwrap();
        let once = twisted_differential(&psi, &h).unwrap();
        assert!(twisted_differential(&once, &h).unwrap().is_zero());
        let open = MixedForm::monomial(&[1, 2, 3], x(4, 0)).unwrap();
        assert!(matches!(twisted_differential(&psi, &open), Err(Error::NotClosed(_))));
        // ψ = e^B φ with dφ = 0 and H = dB
        let b = MixedForm::monomial(&[1, 2], x(4, 0)).unwrap();
        let phi = &MixedForm::one(4) + &MixedForm::basis(4, &[0, 3]).unwrap();
        let psi = bfield_on_form(&b, &phi).unwrap();
        assert!(twisted_differential(&psi, &b.exterior_derivative()).unwrap().is_zero());
    }

    #[test]
    fn globalize_two_charts() {
        let da_form = MixedForm::monomial(&[2], x(3, 0)).unwrap();
        let da = da_form.exterior_derivative();
        let ba = MixedForm::monomial(&[1, 2], x(3, 1)).unwrap();
        let bb = &ba + &da;
        let mut a = BTreeMap::new();
        a.insert(pair("a", "b"), da_form);
        let mut b = BTreeMap::new();
        b.insert("a".to_string(), ba);
        b.insert("b".to_string(), bb);
        let c = CoverData::new(3, names(&["a", "b"]), a, b).unwrap();
        assert!(check_cocycle(&c).unwrap().passed());
        assert!(c.curvature().unwrap().is_some());
        let phi_a = &MixedForm::one(3) + &MixedForm::basis(3, &[0, 1]).unwrap();
        let phi_b = bfield_on_form(&(-&da), &phi_a).unwrap();
        let mut phis = BTreeMap::new();
        phis.insert("a".to_string(), phi_a.clone());
        phis.insert("b".to_string(), phi_b);
        let psi = globalize_with_curving(&phis, &c).unwrap();
        assert_eq!(psi["a"], psi["b"]);
        phis.insert("b".to_string(), phi_a);
        assert!(matches!(globalize_with_curving(&phis, &c), Err(Error::Inconsistent(_))));
    }
}
