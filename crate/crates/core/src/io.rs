//! JSON input and output for polynomials, forms, sections, metrics, covers and
//! pairs of even forms.
//!
//! Coefficients are rational strings such as `"-3/4"`; integers are accepted
//! as bare numbers. A polynomial may also be written as a bare coefficient,
//! which is read as a constant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{format_rational, parse_rational, Polynomial, Rational};
use crate::blade::indices_of;
use crate::error::{Error, Result};
use crate::forms::{MixedForm, VectorField};
use crate::generalized::GenSection;
use crate::metric::GeneralizedMetric;
use crate::spin55::RhoPair;
use crate::twisted::CoverData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffJson {
    Text(String),
    Int(i64),
}

impl CoeffJson {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            CoeffJson::Text(s) => parse_rational(s),
            CoeffJson::Int(n) => Ok(Rational::from_integer((*n).into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialJson {
    pub exponents: Vec<u16>,
    pub coeff: CoeffJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolynomialJson {
    Terms(Vec<MonomialJson>),
    Constant(CoeffJson),
}

impl PolynomialJson {
    /// Largest exponent-vector length, if any term has one.
    fn dim_hint(&self) -> Option<usize> {
        match self {
            PolynomialJson::Terms(t) => t.iter().map(|m| m.exponents.len()).max(),
            PolynomialJson::Constant(_) => None,
        }
    }

    pub fn to_polynomial(&self, dim: usize) -> Result<Polynomial> {
        match self {
            PolynomialJson::Constant(c) => Ok(Polynomial::constant(dim, c.to_rational()?)),
            PolynomialJson::Terms(terms) => {
                let mut parsed = Vec::with_capacity(terms.len());
                for m in terms {
                    if m.exponents.len() > dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: m.exponents.len() });
                    }
                    let mut e = m.exponents.clone();
                    e.resize(dim, 0);
                    parsed.push((e, m.coeff.to_rational()?));
                }
                Polynomial::from_terms(dim, parsed)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormTermJson {
    pub indices: Vec<usize>,
    pub coeff: PolynomialJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub terms: Vec<FormTermJson>,
}

impl FormJson {
    fn dim_hint(&self) -> Option<usize> {
        self.dim.or_else(|| self.terms.iter().filter_map(|t| t.coeff.dim_hint()).max())
    }

    pub fn to_form(&self, dim: Option<usize>) -> Result<MixedForm> {
        let dim = self
            .dim
            .or(dim)
            .or_else(|| self.dim_hint())
            .ok_or_else(|| Error::Parse("form dimension is not determined; add \"dim\"".into()))?;
        crate::algebra::Chart::new(dim)?;
        let mut out = MixedForm::zero(dim);
        for t in &self.terms {
            if let Some(&i) = t.indices.iter().find(|&&i| i >= dim) {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            out = &out + &MixedForm::monomial(&t.indices, t.coeff.to_polynomial(dim)?)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionJson {
    pub vector: Vec<PolynomialJson>,
    pub oneform: Vec<PolynomialJson>,
}

impl SectionJson {
    pub fn to_section(&self) -> Result<GenSection> {
        let dim = self.vector.len();
        if self.oneform.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.oneform.len() });
        }
        let x = self.vector.iter().map(|p| p.to_polynomial(dim)).collect::<Result<Vec<_>>>()?;
        let xi = self.oneform.iter().map(|p| p.to_polynomial(dim)).collect::<Result<Vec<_>>>()?;
        GenSection::new(VectorField::new(x)?, xi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricJson {
    #[serde(rename = "C")]
    pub c: Vec<Vec<PolynomialJson>>,
}

impl MetricJson {
    pub fn to_metric(&self) -> Result<GeneralizedMetric> {
        let dim = self.c.len();
        let rows = self
            .c
            .iter()
            .map(|row| {
                if row.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
                }
                row.iter().map(|p| p.to_polynomial(dim)).collect()
            })
            .collect::<Result<Vec<_>>>()?;
        GeneralizedMetric::new(rows)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub charts: Vec<String>,
    #[serde(rename = "A", default)]
    pub a: BTreeMap<String, FormJson>,
    #[serde(rename = "B", default)]
    pub b: BTreeMap<String, FormJson>,
}

/// Reads an overlap key `"(a,b)"` or `"a,b"`.
fn parse_overlap_key(key: &str) -> Result<(String, String)> {
    let inner = key.trim().trim_start_matches('(').trim_end_matches(')');
    let mut parts = inner.split(',').map(str::trim);
    match (parts.next(), parts.next(), parts.next()) {
        (Some(x), Some(y), None) if !x.is_empty() && !y.is_empty() => Ok((x.to_string(), y.to_string())),
        _ => Err(Error::MalformedCover(format!("overlap key {key:?} is not of the form (a,b)"))),
    }
}

impl CoverJson {
    pub fn to_cover(&self) -> Result<CoverData> {
        let dim = self
            .dim
            .or_else(|| self.a.values().chain(self.b.values()).filter_map(FormJson::dim_hint).max())
            .ok_or_else(|| Error::Parse("cover dimension is not determined; add \"dim\"".into()))?;
        let mut a = BTreeMap::new();
        for (k, f) in &self.a {
            a.insert(parse_overlap_key(k)?, f.to_form(Some(dim))?);
        }
        let mut b = BTreeMap::new();
        for (k, f) in &self.b {
            b.insert(k.clone(), f.to_form(Some(dim))?);
        }
        CoverData::new(dim, self.charts.clone(), a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rho1: FormJson,
    pub rho2: FormJson,
}

impl RhoJson {
    pub fn to_rho(&self) -> Result<RhoPair> {
        let dim = self.dim.unwrap_or(crate::spin55::DIM);
        RhoPair::new(self.rho1.to_form(Some(dim))?, self.rho2.to_form(Some(dim))?)
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn parse_points(text: &str) -> Result<Vec<Vec<Rational>>> {
    let raw: Vec<Vec<CoeffJson>> = parse(text)?;
    raw.iter().map(|p| p.iter().map(CoeffJson::to_rational).collect()).collect()
}

pub fn polynomial_to_json(p: &Polynomial) -> Value {
    let terms: Vec<Value> =
        p.terms().map(|(e, c)| json!({"exponents": &e[..p.dim()], "coeff": format_rational(c)})).collect();
    Value::Array(terms)
}

pub fn form_to_json(f: &MixedForm) -> Value {
    let terms: Vec<Value> =
        f.terms().map(|(m, c)| json!({"indices": indices_of(m), "coeff": polynomial_to_json(c)})).collect();
    json!({"dim": f.dim(), "terms": terms})
}

pub fn section_to_json(s: &GenSection) -> Value {
    json!({
        "vector": s.vector_part().components().iter().map(polynomial_to_json).collect::<Vec<_>>(),
        "oneform": s.form_components().iter().map(polynomial_to_json).collect::<Vec<_>>(),
    })
}

pub fn rho_to_json(rho: &RhoPair) -> Value {
    json!({"dim": crate::spin55::DIM, "rho1": form_to_json(&rho.rho1), "rho2": form_to_json(&rho.rho2)})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ratio;

    #[test]
    fn polynomial_round_trip() {
        let p: PolynomialJson =
            parse(r#"[{"exponents":[1,0,2],"coeff":"-3/4"},{"exponents":[0,0,0],"coeff":2}]"#).unwrap();
        let poly = p.to_polynomial(3).unwrap();
        let back: PolynomialJson = serde_json::from_value(polynomial_to_json(&poly)).unwrap();
        assert_eq!(back.to_polynomial(3).unwrap(), poly);
        assert_eq!(poly.evaluate(&[ratio(1, 1), ratio(5, 1), ratio(1, 1)]).unwrap(), ratio(5, 4));
    }

    #[test]
    fn form_with_constant_coefficients() {
        let f: FormJson =
            parse(r#"{"dim":5,"terms":[{"indices":[1,0],"coeff":"1"},{"indices":[],"coeff":1}]}"#).unwrap();
        let form = f.to_form(None).unwrap();
        assert_eq!(form.coefficient(&[0, 1]), Polynomial::from_int(5, -1));
        assert_eq!(form.coefficient(&[]), Polynomial::one(5));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse::<FormJson>("{\"terms\": [\n  {\"indices\": [0}\n]}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn cover_keys() {
        assert_eq!(parse_overlap_key("(a, b)").unwrap(), ("a".into(), "b".into()));
        assert!(parse_overlap_key("(a)").is_err());
    }

    #[test]
    fn normal_form_round_trip() {
        let rho = crate::spin55::normal_form();
        let back: RhoJson = serde_json::from_value(rho_to_json(&rho)).unwrap();
        assert_eq!(back.to_rho().unwrap(), rho);
    }
}
