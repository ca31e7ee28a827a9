//! Exact coefficient arithmetic on coordinate charts.
//!
//! Every coefficient function in the symbolic kernel is a sparse multivariate
//! polynomial with arbitrary-precision rational coefficients. Monomials are
//! stored as fixed exponent arrays in a `BTreeMap`, so two polynomials are
//! equal exactly when their term maps are equal.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Largest chart dimension the kernel supports.
pub const MAX_DIM: usize = 8;

/// Exponent vector of a monomial; only the first `dim` slots are used.
pub type Exponents = [u16; MAX_DIM];

/// A coordinate chart `x_0 .. x_{dim-1}`.
///
/// Objects remember the dimension of the chart they were built on and every
/// binary operation rejects operands from charts of different dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    dim: usize,
}

impl Chart {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coordinate_name(&self, i: usize) -> String {
        format!("x{}", i + 1)
    }
}

pub(crate) fn check_same(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ChartMismatch { left: a, right: b });
    }
    Ok(())
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"-0.125"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational literal {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // ratio of huge integers; scale down both sides
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact square root of a non-negative rational, if it is a perfect square.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Sparse polynomial with rational coefficients in `dim` variables.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Exponents, Rational>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term([0; MAX_DIM], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Rational::one())
    }

    pub fn from_int(dim: usize, c: i64) -> Self {
        Self::constant(dim, rat(c))
    }

    /// The coordinate function `x_i`.
    pub fn var(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        let mut e = [0; MAX_DIM];
        e[i] = 1;
        Ok(Self::monomial(dim, e, Rational::one()))
    }

    pub fn monomial(dim: usize, exps: Exponents, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(exps, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u16>, Rational)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: exps.len() });
            }
            let mut e = [0; MAX_DIM];
            e[..dim].copy_from_slice(&exps);
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart(&self) -> Chart {
        Chart { dim: self.dim }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// Value of a constant polynomial; `None` if any variable occurs.
    pub fn constant_value(&self) -> Option<Rational> {
        if !self.is_constant() {
            return None;
        }
        Some(self.terms.get(&[0; MAX_DIM]).cloned().unwrap_or_else(Rational::zero))
    }

    /// Coefficient of the constant monomial.
    pub fn constant_term(&self) -> Rational {
        self.terms.get(&[0; MAX_DIM]).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().map(|&k| k as u32).sum()).max()
    }

    fn add_term(&mut self, e: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        Self { dim: self.dim, terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect() }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same(self.dim, other.dim)?;
        Ok(self + other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        check_same(self.dim, other.dim)?;
        Ok(self * other)
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn differentiate(&self, i: usize) -> Result<Self> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim });
        }
        Ok(self.partial(i))
    }

    pub(crate) fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let k = e[i];
            if k == 0 {
                continue;
            }
            let mut e2 = *e;
            e2[i] = k - 1;
            out.add_term(e2, c * rat(k as i64));
        }
        out
    }

    /// Exact value at a rational point.
    pub fn evaluate(&self, pt: &[Rational]) -> Result<Rational> {
        if pt.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: pt.len() });
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in pt.iter().zip(e.iter()) {
                if k > 0 {
                    m *= num_traits::pow(x.clone(), k as usize);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    /// Floating-point value; `pt.len()` must equal the dimension.
    pub fn evaluate_f64(&self, pt: &[f64]) -> f64 {
        debug_assert_eq!(pt.len(), self.dim);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut m = rational_to_f64(c);
                for (x, &k) in pt.iter().zip(e.iter()) {
                    if k > 0 {
                        m *= x.powi(k as i32);
                    }
                }
                m
            })
            .sum()
    }

    /// Leading term under graded-lexicographic order.
    pub(crate) fn leading(&self) -> Option<(Exponents, Rational)> {
        self.terms.iter().max_by(|(a, _), (b, _)| grlex(a).cmp(&grlex(b))).map(|(e, c)| (*e, c.clone()))
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        if d.is_zero() || d.dim != self.dim {
            return None;
        }
        let (lm, lc) = d.leading()?;
        let mut rem = self.clone();
        let mut q = Self::zero(self.dim);
        while let Some((re, rc)) = rem.leading() {
            let mut e = [0u16; MAX_DIM];
            for k in 0..MAX_DIM {
                if re[k] < lm[k] {
                    return None;
                }
                e[k] = re[k] - lm[k];
            }
            let t = Self::monomial(self.dim, e, rc / &lc);
            rem = &rem - &(&t * d);
            q = &q + &t;
        }
        Some(q)
    }

    /// Exact square root when `self` is the square of a polynomial. The root
    /// returned has positive leading coefficient.
    pub fn sqrt_exact(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let (le, lc) = self.leading()?;
        let mut re = [0u16; MAX_DIM];
        for k in 0..MAX_DIM {
            if le[k] % 2 != 0 {
                return None;
            }
            re[k] = le[k] / 2;
        }
        let c = rational_sqrt(&lc)?;
        let lead = Self::monomial(self.dim, re, c.clone());
        let mut root = lead.clone();
        let two_lead_c = &c * rat(2);
        let max_deg = self.total_degree()? / 2;
        loop {
            let rem = self - &(&root * &root);
            let Some((e, rc)) = rem.leading() else {
                return Some(root);
            };
            let mut te = [0u16; MAX_DIM];
            for k in 0..MAX_DIM {
                if e[k] < re[k] {
                    return None;
                }
                te[k] = e[k] - re[k];
            }
            if grlex(&te) >= grlex(&re) {
                return None;
            }
            let t = Self::monomial(self.dim, te, rc / &two_lead_c);
            if t.total_degree()? > max_deg {
                return None;
            }
            root = &root + &t;
        }
    }

    /// Largest absolute coefficient, as f64; used in numeric reports.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| rational_to_f64(c).abs()).fold(0.0, f64::max)
    }
}

fn grlex(e: &Exponents) -> (u32, Exponents) {
    (e.iter().map(|&k| k as u32).sum(), *e)
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let is_const = e.iter().all(|&k| k == 0);
            if !a.is_one() || is_const {
                write!(f, "{}", format_rational(&a))?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut sep = "";
            for (i, &k) in e.iter().enumerate().take(self.dim) {
                if k == 0 {
                    continue;
                }
                write!(f, "{sep}x{}", i + 1)?;
                if k > 1 {
                    write!(f, "^{k}")?;
                }
                sep = "*";
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        let mut out = Polynomial::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let mut e = *ea;
                for k in 0..MAX_DIM {
                    e[k] += eb[k];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect() }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl AddAssign<&Polynomial> for Polynomial {
    fn add_assign(&mut self, rhs: &Polynomial) {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl SubAssign<&Polynomial> for Polynomial {
    fn sub_assign(&mut self, rhs: &Polynomial) {
        debug_assert_eq!(self.dim, rhs.dim, "chart mismatch");
        for (e, c) in &rhs.terms {
            self.add_term(*e, -c.clone());
        }
    }
}

/// Solves `m x = b` exactly by Gaussian elimination; `None` if singular.
pub fn solve_rational(m: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for k in col..=n {
            a[col][k] = &a[col][k] * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for k in col..=n {
                    let t = &factor * &a[col][k];
                    a[r][k] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

/// Exact inverse of a square rational matrix.
pub fn invert_rational(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Rational> = (0..n).map(|i| if i == j { Rational::one() } else { Rational::zero() }).collect();
        cols.push(solve_rational(m, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Exact determinant by Gaussian elimination.
pub fn determinant_rational(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if !a[r][col].is_zero() {
                let factor = &a[r][col] / &p;
                for k in col..n {
                    let t = &factor * &a[col][k];
                    a[r][k] -= t;
                }
            }
        }
    }
    det
}

/// Rank of a rational matrix given as rows.
pub fn rank_rational(rows: &[Vec<Rational>]) -> usize {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        let p = a[rank][col].clone();
        for r in 0..a.len() {
            if r != rank && !a[r][col].is_zero() {
                let factor = &a[r][col] / &p;
                for k in col..ncols {
                    let t = &factor * &a[rank][k];
                    a[r][k] -= t;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Sign of a rational: -1, 0 or 1.
pub fn signum(q: &Rational) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(dim: usize, i: usize) -> Polynomial {
        Polynomial::var(dim, i).unwrap()
    }

    #[test]
    fn power_rule() {
        let p = &(&x(2, 0) * &x(2, 0)) * &x(2, 1);
        let expected = (&x(2, 0) * &x(2, 1)).scale(&rat(2));
        assert_eq!(p.differentiate(0).unwrap(), expected);
    }

    #[test]
    fn derivative_of_constant_and_linear() {
        assert!(Polynomial::from_int(3, 5).differentiate(2).unwrap().is_zero());
        let p = &x(2, 0) + &x(2, 1);
        assert_eq!(p.differentiate(1).unwrap(), Polynomial::one(2));
        assert!(matches!(p.differentiate(2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn evaluation() {
        let p = &(&x(2, 0) * &x(2, 0)) * &x(2, 1);
        assert_eq!(p.evaluate(&[rat(2), rat(3)]).unwrap(), rat(12));
        assert_eq!(Polynomial::zero(2).evaluate(&[rat(7), rat(-1)]).unwrap(), rat(0));
        let q = &x(2, 0) + &x(2, 1);
        assert_eq!(q.evaluate(&[ratio(1, 2), ratio(1, 3)]).unwrap(), ratio(5, 6));
        assert!(matches!(q.evaluate(&[rat(1)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let p = &x(3, 0) - &x(3, 0);
        assert!(p.is_zero());
        assert_eq!(p.num_terms(), 0);
    }

    #[test]
    fn chart_bounds() {
        assert!(Chart::new(0).is_err());
        assert!(Chart::new(9).is_err());
        assert_eq!(Chart::new(5).unwrap().dim(), 5);
        assert!(Polynomial::one(2).try_add(&Polynomial::one(3)).is_err());
    }

    #[test]
    fn exact_division_and_roots() {
        let a = &x(2, 0) + &Polynomial::from_int(2, 3);
        let b = &x(2, 1) - &x(2, 0);
        let prod = &a * &b;
        assert_eq!(prod.div_exact(&b).unwrap(), a);
        assert!(prod.div_exact(&(&x(2, 1) + &Polynomial::one(2))).is_none());
        let sq = &prod * &prod;
        let r = sq.sqrt_exact().unwrap();
        assert_eq!(&r * &r, sq);
        assert!(Polynomial::from_int(2, 8).sqrt_exact().is_none());
        assert_eq!(Polynomial::from_int(2, 9).sqrt_exact().unwrap(), Polynomial::from_int(2, 3));
        assert!((&x(2, 0) * &x(2, 0) + Polynomial::one(2)).sqrt_exact().is_none());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), ratio(-1, 8));
        assert_eq!(parse_rational(" 7 ").unwrap(), rat(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(format_rational(&ratio(-2, 4)), "-1/2");
    }

    #[test]
    fn linear_algebra() {
        let m = vec![vec![rat(2), rat(1)], vec![rat(1), rat(3)]];
        let inv = invert_rational(&m).unwrap();
        assert_eq!(inv[0][0], ratio(3, 5));
        assert_eq!(inv[0][1], ratio(-1, 5));
        assert_eq!(rank_rational(&[vec![rat(1), rat(2)], vec![rat(2), rat(4)]]), 1);
        assert!(invert_rational(&[vec![rat(1), rat(2)], vec![rat(2), rat(4)]]).is_none());
        assert_eq!(determinant_rational(&m), rat(5));
        let p = vec![vec![rat(0), rat(1), rat(0)], vec![rat(1), rat(0), rat(0)], vec![rat(0), rat(0), rat(7)]];
        assert_eq!(determinant_rational(&p), rat(-7));
    }
}
