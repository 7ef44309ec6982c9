//! Time-dependent coefficient functions with exact calculus.
//!
//! A [`CoeffFn`] is a finite combination of constants, monomials `c·tⁿ` and
//! exponentials `c·e^{at}`. The set is closed under differentiation and
//! definite integration, so every moment formula built from these pieces is
//! evaluated without quadrature. Products that leave the set (a monomial times
//! an exponential) are carried as an [`Integrand`] and integrated by adaptive
//! Simpson quadrature.
//!
//! Textual syntax: `const(c)`, `pow(c,n)`, `exp(c,a)`, `k*f`, `f+g` (and
//! `f-g` as shorthand for `f+-1*g`), with parentheses for grouping.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Absolute tolerance of the quadrature fallback.
pub const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffFn {
    Const(f64),
    /// `c·tⁿ`
    Power { c: f64, n: u32 },
    /// `c·e^{a t}`
    Exp { c: f64, a: f64 },
    Sum(Vec<CoeffFn>),
    Scale(f64, Box<CoeffFn>),
}

/// One additive term of a normalized coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Term {
    Const(f64),
    Power(f64, u32),
    Exp(f64, f64),
}

impl CoeffFn {
    pub fn zero() -> Self {
        CoeffFn::Const(0.0)
    }

    pub fn constant(c: f64) -> Self {
        CoeffFn::Const(c)
    }

    pub fn power(c: f64, n: u32) -> Self {
        CoeffFn::Power { c, n }
    }

    pub fn exp(c: f64, a: f64) -> Self {
        CoeffFn::Exp { c, a }
    }

    pub fn scale(k: f64, f: CoeffFn) -> Self {
        CoeffFn::Scale(k, Box::new(f))
    }

    /// Sum of the given functions; an empty list is the zero function.
    pub fn sum(mut fs: Vec<CoeffFn>) -> Self {
        match fs.len() {
            0 => CoeffFn::zero(),
            1 => fs.pop().unwrap(),
            _ => CoeffFn::Sum(fs),
        }
    }

    pub fn plus(&self, other: &CoeffFn) -> Self {
        CoeffFn::Sum(vec![self.clone(), other.clone()])
    }

    pub fn minus(&self, other: &CoeffFn) -> Self {
        CoeffFn::Sum(vec![self.clone(), CoeffFn::scale(-1.0, other.clone())])
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CoeffFn::Const(c) => *c,
            CoeffFn::Power { c, n } => c * powu(t, *n),
            CoeffFn::Exp { c, a } => c * (a * t).exp(),
            CoeffFn::Sum(fs) => fs.iter().map(|f| f.eval(t)).sum(),
            CoeffFn::Scale(k, f) => k * f.eval(t),
        }
    }

    pub fn derivative(&self) -> CoeffFn {
        match self {
            CoeffFn::Const(_) | CoeffFn::Power { n: 0, .. } => CoeffFn::Const(0.0),
            CoeffFn::Power { c, n } => CoeffFn::Power {
                c: c * f64::from(*n),
                n: n - 1,
            },
            CoeffFn::Exp { c, a } => CoeffFn::Exp { c: c * a, a: *a },
            CoeffFn::Sum(fs) => CoeffFn::Sum(fs.iter().map(CoeffFn::derivative).collect()),
            CoeffFn::Scale(k, f) => CoeffFn::scale(*k, f.derivative()),
        }
    }

    /// An antiderivative `F` with `F′ = f` (integration constant zero).
    pub fn antiderivative(&self) -> CoeffFn {
        match self {
            CoeffFn::Const(c) => CoeffFn::Power { c: *c, n: 1 },
            CoeffFn::Power { c, n } => CoeffFn::Power {
                c: c / f64::from(n + 1),
                n: n + 1,
            },
            CoeffFn::Exp { c, a } if *a == 0.0 => CoeffFn::Power { c: *c, n: 1 },
            CoeffFn::Exp { c, a } => CoeffFn::Exp { c: c / a, a: *a },
            CoeffFn::Sum(fs) => CoeffFn::Sum(fs.iter().map(CoeffFn::antiderivative).collect()),
            CoeffFn::Scale(k, f) => CoeffFn::scale(*k, f.antiderivative()),
        }
    }

    /// Exact `∫_a^b f(s) ds`. Rejects `a > b`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "integration bounds must be finite, got [{a}, {b}]"
            )));
        }
        if a > b {
            return Err(Error::MisorderedInterval { a, b });
        }
        Ok(self.integral(a, b))
    }

    /// Signed integral without the ordering check. Callers guarantee finite bounds.
    pub(crate) fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            CoeffFn::Const(c) => c * (b - a),
            CoeffFn::Power { c, n } => {
                let m = n + 1;
                c * (powu(b, m) - powu(a, m)) / f64::from(m)
            }
            CoeffFn::Exp { c, a: rate } => {
                if *rate == 0.0 {
                    c * (b - a)
                } else {
                    c * (rate * a).exp() * (rate * (b - a)).exp_m1() / rate
                }
            }
            CoeffFn::Sum(fs) => fs.iter().map(|f| f.integral(a, b)).sum(),
            CoeffFn::Scale(k, f) => k * f.integral(a, b),
        }
    }

    /// `f²` in the closed set when possible, otherwise a quadrature integrand.
    pub fn square(&self) -> Integrand {
        Integrand::product(self, self)
    }

    /// Pointwise product, if it stays inside the closed set.
    pub fn product(&self, other: &CoeffFn) -> Option<CoeffFn> {
        let lhs = self.terms();
        let rhs = other.terms();
        let mut out = Vec::with_capacity(lhs.len() * rhs.len());
        for &p in &lhs {
            for &q in &rhs {
                out.push(mul_terms(p, q)?);
            }
        }
        Some(from_terms(collect_terms(out)))
    }

    /// Structural constant value after collecting like terms.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms().as_slice() {
            [] => Some(0.0),
            [Term::Const(c)] => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// Collect like terms (constants, monomials by degree, exponentials by
    /// rate) and drop zero coefficients.
    pub fn normalize(&self) -> CoeffFn {
        from_terms(self.terms())
    }

    /// Pointwise agreement on `[a, b]`, sampled at 33 nodes, to relative `tol`.
    pub fn agrees_with(&self, other: &CoeffFn, a: f64, b: f64, tol: f64) -> bool {
        (0..=32).all(|i| {
            let t = a + (b - a) * f64::from(i) / 32.0;
            let (x, y) = (self.eval(t), other.eval(t));
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
        })
    }

    /// Does the function change sign or vanish on `[a, b]`? Sampled check.
    pub fn vanishes_on(&self, a: f64, b: f64) -> bool {
        const N: u32 = 1024;
        let first = self.eval(a);
        if first == 0.0 {
            return true;
        }
        (1..=N).any(|i| {
            let v = self.eval(a + (b - a) * f64::from(i) / f64::from(N));
            v == 0.0 || v.signum() != first.signum()
        })
    }

    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        (0..=256)
            .map(|i| self.eval(a + (b - a) * f64::from(i) / 256.0).abs())
            .fold(0.0, f64::max)
    }

    fn terms(&self) -> Vec<Term> {
        let mut raw = Vec::new();
        self.push_terms(1.0, &mut raw);
        collect_terms(raw)
    }

    fn push_terms(&self, k: f64, out: &mut Vec<Term>) {
        match self {
            CoeffFn::Const(c) => out.push(Term::Const(k * c)),
            CoeffFn::Power { c, n: 0 } => out.push(Term::Const(k * c)),
            CoeffFn::Power { c, n } => out.push(Term::Power(k * c, *n)),
            CoeffFn::Exp { c, a } if *a == 0.0 => out.push(Term::Const(k * c)),
            CoeffFn::Exp { c, a } => out.push(Term::Exp(k * c, *a)),
            CoeffFn::Sum(fs) => fs.iter().for_each(|f| f.push_terms(k, out)),
            CoeffFn::Scale(s, f) => f.push_terms(k * s, out),
        }
    }
}

fn powu(t: f64, n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => t,
        _ => t.powi(n as i32),
    }
}

fn mul_terms(p: Term, q: Term) -> Option<Term> {
    use Term::*;
    Some(match (p, q) {
        (Const(a), Const(b)) => Const(a * b),
        (Const(a), Power(b, n)) | (Power(b, n), Const(a)) => Power(a * b, n),
        (Const(a), Exp(b, r)) | (Exp(b, r), Const(a)) => Exp(a * b, r),
        (Power(a, n), Power(b, m)) => Power(a * b, n + m),
        (Exp(a, r), Exp(b, s)) => {
            if r + s == 0.0 {
                Const(a * b)
            } else {
                Exp(a * b, r + s)
            }
        }
        (Power(..), Exp(..)) | (Exp(..), Power(..)) => return None,
    })
}

fn collect_terms(raw: Vec<Term>) -> Vec<Term> {
    let mut constant = 0.0;
    let mut powers: BTreeMap<u32, f64> = BTreeMap::new();
    // f64 rates are keyed by their bit pattern; insertion order keeps output stable.
    let mut exps: Vec<(f64, f64)> = Vec::new();
    for t in raw {
        match t {
            Term::Const(c) => constant += c,
            Term::Power(c, 0) => constant += c,
            Term::Power(c, n) => *powers.entry(n).or_insert(0.0) += c,
            Term::Exp(c, a) if a == 0.0 => constant += c,
            Term::Exp(c, a) => match exps.iter_mut().find(|(r, _)| *r == a) {
                Some((_, acc)) => *acc += c,
                None => exps.push((a, c)),
            },
        }
    }
    let mut out = Vec::new();
    if constant != 0.0 {
        out.push(Term::Const(constant));
    }
    out.extend(
        powers
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(n, c)| Term::Power(c, n)),
    );
    out.extend(
        exps.into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(a, c)| Term::Exp(c, a)),
    );
    out
}

fn from_terms(terms: Vec<Term>) -> CoeffFn {
    CoeffFn::sum(
        terms
            .into_iter()
            .map(|t| match t {
                Term::Const(c) => CoeffFn::Const(c),
                Term::Power(c, n) => CoeffFn::Power { c, n },
                Term::Exp(c, a) => CoeffFn::Exp { c, a },
            })
            .collect(),
    )
}

/// An integrable function of time: either inside the closed set or a product
/// of closed-set factors that is integrated numerically.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    Closed(CoeffFn),
    Product(Vec<CoeffFn>),
}

impl Integrand {
    pub fn product(f: &CoeffFn, g: &CoeffFn) -> Self {
        Self::of_factors(&[f.clone(), g.clone()])
    }

    /// Product of all `factors`, closed-form when every partial product is.
    pub fn of_factors(factors: &[CoeffFn]) -> Self {
        let closed = factors
            .iter()
            .try_fold(CoeffFn::Const(1.0), |acc, f| acc.product(f));
        match closed {
            Some(h) => Integrand::Closed(h),
            None => Integrand::Product(factors.to_vec()),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Integrand::Closed(_))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Integrand::Closed(f) => f.eval(t),
            Integrand::Product(fs) => fs.iter().map(|f| f.eval(t)).product(),
        }
    }

    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Integrand::Closed(f) => f.integrate(a, b),
            Integrand::Product(_) => {
                if a > b {
                    return Err(Error::MisorderedInterval { a, b });
                }
                Ok(adaptive_simpson(|t| self.eval(t), a, b, QUADRATURE_TOL))
            }
        }
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Split into a few panels first so a single unlucky midpoint cannot
    // terminate the recursion early.
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == PANELS { b } else { lo + h };
            let (flo, fhi, fmid) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            simpson_step(&f, lo, hi, flo, fmid, fhi, whole, tol / PANELS as f64, 48)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

// ---------------------------------------------------------------------------
// Text syntax
// ---------------------------------------------------------------------------

impl fmt::Display for CoeffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffFn::Const(c) => write!(f, "const({c})"),
            CoeffFn::Power { c, n } => write!(f, "pow({c},{n})"),
            CoeffFn::Exp { c, a } => write!(f, "exp({c},{a})"),
            CoeffFn::Scale(k, inner) => match inner.as_ref() {
                CoeffFn::Sum(_) => write!(f, "{k}*({inner})"),
                _ => write!(f, "{k}*{inner}"),
            },
            CoeffFn::Sum(fs) if fs.is_empty() => write!(f, "const(0)"),
            CoeffFn::Sum(fs) => {
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    match g {
                        CoeffFn::Sum(_) => write!(f, "({g})")?,
                        _ => write!(f, "{g}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl FromStr for CoeffFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let f = p.expr()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(f)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::CoeffParse {
            input: self.src.to_string(),
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<CoeffFn> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(CoeffFn::scale(-1.0, self.term()?));
            } else {
                break;
            }
        }
        Ok(CoeffFn::sum(terms))
    }

    fn term(&mut self) -> Result<CoeffFn> {
        self.skip_ws();
        let starts_numeric = self
            .rest()
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '+');
        if starts_numeric {
            let k = self.number()?;
            self.expect('*')?;
            let inner = self.term()?;
            return Ok(CoeffFn::scale(k, inner));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<CoeffFn> {
        self.skip_ws();
        if self.eat('(') {
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(e);
        }
        let name_len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(self.rest().len());
        let name = &self.src[self.pos..self.pos + name_len];
        let at = self.pos;
        self.pos += name_len;
        match name {
            "const" => {
                self.expect('(')?;
                let c = self.number()?;
                self.expect(')')?;
                Ok(CoeffFn::Const(c))
            }
            "pow" => {
                self.expect('(')?;
                let c = self.number()?;
                self.expect(',')?;
                self.skip_ws();
                let n_pos = self.pos;
                let n = self.number()?;
                if n < 0.0 {
                    self.pos = n_pos;
                    return Err(self.error(format!("negative exponent {n} in pow(c,n)")));
                }
                if n.fract() != 0.0 || n > f64::from(u16::MAX) {
                    self.pos = n_pos;
                    return Err(self.error(format!("exponent {n} is not a small nonnegative integer")));
                }
                self.expect(')')?;
                Ok(CoeffFn::Power { c, n: n as u32 })
            }
            "exp" => {
                self.expect('(')?;
                let c = self.number()?;
                self.expect(',')?;
                let a = self.number()?;
                self.expect(')')?;
                Ok(CoeffFn::Exp { c, a })
            }
            "" => {
                self.pos = at;
                Err(self.error("expected const(..), pow(..), exp(..) or a scaled term"))
            }
            other => {
                self.pos = at;
                Err(self.error(format!("unknown function `{other}`")))
            }
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.rest()[..i];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += i;
                Ok(v)
            }
            _ => Err(self.error("expected a finite number")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn parse(s: &str) -> CoeffFn {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(CoeffFn::power(1.0, 2).eval(3.0), 9.0);
        assert_eq!(CoeffFn::constant(5.0).eval(0.7), 5.0);
        assert_relative_eq!(CoeffFn::exp(1.0, 1.0).eval(1.0), std::f64::consts::E);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(CoeffFn::power(1.0, 3).derivative(), CoeffFn::power(3.0, 2));
        assert_eq!(CoeffFn::constant(4.0).derivative(), CoeffFn::Const(0.0));
        assert_eq!(CoeffFn::exp(2.0, 3.0).derivative(), CoeffFn::exp(6.0, 3.0));
    }

    #[test]
    fn integrate_examples() {
        let e = std::f64::consts::E;
        assert_relative_eq!(CoeffFn::exp(1.0, 1.0).integrate(0.0, 1.0).unwrap(), e - 1.0, max_relative = 1e-15);
        assert_relative_eq!(CoeffFn::power(1.0, 2).integrate(0.0, 1.0).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        let f = CoeffFn::sum(vec![CoeffFn::constant(1.0), CoeffFn::power(2.0, 1)]);
        assert_relative_eq!(f.integrate(0.0, 2.0).unwrap(), 6.0, max_relative = 1e-15);
    }

    #[test]
    fn integrate_rejects_misordered() {
        let err = CoeffFn::constant(1.0).integrate(1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::MisorderedInterval { .. }));
    }

    #[test]
    fn square_examples() {
        assert_eq!(CoeffFn::power(1.0, 1).square(), Integrand::Closed(CoeffFn::power(1.0, 2)));
        assert_eq!(CoeffFn::exp(1.0, 1.0).square(), Integrand::Closed(CoeffFn::exp(1.0, 2.0)));
        assert_eq!(CoeffFn::constant(3.0).square(), Integrand::Closed(CoeffFn::Const(9.0)));
    }

    #[test]
    fn mixed_square_falls_back_to_quadrature() {
        // (t + e^t)² = t² + 2t e^t + e^{2t}; ∫₀¹ = 1/3 + 2 + (e² − 1)/2
        let f = parse("pow(1,1)+exp(1,1)");
        let sq = f.square();
        assert!(!sq.is_exact());
        let e2 = std::f64::consts::E.powi(2);
        let expected = 1.0 / 3.0 + 2.0 + (e2 - 1.0) / 2.0;
        assert!((sq.integrate(0.0, 1.0).unwrap() - expected).abs() < 1e-11);
    }

    #[test]
    fn exp_with_opposite_rates_cancels_to_constant() {
        let f = CoeffFn::exp(2.0, 1.5).product(&CoeffFn::exp(0.5, -1.5)).unwrap();
        assert_eq!(f.as_constant(), Some(1.0));
    }

    #[test]
    fn constant_detection() {
        assert_eq!(parse("pow(1,1)-pow(1,1)+const(2)").as_constant(), Some(2.0));
        assert_eq!(parse("exp(3,0)").as_constant(), Some(3.0));
        assert_eq!(parse("pow(3,0)+0*exp(1,1)").as_constant(), Some(3.0));
        assert_eq!(parse("exp(1,1)").as_constant(), None);
    }

    #[test]
    fn parse_syntax() {
        assert_eq!(parse("const(1)"), CoeffFn::Const(1.0));
        assert_eq!(parse(" pow( 2 , 3 ) "), CoeffFn::power(2.0, 3));
        assert_eq!(parse("exp(1,-1)"), CoeffFn::exp(1.0, -1.0));
        assert_eq!(parse("-0.5*pow(1,2)"), CoeffFn::scale(-0.5, CoeffFn::power(1.0, 2)));
        assert_eq!(
            parse("const(1)+2*(pow(1,1)+exp(1,1))"),
            CoeffFn::Sum(vec![
                CoeffFn::Const(1.0),
                CoeffFn::scale(2.0, CoeffFn::Sum(vec![CoeffFn::power(1.0, 1), CoeffFn::exp(1.0, 1.0)])),
            ])
        );
        assert_relative_eq!(parse("exp(1,1)-const(1)").eval(0.0), 0.0);
    }

    #[test]
    fn parse_rejects_bad_exponents() {
        let err = "pow(1,-2)".parse::<CoeffFn>().unwrap_err();
        assert!(err.to_string().contains("negative exponent"), "{err}");
        assert!("pow(1,1.5)".parse::<CoeffFn>().is_err());
        assert!("sin(1)".parse::<CoeffFn>().is_err());
        assert!("const(1)+".parse::<CoeffFn>().is_err());
        assert!("const(nan)".parse::<CoeffFn>().is_err());
        assert!("const(1) junk".parse::<CoeffFn>().is_err());
    }

    #[test]
    fn display_is_canonical() {
        let f = parse("2*(pow(1,1)+exp(1.5,-2))+const(-3)");
        assert_eq!(f.to_string(), "2*(pow(1,1)+exp(1.5,-2))+const(-3)");
        assert_eq!(parse(&f.to_string()), f);
    }

    fn atom() -> impl Strategy<Value = CoeffFn> {
        prop_oneof![
            (-3.0..3.0f64).prop_map(CoeffFn::Const),
            ((-3.0..3.0f64), 0u32..5).prop_map(|(c, n)| CoeffFn::Power { c, n }),
            ((-3.0..3.0f64), (-2.0..2.0f64)).prop_map(|(c, a)| CoeffFn::Exp { c, a }),
        ]
    }

    fn coeff() -> impl Strategy<Value = CoeffFn> {
        atom().prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(CoeffFn::Sum),
                ((-2.0..2.0f64), inner).prop_map(|(k, f)| CoeffFn::scale(k, f)),
            ]
        })
    }

    fn rel_close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn fundamental_theorem(f in coeff(), a in 0.0..1.0f64, w in 0.0..1.0f64) {
            let b = a + w;
            let lhs = f.derivative().integrate(a, b).unwrap();
            let rhs = f.eval(b) - f.eval(a);
            prop_assert!(rel_close(lhs, rhs, 1e-12), "{lhs} vs {rhs} for {f}");
        }

        #[test]
        fn integral_is_additive(f in coeff(), a in 0.0..1.0f64, w1 in 0.0..1.0f64, w2 in 0.0..1.0f64) {
            let (m, b) = (a + w1, a + w1 + w2);
            let split = f.integrate(a, m).unwrap() + f.integrate(m, b).unwrap();
            prop_assert!(rel_close(f.integrate(a, b).unwrap(), split, 1e-12));
        }

        #[test]
        fn square_matches_pointwise(f in coeff(), t in 0.0..2.0f64) {
            let v = f.eval(t);
            prop_assert!(rel_close(f.square().eval(t), v * v, 1e-12));
        }

        #[test]
        fn antiderivative_differentiates_back(f in coeff(), t in 0.0..2.0f64) {
            prop_assert!(rel_close(f.antiderivative().derivative().eval(t), f.eval(t), 1e-12));
        }

        #[test]
        fn text_round_trip(f in coeff(), t in 0.0..2.0f64) {
            let text = f.to_string();
            let back: CoeffFn = text.parse().unwrap();
            prop_assert_eq!(back.to_string(), text);
            prop_assert!(rel_close(back.eval(t), f.eval(t), 1e-12));
        }
    }
}
