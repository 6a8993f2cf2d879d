//! Exact sparse multivariate polynomials with rational coefficients.
//!
//! All arithmetic is exact; the only floating-point path is [`Polynomial::eval_f64`].
//! Terms are kept in a `BTreeMap` under graded-lexicographic monomial order so
//! every traversal (printing, serialisation, linear solves over monomials) is
//! deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponent multi-index, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn constant(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn var(arity: usize, index: usize) -> Self {
        let mut e = vec![0; arity];
        e[index] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

// Graded lexicographic order: sort by total degree, then lexicographically.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Invariant: no stored term has a zero coefficient, and every exponent
/// multi-index has length equal to the arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, BigRational::one())
    }

    pub fn constant(arity: usize, c: BigRational) -> Self {
        let mut p = Self::zero(arity);
        if !c.is_zero() {
            p.terms.insert(Monomial::constant(arity), c);
        }
        p
    }

    pub fn from_int(arity: usize, n: i64) -> Self {
        Self::constant(arity, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn var(arity: usize, index: usize) -> Self {
        assert!(index < arity, "variable index out of range");
        let mut p = Self::zero(arity);
        p.terms.insert(Monomial::var(arity, index), BigRational::one());
        p
    }

    pub fn monomial(arity: usize, exps: &[u32], coeff: BigRational) -> Self {
        assert_eq!(exps.len(), arity);
        let mut p = Self::zero(arity);
        if !coeff.is_zero() {
            p.terms.insert(Monomial(exps.to_vec()), coeff);
        }
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total_degree()).max()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    fn insert_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = Polynomial::zero(self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.arity);
        }
        let mut out = Polynomial::zero(self.arity);
        for (m, k) in &self.terms {
            out.terms.insert(m.clone(), k * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::one(self.arity);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Result<Polynomial> {
        if var >= self.arity {
            return Err(Error::IndexOutOfRange {
                index: var,
                arity: self.arity,
            });
        }
        let mut out = Polynomial::zero(self.arity);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] = e - 1;
            out.insert_term(
                Monomial(exps),
                c * BigRational::from_integer(BigInt::from(e)),
            );
        }
        Ok(out)
    }

    /// All partial derivatives, in variable order.
    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.arity).map(|i| self.diff(i).unwrap()).collect()
    }

    /// Floating evaluation.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= point[i].powi(e as i32);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    t *= &point[i];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Exact composition: substitute `subs[i]` for variable `i`.
    ///
    /// All substituted polynomials must share one arity, which becomes the
    /// arity of the result. This is the pullback used to expand relations
    /// through the orbit map.
    pub fn substitute(&self, subs: &[Polynomial]) -> Result<Polynomial> {
        if subs.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: subs.len(),
            });
        }
        let target = subs.first().map(|p| p.arity).unwrap_or(0);
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&subs[i].pow(e));
                }
            }
            out = out.add(&t);
        }
        Ok(out)
    }

    /// Split into homogeneous components keyed by total degree.
    pub fn homogeneous_components(&self) -> BTreeMap<u32, Polynomial> {
        let mut comps: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            comps
                .entry(m.total_degree())
                .or_insert_with(|| Polynomial::zero(self.arity))
                .terms
                .insert(m.clone(), c.clone());
        }
        comps
    }

    /// True if every term has the same total degree (zero counts as homogeneous).
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous_components().len() <= 1
    }

    /// Parse an expression over the named variables.
    ///
    /// Grammar: `expr := ('-')? term (('+'|'-') term)*; term := factor ('*' factor)*;
    /// factor := base ('^' uint)?; base := rational | var | '(' expr ')'`.
    /// Whitespace is insignificant; there is no implicit multiplication.
    pub fn parse(text: &str, names: &[&str]) -> Result<Polynomial> {
        Parser::new(text, names).parse()
    }

    /// Render with the given variable names; `parse` of the result is the identity.
    pub fn display(&self, names: &[&str]) -> String {
        assert_eq!(names.len(), self.arity);
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        // Highest monomial first reads like handwritten algebra.
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || m.is_constant() {
                factors.push(format_rational(&abs));
            }
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[i].to_string()),
                    _ => factors.push(format!("{}^{}", names[i], e)),
                }
            }
            let _ = write!(out, "{}", factors.join("*"));
        }
        out
    }
}

/// Flattened f64-coefficient view of a polynomial for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    terms: Vec<(Vec<u32>, f64)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    t *= x[i].powi(e as i32);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Polynomial {
    /// Compile to the flattened f64 form.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.0.clone(), c.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }
}

fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    names: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, names: &'a [&'a str]) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            names,
        }
    }

    fn parse(mut self) -> Result<Polynomial> {
        let p = self.expr()?;
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(p)
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let negate = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        while let Some(op) = self.peek() {
            match op {
                b'+' => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                b'-' => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.err("expected exponent"));
            }
            let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
            let e: u32 = digits
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'-' => self.rational(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.variable(),
            _ => Err(self.err("expected rational, variable or `(`")),
        }
    }

    fn rational(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digit_start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digit_start {
            return Err(self.err("expected integer"));
        }
        let numer: BigInt = std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .unwrap();
        let denom = if self.bytes.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let dstart = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == dstart {
                return Err(self.err("expected denominator"));
            }
            let d: BigInt = std::str::from_utf8(&self.bytes[dstart..self.pos])
                .unwrap()
                .parse()
                .unwrap();
            if d.is_zero() {
                return Err(self.err("zero denominator"));
            }
            d
        } else {
            BigInt::one()
        };
        Ok(Polynomial::constant(
            self.names.len(),
            BigRational::new(numer, denom),
        ))
    }

    fn variable(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match self.names.iter().position(|n| *n == name) {
            Some(i) => Ok(Polynomial::var(self.names.len(), i)),
            None => Err(Error::UnknownVariable {
                pos: start,
                name: name.to_string(),
            }),
        }
    }
}
