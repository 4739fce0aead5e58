//! Exact rationals, affine forms over the ansatz symbols, and dense linear
//! solving over ℚ.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// An exact rational number, always in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Builds `num/den`. Panics if `den` is zero.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Rational(BigRational::new(num, den))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Rational::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| err())?;
        let den: BigInt = den.parse().map_err(|_| err())?;
        if den.is_zero() || den.is_negative() {
            return Err(err());
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$m(&rhs.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$m(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// Identifier of an ansatz symbol `a_i`.
pub type Symbol = u16;

/// `Σ c_i a_i + constant`, with zero coefficients never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineForm {
    coeffs: BTreeMap<Symbol, Rational>,
    constant: Rational,
}

impl AffineForm {
    pub fn zero() -> Self {
        AffineForm::default()
    }

    pub fn constant(c: Rational) -> Self {
        AffineForm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn symbol(i: Symbol) -> Self {
        Self::term(i, Rational::one())
    }

    pub fn term(i: Symbol, c: Rational) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(i, c);
        }
        AffineForm { coeffs, constant: Rational::zero() }
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, i: Symbol) -> Rational {
        self.coeffs.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (Symbol, &Rational)> {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    /// True when no symbol appears.
    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, i: Symbol, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(i).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&i);
        }
    }

    pub fn add_constant(&mut self, c: &Rational) {
        self.constant += c;
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &AffineForm, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (k, v) in &other.coeffs {
            self.add_term(*k, &(v * c));
        }
        self.constant += &(&other.constant * c);
    }

    pub fn scale(&self, c: &Rational) -> AffineForm {
        if c.is_zero() {
            return AffineForm::zero();
        }
        AffineForm {
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v * c)).collect(),
            constant: &self.constant * c,
        }
    }

    /// Replaces every symbol that has an entry in `map` by its form.
    pub fn substitute(&self, map: &BTreeMap<Symbol, AffineForm>) -> AffineForm {
        let mut out = AffineForm::constant(self.constant.clone());
        for (k, v) in &self.coeffs {
            match map.get(k) {
                Some(f) => out.add_scaled(f, v),
                None => out.add_term(*k, v),
            }
        }
        out
    }
}

impl Add<&AffineForm> for &AffineForm {
    type Output = AffineForm;
    fn add(self, rhs: &AffineForm) -> AffineForm {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl Sub<&AffineForm> for &AffineForm {
    type Output = AffineForm;
    fn sub(self, rhs: &AffineForm) -> AffineForm {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::integer(-1));
        out
    }
}

impl AddAssign<&AffineForm> for AffineForm {
    fn add_assign(&mut self, rhs: &AffineForm) {
        self.add_scaled(rhs, &Rational::one());
    }
}

impl Neg for &AffineForm {
    type Output = AffineForm;
    fn neg(self) -> AffineForm {
        self.scale(&Rational::integer(-1))
    }
}

impl From<Rational> for AffineForm {
    fn from(c: Rational) -> Self {
        AffineForm::constant(c)
    }
}

impl fmt::Display for AffineForm {
    /// Renders as e.g. `1/288*a2 + a104 - 77/414720`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(bool, String)> = Vec::new();
        for (k, c) in &self.coeffs {
            let mag = c.abs();
            let body = if mag.is_one() { format!("a{k}") } else { format!("{mag}*a{k}") };
            parts.push((c.is_negative(), body));
        }
        if !self.constant.is_zero() {
            parts.push((self.constant.is_negative(), self.constant.abs().to_string()));
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        for (i, (neg, body)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid affine form {text:?}: {reason}")]
pub struct ParseAffineError {
    pub text: String,
    pub reason: String,
}

impl FromStr for AffineForm {
    type Err = ParseAffineError;

    /// Accepts the `Display` grammar: signed terms `c*aK`, `aK`, or `c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ParseAffineError { text: s.to_string(), reason: reason.to_string() };
        let mut out = AffineForm::zero();
        let mut rest = s.trim();
        if rest.is_empty() {
            return Err(err("empty"));
        }
        let mut first = true;
        while !rest.is_empty() {
            let mut negative = false;
            if let Some(r) = rest.strip_prefix('-') {
                negative = true;
                rest = r.trim_start();
            } else if let Some(r) = rest.strip_prefix('+') {
                rest = r.trim_start();
            } else if !first {
                return Err(err("missing sign between terms"));
            }
            first = false;
            let end = rest.find([' ', '+', '-']).unwrap_or(rest.len());
            let tok = &rest[..end];
            rest = rest[end..].trim_start();
            let (coef, sym) = match tok.split_once('*') {
                Some((c, a)) => (Some(c), Some(a)),
                None if tok.starts_with('a') => (None, Some(tok)),
                None => (Some(tok), None),
            };
            let mut c = match coef {
                Some(c) => c.parse::<Rational>().map_err(|e| err(&e.to_string()))?,
                None => Rational::one(),
            };
            if negative {
                c = -c;
            }
            match sym {
                Some(a) => {
                    let idx = a
                        .strip_prefix('a')
                        .and_then(|n| n.parse::<Symbol>().ok())
                        .ok_or_else(|| err("bad symbol"))?;
                    out.add_term(idx, &c);
                }
                None => out.add_constant(&c),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("the system has no solution")]
    InconsistentSystem,
    #[error("symbol a{0} is determined by the system and cannot be kept free")]
    FreeSymbolPivoted(Symbol),
}

/// Result of [`LinearSystem::solve_parametric`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Every pivot symbol expressed through the non-pivot symbols.
    pub values: BTreeMap<Symbol, AffineForm>,
    /// Non-pivot symbols, the requested one included.
    pub free: Vec<Symbol>,
}

/// Relations, each read as `form = 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearSystem {
    pub relations: Vec<AffineForm>,
}

struct Reduced {
    /// Rows in reduced echelon form, paired with their pivot column.
    rows: Vec<(usize, Vec<Rational>, Rational)>,
    inconsistent: bool,
}

impl LinearSystem {
    pub fn new(relations: Vec<AffineForm>) -> Self {
        LinearSystem { relations }
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    fn symbols(&self) -> Vec<Symbol> {
        let mut all: Vec<Symbol> = self.relations.iter().flat_map(|r| r.symbols()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Gauss-Jordan elimination with the given column order, first nonzero
    /// entry as pivot.
    fn reduce(&self, columns: &[Symbol]) -> Reduced {
        let index: BTreeMap<Symbol, usize> = columns.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut rows: Vec<(Vec<Rational>, Rational)> = self
            .relations
            .iter()
            .map(|r| {
                let mut v = vec![Rational::zero(); columns.len()];
                for (k, c) in r.coeffs() {
                    v[index[&k]] = c.clone();
                }
                (v, r.constant_part().clone())
            })
            .collect();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..columns.len() {
            let Some(found) = (next..rows.len()).find(|&r| !rows[r].0[col].is_zero()) else {
                continue;
            };
            rows.swap(next, found);
            let inv = rows[next].0[col].recip();
            let (row, c) = &mut rows[next];
            for x in row.iter_mut().skip(col) {
                *x = &*x * &inv;
            }
            *c = &*c * &inv;
            let (pivot_row, pivot_c) = rows[next].clone();
            for (r, (row, c)) in rows.iter_mut().enumerate() {
                if r == next || row[col].is_zero() {
                    continue;
                }
                let factor = row[col].clone();
                for j in col..columns.len() {
                    if !pivot_row[j].is_zero() {
                        row[j] -= &(&pivot_row[j] * &factor);
                    }
                }
                *c -= &(&pivot_c * &factor);
            }
            pivots.push(col);
            next += 1;
        }
        let inconsistent = rows[next..].iter().any(|(_, c)| !c.is_zero());
        let reduced = rows
            .into_iter()
            .zip(pivots)
            .map(|((row, c), p)| (p, row, c))
            .collect();
        Reduced { rows: reduced, inconsistent }
    }

    /// Rank of the homogeneous part over ℚ.
    pub fn rank(&self) -> usize {
        let cols = self.symbols();
        self.reduce(&cols).rows.len()
    }

    /// Solves for every determined symbol, keeping `free` as a parameter.
    pub fn solve_parametric(&self, free: Symbol) -> Result<Solution, SolveError> {
        let mut cols: Vec<Symbol> = self.symbols().into_iter().filter(|s| *s != free).collect();
        cols.push(free);
        let red = self.reduce(&cols);
        if red.inconsistent {
            return Err(SolveError::InconsistentSystem);
        }
        let pivot_cols: Vec<usize> = red.rows.iter().map(|(p, _, _)| *p).collect();
        if pivot_cols.contains(&(cols.len() - 1)) {
            return Err(SolveError::FreeSymbolPivoted(free));
        }
        let mut values = BTreeMap::new();
        for (p, row, c) in &red.rows {
            let mut form = AffineForm::constant(-c);
            for (j, x) in row.iter().enumerate() {
                if j != *p && !x.is_zero() {
                    form.add_term(cols[j], &-x);
                }
            }
            values.insert(cols[*p], form);
        }
        let mut free_syms: Vec<Symbol> =
            (0..cols.len()).filter(|j| !pivot_cols.contains(j)).map(|j| cols[j]).collect();
        if !free_syms.contains(&free) {
            free_syms.push(free);
        }
        free_syms.sort_unstable();
        Ok(Solution { values, free: free_syms })
    }
}
