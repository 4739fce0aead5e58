//! Unexpanded expressions in the term-manifest grammar, and covariant
//! differentiation of them through the ∇-formulas for ∘ and T.
//!
//! Grammar, one term per line (`#` starts a comment):
//!
//! ```text
//! term    := coeff '|' factor+
//! factor  := '<<' arg* '>>' genus
//! arg     := 'W1' | 'W2' | '^' name | '_' name | 'T(' arg ')' | 'T2(' arg ')'
//!          | '{' arg ('*' arg)+ '}' | 't' level [':' class]
//! ```
//!
//! `^a`/`_a` are the raised and lowered ends of a contracted index, and a
//! braced product `{x*y*z}` is the left-nested quantum product.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::bigphase::{apply_t, correlator, fresh_dummy, star, DummyId, Field, ScalarExpr, Slot, VField};
use crate::exactnum::{AffineForm, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arg {
    W(u8),
    Fixed(Field),
    Up(char),
    Down(char),
    T(Box<Arg>),
    /// ⟨⟨args γ^α⟩⟩₀ γ_α; two arguments give the quantum product.
    Star(Vec<Arg>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub genus: u32,
    pub args: Vec<Arg>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: AffineForm,
    pub factors: Vec<Factor>,
}

/// A sum of terms that still contain T and ∘.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymExpr {
    pub terms: Vec<Term>,
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::W(i) => write!(f, "W{i}"),
            Arg::Fixed(x) => match x.slot {
                Slot::Class(c) => write!(f, "t{}:{}", x.level, c),
                _ => write!(f, "t{}:?", x.level),
            },
            Arg::Up(c) => write!(f, "^{c}"),
            Arg::Down(c) => write!(f, "_{c}"),
            Arg::T(x) => match &**x {
                Arg::T(y) => write!(f, "T2({y})"),
                _ => write!(f, "T({x})"),
            },
            Arg::Star(args) => {
                let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "[{}]", parts.join(" "))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |", self.coeff)?;
        for fac in &self.factors {
            let parts: Vec<String> = fac.args.iter().map(|a| a.to_string()).collect();
            write!(f, " <<{}>>{}", parts.join(" "), fac.genus)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), String> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(format!("expected {tok:?} at column {}", self.pos + 1))
        }
    }

    fn number(&mut self) -> Result<u32, String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| format!("expected a number at column {}", start + 1))
    }

    fn name(&mut self) -> Result<char, String> {
        let c = *self.s.get(self.pos).ok_or("expected an index name")? as char;
        if !c.is_ascii_lowercase() {
            return Err(format!("bad index name {c:?}"));
        }
        self.pos += 1;
        Ok(c)
    }

    fn arg(&mut self) -> Result<Arg, String> {
        self.skip_ws();
        if self.eat("W") {
            let i = self.number()?;
            return match i {
                1 | 2 => Ok(Arg::W(i as u8)),
                _ => Err(format!("unknown field W{i}")),
            };
        }
        if self.eat("^") {
            return Ok(Arg::Up(self.name()?));
        }
        if self.eat("_") {
            return Ok(Arg::Down(self.name()?));
        }
        if self.eat("T2(") {
            let inner = self.arg()?;
            self.expect(")")?;
            return Ok(Arg::T(Box::new(Arg::T(Box::new(inner)))));
        }
        if self.eat("T(") {
            let inner = self.arg()?;
            self.expect(")")?;
            return Ok(Arg::T(Box::new(inner)));
        }
        if self.eat("{") {
            let mut acc = self.arg()?;
            let mut count = 1;
            while self.eat("*") {
                let next = self.arg()?;
                acc = Arg::Star(vec![acc, next]);
                count += 1;
            }
            self.expect("}")?;
            if count < 2 {
                return Err("a braced product needs at least two factors".into());
            }
            return Ok(acc);
        }
        if self.eat("t") {
            let level = self.number()?;
            let class = if self.eat(":") { self.number()? as u8 } else { 0 };
            return Ok(Arg::Fixed(Field::new(level, class)));
        }
        Err(format!("unexpected input at column {}", self.pos + 1))
    }

    fn factor(&mut self) -> Result<Factor, String> {
        self.expect("<<")?;
        let mut args = Vec::new();
        while !self.eat(">>") {
            args.push(self.arg()?);
        }
        let genus = self.number()?;
        Ok(Factor { genus, args })
    }
}

/// Parses one manifest line (without comment) into a term.
pub fn parse_term(line: &str) -> Result<Term, String> {
    let (coeff, body) = line.split_once('|').ok_or("missing '|'")?;
    let coeff: AffineForm = coeff.trim().parse().map_err(|e: crate::exactnum::ParseAffineError| e.to_string())?;
    let mut cur = Cursor { s: body.as_bytes(), pos: 0 };
    let mut factors = Vec::new();
    loop {
        cur.skip_ws();
        if cur.pos == cur.s.len() {
            break;
        }
        factors.push(cur.factor()?);
    }
    if factors.is_empty() {
        return Err("term has no correlator factor".into());
    }
    let term = Term { coeff, factors };
    check_indices(&term)?;
    Ok(term)
}

fn collect_indices(a: &Arg, out: &mut Vec<(char, bool)>) {
    match a {
        Arg::Up(c) => out.push((*c, true)),
        Arg::Down(c) => out.push((*c, false)),
        Arg::T(x) => collect_indices(x, out),
        Arg::Star(xs) => xs.iter().for_each(|x| collect_indices(x, out)),
        Arg::W(_) | Arg::Fixed(_) => {}
    }
}

fn check_indices(t: &Term) -> Result<(), String> {
    let mut seen = Vec::new();
    for f in &t.factors {
        for a in &f.args {
            collect_indices(a, &mut seen);
        }
    }
    let mut names: Vec<char> = seen.iter().map(|x| x.0).collect();
    names.sort_unstable();
    names.dedup();
    for n in names {
        let ups = seen.iter().filter(|x| **x == (n, true)).count();
        let downs = seen.iter().filter(|x| **x == (n, false)).count();
        if (ups, downs) != (1, 1) {
            return Err(format!("index {n} must appear once raised and once lowered"));
        }
    }
    Ok(())
}

/// Parses a whole manifest. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Result<SymExpr, ManifestError> {
    let mut terms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        terms.push(parse_term(line).map_err(|message| ManifestError { line: i + 1, message })?);
    }
    Ok(SymExpr { terms })
}

impl Arg {
    fn substitute(&self, w1: &Arg, w2: &Arg) -> Arg {
        match self {
            Arg::W(1) => w1.clone(),
            Arg::W(2) => w2.clone(),
            Arg::T(x) => Arg::T(Box::new(x.substitute(w1, w2))),
            Arg::Star(xs) => Arg::Star(xs.iter().map(|x| x.substitute(w1, w2)).collect()),
            other => other.clone(),
        }
    }

    /// ∇_v applied to this argument, as a signed list of arguments.
    fn covariant(&self, v: &Arg) -> Vec<(i64, Arg)> {
        match self {
            Arg::W(_) | Arg::Fixed(_) | Arg::Up(_) | Arg::Down(_) => Vec::new(),
            Arg::T(x) => {
                let mut out: Vec<(i64, Arg)> =
                    x.covariant(v).into_iter().map(|(c, y)| (c, Arg::T(Box::new(y)))).collect();
                out.push((-1, Arg::Star(vec![v.clone(), (**x).clone()])));
                out
            }
            Arg::Star(xs) => {
                let mut out = Vec::new();
                for (i, x) in xs.iter().enumerate() {
                    for (c, y) in x.covariant(v) {
                        let mut next = xs.clone();
                        next[i] = y;
                        out.push((c, Arg::Star(next)));
                    }
                }
                let mut grown = xs.clone();
                grown.push(v.clone());
                out.push((1, Arg::Star(grown)));
                out
            }
        }
    }
}

impl Factor {
    fn covariant(&self, v: &Arg) -> Vec<(i64, Factor)> {
        let mut grown = self.args.clone();
        grown.push(v.clone());
        let mut out = vec![(1, Factor { genus: self.genus, args: grown })];
        for (i, a) in self.args.iter().enumerate() {
            for (c, y) in a.covariant(v) {
                let mut args = self.args.clone();
                args[i] = y;
                out.push((c, Factor { genus: self.genus, args }));
            }
        }
        out
    }
}

impl SymExpr {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if some argument is still a `W1`/`W2` placeholder.
    pub fn has_placeholders(&self) -> bool {
        fn walk(a: &Arg) -> bool {
            match a {
                Arg::W(_) => true,
                Arg::T(x) => walk(x),
                Arg::Star(xs) => xs.iter().any(walk),
                _ => false,
            }
        }
        self.terms.iter().flat_map(|t| &t.factors).flat_map(|f| &f.args).any(walk)
    }

    /// Replaces `W1`, `W2` by the given arguments.
    pub fn instantiate(&self, w1: &Arg, w2: &Arg) -> SymExpr {
        SymExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.clone(),
                    factors: t
                        .factors
                        .iter()
                        .map(|f| Factor { genus: f.genus, args: f.args.iter().map(|a| a.substitute(w1, w2)).collect() })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> SymExpr {
        SymExpr { terms: self.terms.iter().map(|t| Term { coeff: t.coeff.scale(c), factors: t.factors.clone() }).collect() }
    }

    pub fn concat(&self, other: &SymExpr) -> SymExpr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SymExpr { terms }
    }

    /// Covariant derivative along the parallel field `dir`, through the
    /// ∇-formulas for T and ∘ (fields W and γ are parallel).
    pub fn covariant(&self, dir: Field) -> SymExpr {
        let v = Arg::Fixed(dir);
        let mut terms = Vec::new();
        for t in &self.terms {
            for (i, f) in t.factors.iter().enumerate() {
                for (c, g) in f.covariant(&v) {
                    let mut factors = t.factors.clone();
                    factors[i] = g;
                    terms.push(Term { coeff: t.coeff.scale(&Rational::integer(c)), factors });
                }
            }
        }
        SymExpr { terms }
    }

    /// Expands T and ∘ into correlators of basis fields. `W1`/`W2` must have
    /// been instantiated.
    pub fn expand(&self) -> ScalarExpr {
        let parts: Vec<ScalarExpr> = self.terms.iter().map(expand_term).collect();
        ScalarExpr::sum(parts.iter())
    }
}

fn expand_arg(a: &Arg, names: &mut HashMap<char, DummyId>) -> VField {
    let mut dummy = |c: char| *names.entry(c).or_insert_with(fresh_dummy);
    match a {
        Arg::W(i) => panic!("W{i} left uninstantiated"),
        Arg::Fixed(f) => VField::basis(*f),
        Arg::Up(c) => VField::basis(Field { level: 0, slot: Slot::Up(dummy(*c)) }),
        Arg::Down(c) => VField::basis(Field { level: 0, slot: Slot::Down(dummy(*c)) }),
        Arg::T(x) => apply_t(&expand_arg(x, names)),
        Arg::Star(xs) => {
            let args: Vec<VField> = xs.iter().map(|x| expand_arg(x, names)).collect();
            star(&args)
        }
    }
}

fn expand_term(t: &Term) -> ScalarExpr {
    let mut names = HashMap::new();
    let mut acc = ScalarExpr::one();
    for f in &t.factors {
        let args: Vec<VField> = f.args.iter().map(|a| expand_arg(a, &mut names)).collect();
        acc = acc.mul(&correlator(f.genus, &args));
    }
    acc.scale(&t.coeff)
}
