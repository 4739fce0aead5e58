//! Vector fields and correlator scalars on the big phase space, evaluated at
//! the origin against a target's Gromov–Witten invariants.
//!
//! Operators (T, the quantum product, τ±) are expanded eagerly, so every
//! [`ScalarExpr`] is a sum of monomials whose factors are correlators of
//! basis fields. Contracted index pairs γ^α ⊗ γ_α are carried as dummy
//! slots and only summed over the basis at evaluation time.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::exactnum::{AffineForm, Rational};
use crate::p1_gw::{Insertion, P1Oracle};
use crate::point_gw::PointOracle;

pub type DummyId = u32;

static NEXT_DUMMY: AtomicU32 = AtomicU32::new(1);

/// Allocates an index name never used before in this process.
pub fn fresh_dummy() -> DummyId {
    NEXT_DUMMY.fetch_add(1, Ordering::Relaxed)
}

/// The cohomology slot of a basis field: a concrete class, or one end of a
/// contracted pair (`Up` is γ^α, `Down` is γ_α).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Class(u8),
    Up(DummyId),
    Down(DummyId),
}

/// The parallel field τ_level(γ_slot).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Field {
    pub level: u32,
    pub slot: Slot,
}

impl Field {
    pub const fn new(level: u32, class: u8) -> Self {
        Field { level, slot: Slot::Class(class) }
    }

    pub fn dummy(&self) -> Option<DummyId> {
        match self.slot {
            Slot::Up(d) | Slot::Down(d) => Some(d),
            Slot::Class(_) => None,
        }
    }

    fn shifted(&self, s: i32) -> Option<Field> {
        let level = self.level as i64 + s as i64;
        (level >= 0).then_some(Field { level: level as u32, slot: self.slot })
    }
}

/// A correlator ⟨⟨args⟩⟩_genus; arguments are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub genus: u32,
    pub args: Vec<Field>,
}

impl Node {
    pub fn new(genus: u32, mut args: Vec<Field>) -> Self {
        args.sort_unstable();
        Node { genus, args }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: AffineForm,
    /// Sorted, so equal products compare equal.
    pub nodes: Vec<Node>,
}

/// A finite sum of monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScalarExpr {
    pub terms: Vec<Monomial>,
}

/// Accumulates monomials, merging identical node products.
#[derive(Default)]
struct Collector {
    index: HashMap<Vec<Node>, usize>,
    terms: Vec<Monomial>,
}

impl Collector {
    fn push(&mut self, coeff: AffineForm, mut nodes: Vec<Node>) {
        if coeff.is_zero() {
            return;
        }
        nodes.sort_unstable();
        match self.index.get(&nodes) {
            Some(&i) => self.terms[i].coeff += &coeff,
            None => {
                self.index.insert(nodes.clone(), self.terms.len());
                self.terms.push(Monomial { coeff, nodes });
            }
        }
    }

    fn finish(self) -> ScalarExpr {
        ScalarExpr { terms: self.terms.into_iter().filter(|m| !m.coeff.is_zero()).collect() }
    }
}

fn mul_coeff(a: &AffineForm, b: &AffineForm) -> AffineForm {
    if a.is_constant() {
        b.scale(a.constant_part())
    } else if b.is_constant() {
        a.scale(b.constant_part())
    } else {
        panic!("product of two symbolic coefficients is not affine: ({a}) * ({b})")
    }
}

impl ScalarExpr {
    pub fn zero() -> Self {
        ScalarExpr::default()
    }

    pub fn constant(c: AffineForm) -> Self {
        let mut col = Collector::default();
        col.push(c, Vec::new());
        col.finish()
    }

    pub fn one() -> Self {
        Self::constant(AffineForm::constant(Rational::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn node(node: Node) -> Self {
        ScalarExpr { terms: vec![Monomial { coeff: AffineForm::constant(Rational::one()), nodes: vec![node] }] }
    }

    pub fn scale(&self, c: &AffineForm) -> ScalarExpr {
        let mut col = Collector::default();
        for m in &self.terms {
            col.push(mul_coeff(&m.coeff, c), m.nodes.clone());
        }
        col.finish()
    }

    pub fn add(&self, other: &ScalarExpr) -> ScalarExpr {
        Self::sum([self, other])
    }

    pub fn sub(&self, other: &ScalarExpr) -> ScalarExpr {
        self.add(&other.scale(&AffineForm::constant(Rational::integer(-1))))
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a ScalarExpr>>(parts: I) -> ScalarExpr {
        let mut col = Collector::default();
        for p in parts {
            for m in &p.terms {
                col.push(m.coeff.clone(), m.nodes.clone());
            }
        }
        col.finish()
    }

    /// Panics if both sides carry ansatz symbols (the result would not be
    /// affine).
    pub fn mul(&self, other: &ScalarExpr) -> ScalarExpr {
        let mut col = Collector::default();
        for a in &self.terms {
            for b in &other.terms {
                let mut nodes = a.nodes.clone();
                nodes.extend(b.nodes.iter().cloned());
                col.push(mul_coeff(&a.coeff, &b.coeff), nodes);
            }
        }
        col.finish()
    }

    /// Directional derivative along a parallel coordinate field: Leibniz
    /// rule, each correlator gaining `dir` as an extra insertion.
    pub fn differentiate(&self, dir: Field) -> ScalarExpr {
        assert!(dir.dummy().is_none(), "derivative direction must be a concrete field");
        let mut col = Collector::default();
        for m in &self.terms {
            for i in 0..m.nodes.len() {
                let mut nodes = m.nodes.clone();
                let mut args = nodes[i].args.clone();
                args.push(dir);
                nodes[i] = Node::new(nodes[i].genus, args);
                col.push(m.coeff.clone(), nodes);
            }
        }
        col.finish()
    }

    /// Monomials sorted by their node products.
    pub fn canonical(&self) -> ScalarExpr {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.nodes.cmp(&b.nodes));
        ScalarExpr { terms }
    }

    fn bind(&self, dummy: DummyId, up: u8, down: u8) -> ScalarExpr {
        let mut col = Collector::default();
        for m in &self.terms {
            let nodes = m
                .nodes
                .iter()
                .map(|n| Node::new(n.genus, n.args.iter().map(|f| bind_field(f, dummy, up, down)).collect()))
                .collect();
            col.push(m.coeff.clone(), nodes);
        }
        col.finish()
    }

    fn rename(&self, map: &HashMap<DummyId, DummyId>) -> ScalarExpr {
        ScalarExpr {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: m.coeff.clone(),
                    nodes: m
                        .nodes
                        .iter()
                        .map(|n| Node::new(n.genus, n.args.iter().map(|f| rename_field(f, map)).collect()))
                        .collect(),
                })
                .collect(),
        }
    }
}

fn rename_field(f: &Field, map: &HashMap<DummyId, DummyId>) -> Field {
    let slot = match f.slot {
        Slot::Up(d) => Slot::Up(*map.get(&d).unwrap_or(&d)),
        Slot::Down(d) => Slot::Down(*map.get(&d).unwrap_or(&d)),
        s => s,
    };
    Field { level: f.level, slot }
}

fn bind_field(f: &Field, dummy: DummyId, up: u8, down: u8) -> Field {
    let slot = match f.slot {
        Slot::Up(d) if d == dummy => Slot::Class(up),
        Slot::Down(d) if d == dummy => Slot::Class(down),
        s => s,
    };
    Field { level: f.level, slot }
}

/// Canonical text: dummies renamed `i1, i2, …` per monomial in order of
/// first appearance.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let mut names: HashMap<DummyId, usize> = HashMap::new();
            let mut name = |d: DummyId| {
                let next = names.len() + 1;
                *names.entry(d).or_insert(next)
            };
            write!(f, "{} |", m.coeff)?;
            for n in &m.nodes {
                write!(f, " <<")?;
                for (j, a) in n.args.iter().enumerate() {
                    if j > 0 {
                        write!(f, " ")?;
                    }
                    match a.slot {
                        Slot::Class(c) => write!(f, "t{}:{}", a.level, c)?,
                        Slot::Up(d) => write!(f, "t{}:^i{}", a.level, name(d))?,
                        Slot::Down(d) => write!(f, "t{}:_i{}", a.level, name(d))?,
                    }
                }
                write!(f, ">>{}", n.genus)?;
            }
        }
        Ok(())
    }
}

/// One summand f·X of a vector field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VTerm {
    pub coeff: ScalarExpr,
    pub field: Field,
}

/// A formal vector field Σ f_i X_i with scalar coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VField {
    pub terms: Vec<VTerm>,
}

impl VField {
    pub fn zero() -> Self {
        VField::default()
    }

    pub fn basis(field: Field) -> Self {
        VField { terms: vec![VTerm { coeff: ScalarExpr::one(), field }] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, coeff: ScalarExpr, field: Field) {
        if !coeff.is_zero() {
            self.terms.push(VTerm { coeff, field });
        }
    }

    pub fn add(&self, other: &VField) -> VField {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coeff.clone(), t.field);
        }
        out
    }

    pub fn scale(&self, c: &ScalarExpr) -> VField {
        let mut out = VField::zero();
        for t in &self.terms {
            out.push(t.coeff.mul(c), t.field);
        }
        out
    }

    /// Dummies paired inside a single term: private to this field.
    fn internal_dummies(&self) -> Vec<DummyId> {
        let mut out = Vec::new();
        for t in &self.terms {
            let mut counts: BTreeMap<DummyId, usize> = BTreeMap::new();
            for m in &t.coeff.terms {
                for n in &m.nodes {
                    for a in &n.args {
                        if let Some(d) = a.dummy() {
                            *counts.entry(d).or_default() += 1;
                        }
                    }
                }
                if let Some(d) = t.field.dummy() {
                    *counts.entry(d).or_default() += 1;
                }
                out.extend(counts.iter().filter(|(_, c)| **c >= 2).map(|(d, _)| *d));
                counts.clear();
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// A copy whose private dummies are renamed to fresh ones.
    pub fn refresh_dummies(&self) -> VField {
        let map: HashMap<DummyId, DummyId> = self.internal_dummies().into_iter().map(|d| (d, fresh_dummy())).collect();
        if map.is_empty() {
            return self.clone();
        }
        VField {
            terms: self
                .terms
                .iter()
                .map(|t| VTerm { coeff: t.coeff.rename(&map), field: rename_field(&t.field, &map) })
                .collect(),
        }
    }
}

/// τ₊ (`s = 1`) or τ₋ (`s = −1`); fields pushed below level 0 vanish.
pub fn tau_shift(v: &VField, s: i32) -> VField {
    let mut out = VField::zero();
    for t in &v.terms {
        if let Some(f) = t.field.shifted(s) {
            out.push(t.coeff.clone(), f);
        }
    }
    out
}

fn separate(args: &[VField]) -> Vec<VField> {
    let mut used: Vec<DummyId> = Vec::new();
    args.iter()
        .map(|a| {
            let own = a.internal_dummies();
            let out = if own.iter().any(|d| used.contains(d)) { a.refresh_dummies() } else { a.clone() };
            used.extend(out.internal_dummies());
            out
        })
        .collect()
}

/// ⟨⟨v₁ ⋯ v_k⟩⟩_g, expanded multilinearly.
pub fn correlator(genus: u32, args: &[VField]) -> ScalarExpr {
    let args = separate(args);
    let mut col = Collector::default();
    let mut idx = vec![0usize; args.len()];
    if args.iter().any(|a| a.is_zero()) {
        return ScalarExpr::zero();
    }
    loop {
        let mut coeff = ScalarExpr::one();
        let mut fields = Vec::with_capacity(args.len());
        for (a, &i) in args.iter().zip(&idx) {
            coeff = coeff.mul(&a.terms[i].coeff);
            fields.push(a.terms[i].field);
        }
        let node = Node::new(genus, fields);
        for m in coeff.terms {
            let mut nodes = m.nodes;
            nodes.push(node.clone());
            col.push(m.coeff, nodes);
        }
        let mut pos = 0;
        loop {
            if pos == args.len() {
                return col.finish();
            }
            idx[pos] += 1;
            if idx[pos] < args[pos].terms.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// ⟨⟨v₁ ⋯ v_k γ^α⟩⟩₀ γ_α. With two arguments this is the quantum product.
pub fn star(args: &[VField]) -> VField {
    let a = fresh_dummy();
    let mut all = args.to_vec();
    all.push(VField::basis(Field { level: 0, slot: Slot::Up(a) }));
    let coeff = correlator(0, &all);
    let mut out = VField::zero();
    out.push(coeff, Field { level: 0, slot: Slot::Down(a) });
    out
}

pub fn quantum_product(v1: &VField, v2: &VField) -> VField {
    star(&[v1.clone(), v2.clone()])
}

/// T(v) = τ₊(v) − ⟨⟨v γ^α⟩⟩₀ γ_α.
pub fn apply_t(v: &VField) -> VField {
    let minus = ScalarExpr::constant(AffineForm::constant(Rational::integer(-1)));
    tau_shift(v, 1).add(&star(&[v.clone()]).scale(&minus))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetKind {
    Point,
    P1,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Point => write!(f, "point"),
            TargetKind::P1 => write!(f, "P1"),
        }
    }
}

#[derive(Clone)]
enum Oracle {
    Point(Arc<PointOracle>),
    P1(Arc<P1Oracle>),
}

/// A finite-rank target: intersection form plus an invariant oracle.
#[derive(Clone)]
pub struct TargetModel {
    oracle: Oracle,
    pub max_genus: u32,
    pub max_degree: u32,
    /// (class on the γ^α slot, class on the γ_α slot, η^{αβ}).
    pairs: Vec<(u8, u8, Rational)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("degree {requested} exceeds the {target} cap of {max}")]
    DegreeOverflow { target: TargetKind, requested: u32, max: u32 },
    #[error("genus {requested} exceeds the {target} cap of {max}")]
    GenusOverflow { target: TargetKind, requested: u32, max: u32 },
    #[error("class {class} is not a basis index of the {target} target")]
    BadClass { target: TargetKind, class: u8 },
    #[error("contracted index appears {count} times in one monomial")]
    UnbalancedDummy { count: usize },
}

impl TargetModel {
    pub fn point(oracle: Arc<PointOracle>, max_genus: u32) -> Self {
        TargetModel {
            oracle: Oracle::Point(oracle),
            max_genus,
            max_degree: 0,
            pairs: vec![(0, 0, Rational::one())],
        }
    }

    pub fn p1(oracle: Arc<P1Oracle>, max_genus: u32, max_degree: u32) -> Self {
        TargetModel {
            oracle: Oracle::P1(oracle),
            max_genus,
            max_degree,
            pairs: vec![(1, 0, Rational::one()), (0, 1, Rational::one())],
        }
    }

    pub fn kind(&self) -> TargetKind {
        match self.oracle {
            Oracle::Point(_) => TargetKind::Point,
            Oracle::P1(_) => TargetKind::P1,
        }
    }

    pub fn rank(&self) -> usize {
        match self.kind() {
            TargetKind::Point => 1,
            TargetKind::P1 => 2,
        }
    }

    /// η_{ab} = ∫ γ_a ∪ γ_b.
    pub fn eta(&self, a: u8, b: u8) -> Rational {
        let top = (self.rank() - 1) as u8;
        if a + b == top {
            Rational::one()
        } else {
            Rational::zero()
        }
    }

    /// Cohomological half-degree of a basis class.
    pub fn class_degree(&self, class: u8) -> u32 {
        class as u32
    }

    /// Expansion of γ^α ⊗ γ_α over the basis.
    pub fn contraction_pairs(&self) -> &[(u8, u8, Rational)] {
        &self.pairs
    }

    /// Degree-`d` invariant ⟨∏ τ_{n_i}(γ_{c_i})⟩_{g,d}.
    pub fn invariant(&self, genus: u32, degree: u32, ins: &[Insertion]) -> Rational {
        match &self.oracle {
            Oracle::Point(o) => {
                if degree > 0 {
                    return Rational::zero();
                }
                let levels: Vec<u32> = ins.iter().map(|x| x.level).collect();
                o.intersection_number(genus, &levels)
            }
            Oracle::P1(o) => o.invariant(genus, degree, ins),
        }
    }

    fn check_class(&self, class: u8) -> Result<(), EvalError> {
        if (class as usize) < self.rank() {
            Ok(())
        } else {
            Err(EvalError::BadClass { target: self.kind(), class })
        }
    }

    /// Quick dimension test; `None` when it depends on dummy choices.
    fn node_may_survive(&self, node: &Node) -> bool {
        if self.kind() != TargetKind::Point {
            return true;
        }
        let k = node.args.len() as i64;
        let sum: i64 = node.args.iter().map(|f| f.level as i64).sum();
        sum == 3 * node.genus as i64 - 3 + k && 2 * node.genus as i64 - 2 + k > 0
    }
}

/// Value at t = 0 of the degree-`d` part.
pub fn evaluate_at_origin(s: &ScalarExpr, target: &TargetModel, degree: u32) -> Result<AffineForm, EvalError> {
    if degree > target.max_degree {
        return Err(EvalError::DegreeOverflow { target: target.kind(), requested: degree, max: target.max_degree });
    }
    for m in &s.terms {
        for n in &m.nodes {
            if n.genus > target.max_genus {
                return Err(EvalError::GenusOverflow { target: target.kind(), requested: n.genus, max: target.max_genus });
            }
            for a in &n.args {
                if let Slot::Class(c) = a.slot {
                    target.check_class(c)?;
                }
            }
        }
    }
    let parts: Result<Vec<AffineForm>, EvalError> = s
        .terms
        .par_iter()
        .map(|m| {
            let v = monomial_value(m, target, degree)?;
            Ok(m.coeff.scale(&v))
        })
        .collect();
    let mut total = AffineForm::zero();
    for p in parts? {
        total += &p;
    }
    Ok(total)
}

/// Components of a vector field at t = 0, degree-`d` part, keyed by
/// concrete basis field.
pub fn evaluate_vfield_at_origin(
    v: &VField,
    target: &TargetModel,
    degree: u32,
) -> Result<BTreeMap<Field, AffineForm>, EvalError> {
    let mut out: BTreeMap<Field, AffineForm> = BTreeMap::new();
    for t in &v.terms {
        let mut bound = Vec::new();
        match t.field.slot {
            Slot::Class(_) => bound.push((t.field, t.coeff.clone())),
            Slot::Up(d) | Slot::Down(d) => {
                for (up, down, w) in target.contraction_pairs() {
                    let class = if matches!(t.field.slot, Slot::Up(_)) { *up } else { *down };
                    let coeff = t.coeff.bind(d, *up, *down).scale(&AffineForm::constant(w.clone()));
                    bound.push((Field::new(t.field.level, class), coeff));
                }
            }
        }
        for (f, c) in bound {
            let val = evaluate_at_origin(&c, target, degree)?;
            *out.entry(f).or_default() += &val;
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn monomial_value(m: &Monomial, target: &TargetModel, degree: u32) -> Result<Rational, EvalError> {
    if !m.nodes.iter().all(|n| target.node_may_survive(n)) {
        return Ok(Rational::zero());
    }
    let mut counts: BTreeMap<DummyId, (usize, usize)> = BTreeMap::new();
    for n in &m.nodes {
        for a in &n.args {
            match a.slot {
                Slot::Up(d) => counts.entry(d).or_default().0 += 1,
                Slot::Down(d) => counts.entry(d).or_default().1 += 1,
                Slot::Class(_) => {}
            }
        }
    }
    for (up, down) in counts.values() {
        if (*up, *down) != (1, 1) {
            return Err(EvalError::UnbalancedDummy { count: up + down });
        }
    }
    let dummies: Vec<DummyId> = counts.keys().copied().collect();
    let pairs = target.contraction_pairs();
    let mut total = Rational::zero();
    let mut choice = vec![0usize; dummies.len()];
    loop {
        let mut weight = Rational::one();
        let mut assign: HashMap<DummyId, (u8, u8)> = HashMap::new();
        for (d, &c) in dummies.iter().zip(&choice) {
            let (up, down, w) = &pairs[c];
            weight = weight * w;
            assign.insert(*d, (*up, *down));
        }
        let mut poly = vec![Rational::zero(); degree as usize + 1];
        poly[0] = weight;
        for n in &m.nodes {
            let ins: Vec<Insertion> = n
                .args
                .iter()
                .map(|a| {
                    let class = match a.slot {
                        Slot::Class(c) => c,
                        Slot::Up(d) => assign[&d].0,
                        Slot::Down(d) => assign[&d].1,
                    };
                    Insertion::new(a.level, class)
                })
                .collect();
            let vals: Vec<Rational> = (0..=degree).map(|e| target.invariant(n.genus, e, &ins)).collect();
            let mut next = vec![Rational::zero(); degree as usize + 1];
            for (i, p) in poly.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (j, v) in vals.iter().enumerate().take(degree as usize + 1 - i) {
                    if !v.is_zero() {
                        next[i + j] += &(p * v);
                    }
                }
            }
            poly = next;
            if poly.iter().all(|p| p.is_zero()) {
                break;
            }
        }
        total += &poly[degree as usize];
        let mut pos = 0;
        loop {
            if pos == dummies.len() {
                return Ok(total);
            }
            choice[pos] += 1;
            if choice[pos] < pairs.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}
