//! Instance schedules, relation extraction, the linear solve, and the
//! identity checks on the point and P¹ targets.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::bigphase::{evaluate_at_origin, EvalError, Field, Slot, TargetKind, TargetModel};
use crate::equations::{self, FREE_SYMBOL, SYMBOL_COUNT};
use crate::exactnum::{AffineForm, LinearSystem, Rational, Solution, SolveError, Symbol};
use crate::p1_gw::P1Oracle;
use crate::point_gw::PointOracle;
use crate::sym::SymExpr;

pub const APPENDIX_TABLE: &str = include_str!("../data/appendix.txt");

/// Number of printed point relations.
pub const POINT_RELATIONS: usize = 43;
/// Number of printed P¹ relations.
pub const P1_RELATIONS: usize = 61;

/// One evaluation point: derivatives applied to an expression in (W1, W2),
/// read off in degree `degree` at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InstanceSpec {
    pub id: String,
    pub target: TargetKind,
    pub degree: u32,
    pub derivatives: Vec<Field>,
    pub args: (Field, Field),
}

fn field_text(f: &Field, target: TargetKind) -> String {
    match (f.slot, target) {
        (Slot::Class(_), TargetKind::Point) => format!("t{}", f.level),
        (Slot::Class(c), TargetKind::P1) => format!("t{},{}", f.level, c),
        _ => format!("t{}?", f.level),
    }
}

impl InstanceSpec {
    pub fn new(id: impl Into<String>, target: TargetKind, degree: u32, derivatives: Vec<Field>, args: (Field, Field)) -> Self {
        InstanceSpec { id: id.into(), target, degree, derivatives, args }
    }

    /// Readable form such as `t2 t2 Phi(t0, t5) [point, d=0]`.
    pub fn describe(&self, name: &str) -> String {
        let mut s = String::new();
        for d in &self.derivatives {
            s.push_str(&field_text(d, self.target));
            s.push(' ');
        }
        format!(
            "{s}{name}({}, {}) [{}, d={}]",
            field_text(&self.args.0, self.target),
            field_text(&self.args.1, self.target),
            self.target,
            self.degree
        )
    }

    /// The same instance with the two arguments exchanged.
    pub fn swapped(&self) -> Self {
        InstanceSpec { args: (self.args.1, self.args.0), ..self.clone() }
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.describe("Phi"))
    }
}

/// A relation transcribed from the appendix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrintedRelation {
    pub spec: InstanceSpec,
    pub form: AffineForm,
}

/// A relation computed by the pipeline; setting `form` to zero gives the
/// constraint on a₁…a₁₀₅.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub spec: InstanceSpec,
    pub form: AffineForm,
}

fn parse_field(text: &str, target: TargetKind) -> Result<Field, String> {
    let (level, class) = match text.split_once(':') {
        Some((l, c)) => (l, c.parse::<u8>().map_err(|_| format!("bad class in {text:?}"))?),
        None => (text, 0),
    };
    let level = level.parse::<u32>().map_err(|_| format!("bad level in {text:?}"))?;
    if target == TargetKind::Point && class != 0 {
        return Err(format!("point field {text:?} must have class 0"));
    }
    Ok(Field::new(level, class))
}

fn parse_appendix_line(line: &str) -> Result<PrintedRelation, String> {
    let parts: Vec<&str> = line.split(';').map(str::trim).collect();
    let [id, target, degree, derivs, args, form] = parts[..] else {
        return Err(format!("expected 6 fields, found {}", parts.len()));
    };
    let target = match target {
        "point" => TargetKind::Point,
        "P1" => TargetKind::P1,
        other => return Err(format!("unknown target {other:?}")),
    };
    let degree = degree
        .strip_prefix("d=")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| format!("bad degree field {degree:?}"))?;
    let derivs = derivs.strip_prefix("derivs=").ok_or("missing derivs=")?;
    let derivatives =
        derivs.split_whitespace().map(|t| parse_field(t, target)).collect::<Result<Vec<_>, _>>()?;
    let args = args.strip_prefix("args=").ok_or("missing args=")?;
    let (w1, w2) = args.split_once(',').ok_or("args need two fields")?;
    let args = (parse_field(w1, target)?, parse_field(w2, target)?);
    let form: AffineForm = form.parse().map_err(|e: crate::exactnum::ParseAffineError| e.to_string())?;
    Ok(PrintedRelation { spec: InstanceSpec::new(id, target, degree, derivatives, args), form })
}

/// The appendix relations in printed order.
pub fn printed_relations() -> &'static [PrintedRelation] {
    static CELL: OnceLock<Vec<PrintedRelation>> = OnceLock::new();
    CELL.get_or_init(|| {
        APPENDIX_TABLE
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse_appendix_line(l).unwrap_or_else(|e| panic!("appendix line {}: {e}", i + 1)))
            .collect()
    })
}

/// The 104 instances behind the appendix relations.
pub fn appendix_schedule() -> Vec<InstanceSpec> {
    printed_relations().iter().map(|p| p.spec.clone()).collect()
}

/// Instances outside the appendix that complete the rank of the printed
/// system, which repeats one relation (A.2 #3 and A.2 #5 coincide).
pub fn supplementary_schedule() -> Vec<InstanceSpec> {
    vec![InstanceSpec::new("S #1", TargetKind::P1, 0, vec![], (Field::new(2, 0), Field::new(1, 0)))]
}

/// Point and P¹ targets sharing long-lived oracles.
#[derive(Clone)]
pub struct Targets {
    pub point: TargetModel,
    pub p1: TargetModel,
}

impl Targets {
    pub fn new(point: Arc<PointOracle>, p1: Arc<P1Oracle>, max_genus: u32, max_degree: u32) -> Self {
        Targets { point: TargetModel::point(point, max_genus), p1: TargetModel::p1(p1, max_genus, max_degree) }
    }

    pub fn model(&self, kind: TargetKind) -> &TargetModel {
        match kind {
            TargetKind::Point => &self.point,
            TargetKind::P1 => &self.p1,
        }
    }
}

impl Default for Targets {
    fn default() -> Self {
        Targets::new(Arc::new(PointOracle::new()), Arc::new(P1Oracle::new()), 3, 2)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error("{id}: {source}")]
    Eval { id: String, source: EvalError },
    #[error("relation system has rank {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Expands `expr`, differentiates along each direction of `spec` in turn,
/// and evaluates.
pub fn evaluate_instance(expr: &SymExpr, spec: &InstanceSpec, targets: &Targets) -> Result<AffineForm, PipelineError> {
    let mut s = expr.expand();
    for d in &spec.derivatives {
        s = s.differentiate(*d);
    }
    evaluate_at_origin(&s, targets.model(spec.target), spec.degree)
        .map_err(|source| PipelineError::Eval { id: spec.id.clone(), source })
}

/// Same value through the ∇-formulas on the unexpanded expression.
pub fn evaluate_instance_covariant(
    expr: &SymExpr,
    spec: &InstanceSpec,
    targets: &Targets,
) -> Result<AffineForm, PipelineError> {
    let mut e = expr.clone();
    for d in &spec.derivatives {
        e = e.covariant(*d);
    }
    evaluate_at_origin(&e.expand(), targets.model(spec.target), spec.degree)
        .map_err(|source| PipelineError::Eval { id: spec.id.clone(), source })
}

pub fn extract_relation(spec: &InstanceSpec, targets: &Targets) -> Result<Relation, PipelineError> {
    let phi = equations::phi_sym(spec.args.0, spec.args.1);
    Ok(Relation { spec: spec.clone(), form: evaluate_instance(&phi, spec, targets)? })
}

/// Exact comparison, no rescaling.
pub fn match_printed(r: &Relation, p: &PrintedRelation) -> bool {
    r.form == p.form
}

/// Extraction result for one appendix entry.
#[derive(Clone, Debug)]
pub struct RelationOutcome {
    pub printed: PrintedRelation,
    pub extracted: Result<AffineForm, PipelineError>,
    pub elapsed: Duration,
}

impl RelationOutcome {
    pub fn matched(&self) -> bool {
        matches!(&self.extracted, Ok(f) if *f == self.printed.form)
    }
}

/// Extracts every given printed relation in parallel, preserving order.
pub fn regenerate(printed: &[PrintedRelation], targets: &Targets) -> Vec<RelationOutcome> {
    printed
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let extracted = extract_relation(&p.spec, targets).map(|r| r.form);
            RelationOutcome { printed: p.clone(), extracted, elapsed: start.elapsed() }
        })
        .collect()
}

/// A solved coefficient that differs from the transcribed table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffMismatch {
    pub symbol: Symbol,
    pub solved: Option<AffineForm>,
    pub expected: Option<AffineForm>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub rank: usize,
    pub solution: Solution,
    pub mismatches: Vec<CoeffMismatch>,
}

impl SolveReport {
    pub fn passed(&self) -> bool {
        self.rank == self.solution.values.len() && self.mismatches.is_empty()
    }
}

/// Solves the relations with a₂ free and compares with the coefficient table.
pub fn solve_and_compare(relations: &[AffineForm], expected_rank: usize) -> Result<SolveReport, PipelineError> {
    let system = LinearSystem::new(relations.to_vec());
    let rank = system.rank();
    if rank != expected_rank {
        return Err(PipelineError::RankMismatch { expected: expected_rank, found: rank });
    }
    let solution = system.solve_parametric(FREE_SYMBOL)?;
    let table = equations::lemma_coeff_table();
    let mut mismatches = Vec::new();
    for sym in 1..=SYMBOL_COUNT {
        let solved = if sym == FREE_SYMBOL && solution.free.contains(&sym) {
            Some(AffineForm::symbol(sym))
        } else {
            solution.values.get(&sym).cloned()
        };
        let expected = table.get(&sym).cloned();
        if solved != expected {
            mismatches.push(CoeffMismatch { symbol: sym, solved, expected });
        }
    }
    Ok(SolveReport { rank, solution, mismatches })
}

/// Value of one identity check; the check passes when it is zero.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub spec: InstanceSpec,
    pub value: Result<AffineForm, PipelineError>,
    pub elapsed: Duration,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(&self.value, Ok(v) if v.is_zero())
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub name: &'static str,
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(CheckOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed())
    }
}

fn run_checks<F>(name: &'static str, suite: &[InstanceSpec], check: F) -> VerifyReport
where
    F: Fn(&InstanceSpec) -> Result<AffineForm, PipelineError> + Sync,
{
    let outcomes = suite
        .par_iter()
        .map(|spec| {
            let start = Instant::now();
            let value = check(spec);
            CheckOutcome { spec: spec.clone(), value, elapsed: start.elapsed() }
        })
        .collect();
    VerifyReport { name, outcomes }
}

/// ⟨⟨T²W1 TW2⟩⟩₃ − ⟨⟨T²W2 TW1⟩⟩₃ − (Q(W1,W2) − Q(W2,W1))/7 on each instance.
pub fn verify_skew(suite: &[InstanceSpec], targets: &Targets) -> VerifyReport {
    run_checks("skew", suite, |s| evaluate_instance(&equations::skew_sym(s.args.0, s.args.1), s, targets))
}

/// Ω(W1,W2) + Ω(W2,W1) on each instance.
pub fn verify_omega_symmetrization(suite: &[InstanceSpec], targets: &Targets) -> VerifyReport {
    run_checks("omega", suite, |s| {
        let (w1, w2) = s.args;
        evaluate_instance(&equations::omega_sym(w1, w2).concat(&equations::omega_sym(w2, w1)), s, targets)
    })
}

/// ⟨⟨T²W1 TW2⟩⟩₃ minus the main identity's right-hand side.
pub fn verify_main_identity(suite: &[InstanceSpec], targets: &Targets, a2: &Rational) -> VerifyReport {
    run_checks("main", suite, |s| evaluate_instance(&equations::main_identity_sym(s.args.0, s.args.1, a2), s, targets))
}

/// Difference between differentiating after expansion and expanding after
/// the ∇-formulas, for Φ on each instance.
pub fn verify_engine_equivalence(suite: &[InstanceSpec], targets: &Targets) -> VerifyReport {
    run_checks("engine", suite, |s| {
        let phi = equations::phi_sym(s.args.0, s.args.1);
        let a = evaluate_instance(&phi, s, targets)?;
        let b = evaluate_instance_covariant(&phi, s, targets)?;
        Ok(&a - &b)
    })
}

/// Point pairs (τ_a, τ_b) with a + b ≤ 6, each also with the one derivative
/// τ_c that makes the genus-3 dimension match.
pub fn point_theorem_suite() -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    for a in 0..=6u32 {
        for b in 0..=6 - a {
            let args = (Field::new(a, 0), Field::new(b, 0));
            out.push(InstanceSpec::new(format!("point ({a},{b})"), TargetKind::Point, 0, vec![], args));
            let c = 6 - a - b;
            out.push(InstanceSpec::new(
                format!("point t{c} ({a},{b})"),
                TargetKind::Point,
                0,
                vec![Field::new(c, 0)],
                args,
            ));
        }
    }
    out
}

/// P¹ pairs (τ_{a,p}, τ_{b,q}) with a + b ≤ 3 and d ≤ `max_degree`, each also
/// with every one-derivative variant τ_{c,r} that makes the genus-3
/// dimension match.
pub fn p1_theorem_suite(max_degree: u32) -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for a in 0..=3u32 {
            for b in 0..=3 - a {
                for p in 0..2u8 {
                    for q in 0..2u8 {
                        let args = (Field::new(a, p), Field::new(b, q));
                        let tag = format!("({a},{p}),({b},{q}) d={d}");
                        out.push(InstanceSpec::new(format!("P1 {tag}"), TargetKind::P1, d, vec![], args));
                        // Level plus class of the extra insertion.
                        let need = (4 + 2 * d) as i64 - (a + b) as i64 - (p + q) as i64;
                        for r in 0..2u8 {
                            let c = need - r as i64;
                            if c >= 0 {
                                out.push(InstanceSpec::new(
                                    format!("P1 t{c},{r} {tag}"),
                                    TargetKind::P1,
                                    d,
                                    vec![Field::new(c as u32, r)],
                                    args,
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Both theorem suites.
pub fn theorem_suite(max_degree: u32) -> Vec<InstanceSpec> {
    let mut out = point_theorem_suite();
    out.extend(p1_theorem_suite(max_degree));
    out
}

/// Appendix instances plus the degree-one shift of the first P¹ instance.
pub fn omega_suite() -> Vec<InstanceSpec> {
    let mut out = appendix_schedule();
    let first = out[POINT_RELATIONS].clone();
    out.push(InstanceSpec { id: format!("{} d=1", first.id), degree: 1, ..first });
    out
}

/// Extracted forms keyed by anchor id, for reports.
pub fn forms_by_id(outcomes: &[RelationOutcome]) -> BTreeMap<String, AffineForm> {
    outcomes
        .iter()
        .filter_map(|o| o.extracted.as_ref().ok().map(|f| (o.printed.spec.id.clone(), f.clone())))
        .collect()
}
