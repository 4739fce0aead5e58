use std::sync::OnceLock;

use gwrel::bigphase::{EvalError, Field, TargetKind};
use gwrel::relations::*;
use gwrel::{AffineForm, Rational, SolveError};

fn targets() -> &'static Targets {
    static CELL: OnceLock<Targets> = OnceLock::new();
    CELL.get_or_init(Targets::default)
}

fn printed_forms() -> Vec<AffineForm> {
    printed_relations().iter().map(|p| p.form.clone()).collect()
}

#[test]
fn first_point_and_p1_relations() {
    let p = printed_relations();
    for idx in [0, POINT_RELATIONS] {
        let r = extract_relation(&p[idx].spec, targets()).unwrap();
        assert!(match_printed(&r, &p[idx]), "{}", p[idx].spec);
    }
    let first = extract_relation(&p[0].spec, targets()).unwrap();
    assert_eq!(
        first.form.to_string(),
        "1/288*a2 + 1/1152*a15 + 1/288*a16 + 1/1152*a24 + 1/24*a84 + 1/24*a90 + 1/24*a92 + a104 - 77/414720"
    );
}

#[test]
fn off_dimension_instance_gives_zero_relation() {
    let spec = InstanceSpec::new("x", TargetKind::Point, 0, vec![], (Field::new(0, 0), Field::new(0, 0)));
    assert!(extract_relation(&spec, targets()).unwrap().form.is_zero());
}

#[test]
fn derivative_free_point_constants_are_leading_terms() {
    let o = gwrel::point_gw::PointOracle::new();
    for p in &printed_relations()[..6] {
        let (a, b) = (p.spec.args.0.level, p.spec.args.1.level);
        assert!(p.spec.derivatives.is_empty());
        let lead = o.intersection_number(3, &[a + 2, b + 1]);
        assert_eq!(*p.form.constant_part(), -lead, "{}", p.spec.id);
    }
}

#[test]
fn degree_cap_is_reported() {
    let spec = InstanceSpec::new("big", TargetKind::P1, 3, vec![], (Field::new(0, 0), Field::new(0, 0)));
    match extract_relation(&spec, targets()) {
        Err(PipelineError::Eval { id, source: EvalError::DegreeOverflow { requested: 3, max: 2, .. } }) => {
            assert_eq!(id, "big")
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn printed_system_is_rank_deficient_by_one() {
    match solve_and_compare(&printed_forms(), 104) {
        Err(PipelineError::RankMismatch { expected: 104, found: 103 }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn supplemented_system_reproduces_the_table() {
    let mut forms = printed_forms();
    for spec in supplementary_schedule() {
        forms.push(extract_relation(&spec, targets()).unwrap().form);
    }
    let report = solve_and_compare(&forms, 104).unwrap();
    assert_eq!(report.rank, 104);
    assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    assert_eq!(report.solution.free, vec![2]);
    assert_eq!(report.solution.values[&1], AffineForm::constant(Rational::integer(5)));
    assert_eq!(report.solution.values[&104], AffineForm::constant(Rational::new(1, 23040)));
    assert!(report.passed());
}

#[test]
fn pinned_free_symbol_is_an_error() {
    let mut forms = printed_forms();
    forms.push("a2 - 1".parse().unwrap());
    let err = solve_and_compare(&forms, 104).unwrap_err();
    assert_eq!(err, PipelineError::Solve(SolveError::FreeSymbolPivoted(2)));
}

#[test]
fn theorem_examples() {
    let t = targets();
    let pt = |a, b| InstanceSpec::new("pt", TargetKind::Point, 0, vec![], (Field::new(a, 0), Field::new(b, 0)));
    let p1 = |a, p, b, q, d| InstanceSpec::new("p1", TargetKind::P1, d, vec![], (Field::new(a, p), Field::new(b, q)));
    assert!(verify_skew(&[pt(0, 5), p1(0, 0, 1, 1, 1), p1(2, 0, 2, 0, 0)], t).passed());
    let omega = [
        pt(0, 5),
        p1(0, 0, 2, 1, 0),
        p1(0, 0, 2, 1, 1),
        InstanceSpec::new("t6", TargetKind::Point, 0, vec![Field::new(6, 0)], (Field::new(0, 0), Field::new(0, 0))),
    ];
    assert!(verify_omega_symmetrization(&omega, t).passed());
    for a2 in [Rational::zero(), Rational::one()] {
        assert!(verify_main_identity(&[pt(0, 5), p1(1, 0, 1, 1, 1)], t, &a2).passed());
    }
}

#[test]
fn phi_is_nonzero_before_solving() {
    // Φ itself does not vanish until the coefficients are fixed.
    let spec = &appendix_schedule()[0];
    let report = verify_engine_equivalence(std::slice::from_ref(spec), targets());
    assert!(report.passed());
    let phi = gwrel::equations::phi_sym(spec.args.0, spec.args.1);
    assert!(!evaluate_instance(&phi, spec, targets()).unwrap().is_zero());
}

#[test]
fn engine_routes_agree_on_derivative_instances() {
    let specs: Vec<InstanceSpec> =
        appendix_schedule().into_iter().filter(|s| !s.derivatives.is_empty()).step_by(5).collect();
    let report = verify_engine_equivalence(&specs, targets());
    assert!(report.passed(), "{:?}", report.failures().next());
}

#[test]
fn regenerate_preserves_order() {
    let subset = &printed_relations()[40..46];
    let out = regenerate(subset, targets());
    let ids: Vec<&str> = out.iter().map(|o| o.printed.spec.id.as_str()).collect();
    assert_eq!(ids, ["A.1 #41", "A.1 #42", "A.1 #43", "A.2 #1", "A.2 #2", "A.2 #3"]);
    assert!(out.iter().all(RelationOutcome::matched));
}
