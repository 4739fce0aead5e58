use gwrel::bigphase::{evaluate_at_origin, Field};
use gwrel::equations::*;
use gwrel::relations::{appendix_schedule, evaluate_instance, Targets};
use gwrel::sym::{parse_term, Arg, Factor};
use gwrel::{AffineForm, Rational};

fn coeffs(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.split('|').next().unwrap().trim().to_string()).collect()
}

// Second transcription of the printed coefficients, in printed order.
const Q_PRINTED: [&str; 27] = [
    "2/9", "5/24", "16/3", "5", "40/3", "1/6", "1/2", "2/9", "1/18", "1/18", "1/30", "1/30", "9/10", "1/30", "2/15",
    "3/5", "1/6", "16/15", "41/90", "4/5", "16/5", "92/15", "1/720", "1/720", "1/135", "1/40", "1/120",
];

const OMEGA_PRINTED: [&str; 69] = [
    "1/2", "-6", "3", "3", "3", "-4", "-120", "240", "60", "12", "-120", "60", "4", "-5/2", "2", "-6", "60", "-3/10",
    "-8/5", "22/5", "-11/20", "49/10", "-71/20", "6", "6", "-12", "18", "-18", "-9", "-6", "3", "6", "-3", "-12",
    "18/5", "-54/5", "18/5", "-54/5", "36/5", "18/5", "77/20", "-33/10", "-22/5", "11/20", "72", "144", "144",
    "-72", "-288", "48", "-24", "6", "-84", "-1/40", "1/5", "-3/20", "-1/8", "1/4", "-1/2", "1/15", "-8/15", "2/5",
    "3/20", "-9/20", "3/20", "3/40", "-1/10", "1/80", "-72",
];

#[test]
fn q_matches_second_transcription() {
    assert_eq!(coeffs(Q_TERMS), Q_PRINTED);
    assert_eq!(q_manifest().len(), 27);
    assert_eq!(q_manifest().terms[0], parse_term("2/9 | <<W2 T(^a)>>2 <<_a W1 ^b _b>>0").unwrap());
}

#[test]
fn omega_matches_second_transcription() {
    assert_eq!(coeffs(OMEGA_TERMS), OMEGA_PRINTED);
    let m = omega_manifest();
    assert_eq!(m.terms[0], parse_term("1/2 | <<W1 W2 T({_a*^a})>>2").unwrap());
    assert_eq!(m.terms.last().unwrap(), &parse_term("-72 | <<^a>>1 <<_a {W1*W2} _b>>1 <<^b>>1").unwrap());
    assert!(m.terms.iter().all(|t| t.coeff.is_constant()));
}

#[test]
fn phi_shape() {
    let m = phi_manifest();
    assert_eq!(m.len(), 106);
    assert_eq!(m.terms[0], parse_term("-1 | <<T2(W1) T(W2)>>3").unwrap());
    assert_eq!(m.terms[1], parse_term("a1 | <<T2({W1*W2})>>3").unwrap());
    for (i, t) in m.terms[1..].iter().enumerate() {
        assert_eq!(t.coeff, AffineForm::symbol(i as u16 + 1));
    }
}

#[test]
fn lemma_anchors() {
    let t = lemma_coeff_table();
    assert_eq!(t.len(), 105);
    let a2 = AffineForm::symbol(2);
    assert_eq!(t[&1], AffineForm::constant(Rational::integer(5)));
    assert_eq!(t[&2], a2);
    assert_eq!(t[&5], AffineForm::constant(Rational::new(5, 168)));
    assert_eq!(t[&23], "1/36 + 4*a2".parse().unwrap());
    assert_eq!(t[&104], AffineForm::constant(Rational::new(1, 23040)));
    assert_eq!(t[&105], "-64/35 - 144*a2".parse().unwrap());
    assert!(t.values().all(|f| f.symbols().all(|s| s == 2)));
}

/// The main identity's right-hand side restates Φ's terms with the lemma's
/// a₂-free parts as coefficients.
#[test]
fn thm_rhs_mirrors_phi_with_lemma_constants() {
    let table = lemma_coeff_table();
    let phi = phi_manifest();
    let rhs = thm_rhs_manifest();
    let mut expected: Vec<(Vec<Factor>, Rational)> = Vec::new();
    for t in &phi.terms[1..] {
        let sym = t.coeff.symbols().next().unwrap();
        let c = table[&sym].constant_part().clone();
        if !c.is_zero() {
            expected.push((t.factors.clone(), c));
        }
    }
    let got: Vec<(Vec<Factor>, Rational)> = rhs
        .terms
        .iter()
        .map(|t| {
            assert!(t.coeff.is_constant());
            (t.factors.clone(), t.coeff.constant_part().clone())
        })
        .collect();
    assert_eq!(got, expected);
    assert_eq!(rhs.len(), 99);
    assert_eq!(rhs.terms[0], parse_term("5 | <<T2({W1*W2})>>3").unwrap());
    assert!(rhs.terms.contains(&parse_term("1/23040 | <<W1 W2 ^a _a ^b _b ^m _m>>0").unwrap()));
}

#[test]
fn skew_structure() {
    let (w1, w2) = (Field::new(0, 0), Field::new(5, 0));
    assert_eq!(skew_sym(w1, w2).len(), 2 + 2 * 27);
    let targets = Targets::default();
    let same = evaluate_at_origin(&build_skew(w1, w1), &targets.point, 0).unwrap();
    assert!(same.is_zero());
    let p1 = (Field::new(0, 0), Field::new(1, 1));
    let v = evaluate_at_origin(&build_skew(p1.0, p1.1), &targets.p1, 1).unwrap();
    let u = evaluate_at_origin(&build_skew(p1.1, p1.0), &targets.p1, 1).unwrap();
    assert!(v.is_zero() && u.is_zero());
}

#[test]
fn skew_is_antisymmetric_before_vanishing() {
    // The Q part alone is antisymmetrised, so swapping negates it.
    let targets = Targets::default();
    for (a, b) in [(0, 5), (1, 4), (2, 3)] {
        let (w1, w2) = (Field::new(a, 0), Field::new(b, 0));
        let q12 = evaluate_at_origin(&build_q(w1, w2), &targets.point, 0).unwrap();
        let q21 = evaluate_at_origin(&build_q(w2, w1), &targets.point, 0).unwrap();
        let lead = |x: Field, y: Field| {
            let s = gwrel::sym::SymExpr { terms: vec![parse_term("1 | <<T2(W1) T(W2)>>3").unwrap()] };
            evaluate_at_origin(&s.instantiate(&Arg::Fixed(x), &Arg::Fixed(y)).expand(), &targets.point, 0).unwrap()
        };
        let lhs = &lead(w1, w2) - &lead(w2, w1);
        let seventh = Rational::new(1, 7);
        assert_eq!(lhs, (&q12 - &q21).scale(&seventh));
    }
}

/// The a₂-coefficient of Φ with the solved table substituted is Ω + Ω swapped.
#[test]
fn a2_part_of_solved_phi_is_omega_symmetrisation() {
    let targets = Targets::default();
    for spec in appendix_schedule().iter().step_by(7) {
        let (w1, w2) = spec.args;
        let solved = evaluate_instance(&phi_solved_sym(w1, w2), spec, &targets).unwrap();
        let omega = evaluate_instance(&omega_sym(w1, w2).concat(&omega_sym(w2, w1)), spec, &targets).unwrap();
        assert!(solved.symbols().all(|s| s == 2), "{}", spec.id);
        assert_eq!(AffineForm::constant(solved.coeff(2)), omega, "{}", spec.id);
    }
}

#[test]
fn main_identity_with_a2_zero_is_solved_phi_at_zero() {
    let targets = Targets::default();
    let spec = &appendix_schedule()[0];
    let (w1, w2) = spec.args;
    let main = evaluate_instance(&main_identity_sym(w1, w2, &Rational::zero()), spec, &targets).unwrap();
    let solved = evaluate_instance(&phi_solved_sym(w1, w2), spec, &targets).unwrap();
    assert!(main.is_zero());
    assert!(solved.constant_part().is_zero());
}
