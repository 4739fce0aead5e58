use std::sync::OnceLock;

use gwrel::memo::CacheKey;
use gwrel::p1_gw::{classical_triple, Insertion, P1Key, P1Oracle};
use gwrel::point_gw::genus0_closed_form;
use gwrel::Rational;
use proptest::prelude::*;

fn oracle() -> &'static P1Oracle {
    static CELL: OnceLock<P1Oracle> = OnceLock::new();
    CELL.get_or_init(P1Oracle::new)
}

fn ins(v: &[(u32, u8)]) -> Vec<Insertion> {
    v.iter().map(|&(n, q)| Insertion::new(n, q)).collect()
}

/// Power series in z² truncated after `len` terms.
fn series_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len()];
    for i in 0..a.len() {
        for j in 0..a.len() - i {
            out[i + j] += &(&a[i] * &b[j]);
        }
    }
    out
}

fn series_inv(a: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len()];
    out[0] = a[0].recip();
    for n in 1..a.len() {
        let mut acc = Rational::zero();
        for k in 1..=n {
            acc += &(&a[k] * &out[n - k]);
        }
        out[n] = -(acc * out[0].clone());
    }
    out
}

/// sinh(z/2)/(z/2) as a series in z².
fn s_series(len: usize) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut fact = Rational::one();
    for k in 0..len {
        if k > 0 {
            fact = fact * Rational::integer(((2 * k) * (2 * k + 1)) as i64);
        }
        out.push((fact.clone() * Rational::integer(4).pow(k as u32)).recip());
    }
    out
}

/// ⟨τ_{2g−2+2d}(ω)⟩_{g,d} = [z^{2g}] S(z)^{2d−1}/(d!)².
fn one_point_stationary(g: u32, d: u32) -> Rational {
    let len = g as usize + 1;
    let s = s_series(len);
    let mut p = vec![Rational::zero(); len];
    p[0] = Rational::one();
    let e = 2 * d as i64 - 1;
    let base = if e >= 0 { s } else { series_inv(&s) };
    for _ in 0..e.abs() {
        p = series_mul(&p, &base);
    }
    let dfact: i64 = (1..=d as i64).product();
    p[g as usize].clone() * Rational::new(1, dfact * dfact)
}

fn composition(total: u32, weights: &[u32]) -> Vec<u32> {
    let mut left = total;
    let mut out = Vec::new();
    for (i, w) in weights.iter().enumerate() {
        let take = if i + 1 == weights.len() { left } else { (*w).min(left) };
        out.push(take);
        left -= take;
    }
    out
}

/// Insertions with the given classes whose levels make the full key, with
/// `extra` further insertions of total weight `extra_weight`, dimension
/// matched. `None` if the classes alone are too heavy.
fn matched_rest(g: u32, d: u32, classes: &[u8], weights: &[u32], extra: i64, extra_weight: i64) -> Option<Vec<Insertion>> {
    let k = classes.len() as i64 + extra;
    let total = 2 * g as i64 - 2 + 2 * d as i64 + k - extra_weight - classes.iter().map(|&q| q as i64).sum::<i64>();
    if total < 0 {
        return None;
    }
    let levels = composition(total as u32, weights);
    Some(levels.iter().zip(classes).map(|(&n, &q)| Insertion::new(n, q)).collect())
}

fn stable(g: u32, d: u32, n: usize) -> bool {
    d > 0 || 2 * g as i64 - 2 + n as i64 > 0
}

fn lower(v: &[Insertion], j: usize, class: u8) -> Option<Vec<Insertion>> {
    let x = v[j];
    if x.level == 0 {
        return None;
    }
    let mut out = v.to_vec();
    out[j] = Insertion::new(x.level - 1, class);
    Some(out)
}

#[test]
fn classical_triples() {
    assert_eq!(classical_triple(0, 0, 1), Rational::one());
    assert_eq!(classical_triple(1, 0, 0), Rational::one());
    assert_eq!(classical_triple(0, 0, 0), Rational::zero());
    assert_eq!(classical_triple(0, 1, 1), Rational::zero());
}

#[test]
fn anchor_values() {
    let o = oracle();
    assert_eq!(o.invariant(0, 0, &ins(&[(0, 0), (0, 0), (0, 1)])), Rational::one());
    assert_eq!(o.invariant(0, 1, &ins(&[(0, 1), (0, 1)])), Rational::one());
    assert_eq!(o.invariant(1, 0, &ins(&[(0, 1)])), Rational::new(-1, 24));
    // χ(P¹)/24
    assert_eq!(o.invariant(1, 0, &ins(&[(1, 0)])), Rational::new(1, 12));
    assert_eq!(o.invariant(3, 0, &ins(&[(2, 0), (3, 1)])), Rational::new(-31, 96768));
}

#[test]
fn stationary_one_point_series() {
    let o = oracle();
    for g in 0..=3u32 {
        for d in 0..=2u32 {
            if 2 * g + 2 * d < 2 {
                continue;
            }
            let level = 2 * g + 2 * d - 2;
            assert_eq!(o.invariant(g, d, &ins(&[(level, 1)])), one_point_stationary(g, d), "g={g} d={d}");
        }
    }
    assert_eq!(one_point_stationary(2, 0), Rational::new(7, 5760));
    assert_eq!(one_point_stationary(2, 2), Rational::new(13, 7680));
}

#[test]
fn genus0_degree0_is_classical() {
    let o = oracle();
    for k in 3..=6usize {
        for point in 0..k {
            for q in 0..2u8 {
                let mut v: Vec<(u32, u8)> = (0..k).map(|i| (0, if i == point { 1 } else { 0 })).collect();
                v[k - 1].0 = k as u32 - 3;
                v[0].1 = v[0].1.max(q);
                let levels: Vec<u32> = v.iter().map(|x| x.0).collect();
                let points = v.iter().filter(|x| x.1 == 1).count();
                let expected = if points == 1 { genus0_closed_form(&levels).unwrap() } else { Rational::zero() };
                assert_eq!(o.invariant(0, 0, &ins(&v)), expected, "{v:?}");
            }
        }
    }
}

#[test]
fn key_rendering() {
    let k = P1Key::new(1, 2, &ins(&[(3, 1), (0, 0)]));
    assert_eq!(k.render(), "1;2;(0,0),(3,1)");
    assert_eq!(P1Key::parse(&k.render()).unwrap(), k);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn string_equation(g in 0u32..=3, d in 0u32..=2, classes in prop::collection::vec(0u8..2, 1..4), weights in prop::collection::vec(0u32..6, 4)) {
        let n = classes.len();
        prop_assume!(stable(g, d, n));
        let rest = matched_rest(g, d, &classes, &weights[..n], 1, 0);
        prop_assume!(rest.is_some());
        let rest = rest.unwrap();
        let o = oracle();
        let mut full = rest.clone();
        full.push(Insertion::new(0, 0));
        let mut rhs = Rational::zero();
        for j in 0..n {
            if let Some(next) = lower(&rest, j, rest[j].class) {
                rhs += &o.invariant(g, d, &next);
            }
        }
        prop_assert_eq!(o.invariant(g, d, &full), rhs);
    }

    #[test]
    fn dilaton_equation(g in 0u32..=3, d in 0u32..=2, classes in prop::collection::vec(0u8..2, 1..4), weights in prop::collection::vec(0u32..6, 4)) {
        let n = classes.len();
        prop_assume!(stable(g, d, n));
        let rest = matched_rest(g, d, &classes, &weights[..n], 0, 0);
        prop_assume!(rest.is_some());
        let rest = rest.unwrap();
        let o = oracle();
        let mut full = rest.clone();
        full.push(Insertion::new(1, 0));
        let expected = Rational::integer(2 * g as i64 - 2 + n as i64) * o.invariant(g, d, &rest);
        prop_assert_eq!(o.invariant(g, d, &full), expected);
    }

    #[test]
    fn divisor_equation(g in 0u32..=3, d in 0u32..=2, classes in prop::collection::vec(0u8..2, 1..4), weights in prop::collection::vec(0u32..6, 4)) {
        let n = classes.len();
        prop_assume!(stable(g, d, n));
        let rest = matched_rest(g, d, &classes, &weights[..n], 1, 1);
        prop_assume!(rest.is_some());
        let rest = rest.unwrap();
        let o = oracle();
        let mut full = rest.clone();
        full.push(Insertion::new(0, 1));
        let mut rhs = Rational::integer(d as i64) * o.invariant(g, d, &rest);
        for j in 0..n {
            if rest[j].class == 0 {
                if let Some(next) = lower(&rest, j, 1) {
                    rhs += &o.invariant(g, d, &next);
                }
            }
        }
        prop_assert_eq!(o.invariant(g, d, &full), rhs);
    }

    #[test]
    fn off_dimension_is_zero(g in 0u32..=3, d in 0u32..=2, raw in prop::collection::vec((0u32..8, 0u8..2), 0..4)) {
        let v: Vec<Insertion> = raw.iter().map(|&(n, q)| Insertion::new(n, q)).collect();
        let weight: i64 = v.iter().map(|x| (x.level + x.class as u32) as i64).sum();
        prop_assume!(weight != 2 * g as i64 - 2 + 2 * d as i64 + v.len() as i64);
        prop_assert!(oracle().invariant(g, d, &v).is_zero());
    }
}
