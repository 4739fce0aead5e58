use std::collections::HashMap;

use gwrel::point_gw::{genus0_closed_form, PointOracle};
use gwrel::Rational;
use num_bigint::BigInt;
use proptest::prelude::*;

fn dfact(n: i64) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut m = n;
    while m > 1 {
        acc *= m;
        m -= 2;
    }
    acc
}

/// Reference values: the Virasoro recursion applied to the lowest insertion
/// (string and dilaton fall out as its first two cases).
struct LowestFirst {
    memo: HashMap<(u32, Vec<u32>), Rational>,
}

impl LowestFirst {
    fn new() -> Self {
        LowestFirst { memo: HashMap::new() }
    }

    fn value(&mut self, g: u32, levels: &[u32]) -> Rational {
        let mut lv = levels.to_vec();
        lv.sort_unstable();
        let k = lv.len() as i64;
        let sum: i64 = lv.iter().map(|&n| n as i64).sum();
        if sum != 3 * g as i64 - 3 + k || 2 * g as i64 - 2 + k <= 0 {
            return Rational::zero();
        }
        if g == 0 && lv == [0, 0, 0] {
            return Rational::one();
        }
        if g == 1 && lv == [1] {
            return Rational::new(1, 24);
        }
        if let Some(v) = self.memo.get(&(g, lv.clone())) {
            return v.clone();
        }
        let key = (g, lv.clone());
        let top = lv.remove(0);
        let k = top as i64 - 1;
        let mut acc = Rational::zero();
        for j in 0..lv.len() {
            let d = lv[j] as i64;
            if d + k < 0 {
                continue;
            }
            let mut next = lv.clone();
            next[j] = (d + k) as u32;
            let c = Rational::from_big(dfact(2 * k + 2 * d + 1), dfact(2 * d - 1));
            acc += &(c * self.value(g, &next));
        }
        for r in 0..k.max(0) {
            let s = k - 1 - r;
            let c = Rational::new(1, 2) * Rational::from_bigint(dfact(2 * r + 1) * dfact(2 * s + 1));
            let mut inner = Rational::zero();
            if g > 0 {
                let mut next = lv.clone();
                next.extend([r as u32, s as u32]);
                inner += &self.value(g - 1, &next);
            }
            for mask in 0u32..(1 << lv.len()) {
                let mut left = vec![r as u32];
                let mut right = vec![s as u32];
                for (i, &x) in lv.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        left.push(x);
                    } else {
                        right.push(x);
                    }
                }
                for g1 in 0..=g {
                    inner += &(self.value(g1, &left) * self.value(g - g1, &right));
                }
            }
            acc += &(c * inner);
        }
        let v = acc * Rational::from_big(BigInt::from(1), dfact(2 * k + 3));
        self.memo.insert(key, v.clone());
        v
    }
}

fn multisets(k: usize, total: u32, max: u32) -> Vec<Vec<u32>> {
    if k == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=max.min(total) {
        for mut rest in multisets(k - 1, total - first, first) {
            rest.push(first);
            out.push(rest);
        }
    }
    out
}

/// Splits `total` into `n` levels, steered by `weights`.
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

#[test]
fn anchor_values() {
    let o = PointOracle::new();
    assert_eq!(o.intersection_number(0, &[0, 0, 0]), Rational::one());
    assert_eq!(o.intersection_number(1, &[0]), Rational::zero());
    assert_eq!(o.intersection_number(1, &[1]), Rational::new(1, 24));
    assert_eq!(o.intersection_number(3, &[1, 7]), Rational::new(5, 82944));
    assert_eq!(o.intersection_number(3, &[2, 6]), Rational::new(77, 414720));
    assert_eq!(o.intersection_number(3, &[1, 7]), Rational::integer(5) * o.intersection_number(3, &[7]));
}

#[test]
fn one_point_series() {
    // ⟨τ_{3g−2}⟩_g = 1/(24^g g!)
    let o = PointOracle::new();
    let mut fact = 1i64;
    for g in 1..=5u32 {
        fact *= g as i64;
        let expected = Rational::new(1, 24i64.pow(g) * fact);
        assert_eq!(o.intersection_number(g, &[3 * g - 2]), expected, "g={g}");
    }
}

#[test]
fn genus0_closed_form_agrees_up_to_nine_points() {
    let o = PointOracle::new();
    let mut count = 0;
    for k in 3..=9usize {
        for lv in multisets(k, k as u32 - 3, k as u32 - 3) {
            assert_eq!(o.intersection_number(0, &lv), genus0_closed_form(&lv).unwrap(), "{lv:?}");
            count += 1;
        }
    }
    assert_eq!(count, 30);
}

#[test]
fn agrees_with_lowest_first_recursion() {
    let o = PointOracle::new();
    let mut reference = LowestFirst::new();
    for g in 0..=3u32 {
        for k in 1..=4usize {
            let total = 3 * g as i64 - 3 + k as i64;
            if total < 0 {
                continue;
            }
            for lv in multisets(k, total as u32, total as u32) {
                assert_eq!(o.intersection_number(g, &lv), reference.value(g, &lv), "g={g} {lv:?}");
            }
        }
    }
}

#[test]
fn unstable_and_off_dimension_are_zero() {
    let o = PointOracle::new();
    assert!(o.intersection_number(0, &[]).is_zero());
    assert!(o.intersection_number(0, &[0, 0]).is_zero());
    assert!(o.intersection_number(1, &[]).is_zero());
    assert!(o.intersection_number(2, &[3]).is_zero());
    assert!(o.intersection_number(3, &[2, 5]).is_zero());
}

#[test]
fn cold_cache_reproduces_cached_values() {
    let warm = PointOracle::new();
    warm.intersection_number(3, &[2, 2, 3, 3]);
    let entries = warm.cache().entries();
    assert!(entries.len() > 10);
    let cold = PointOracle::new();
    for (k, v) in entries {
        assert_eq!(cold.intersection_number(k.genus, &k.levels), v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn string_equation(g in 0u32..=3, weights in prop::collection::vec(0u32..8, 1..5)) {
        let n = weights.len() as i64;
        prop_assume!(2 * g as i64 - 2 + n > 0);
        let rest = composition((3 * g as i64 - 2 + n) as u32, &weights);
        let o = PointOracle::new();
        let mut full = rest.clone();
        full.push(0);
        let mut rhs = Rational::zero();
        for j in 0..rest.len() {
            if rest[j] > 0 {
                let mut next = rest.clone();
                next[j] -= 1;
                rhs += &o.intersection_number(g, &next);
            }
        }
        prop_assert_eq!(o.intersection_number(g, &full), rhs);
    }

    #[test]
    fn dilaton_equation(g in 0u32..=3, weights in prop::collection::vec(0u32..8, 1..5)) {
        let n = weights.len() as i64;
        prop_assume!(2 * g as i64 - 2 + n > 0);
        let rest = composition((3 * g as i64 - 3 + n) as u32, &weights);
        let o = PointOracle::new();
        let mut full = rest.clone();
        full.push(1);
        let expected = Rational::integer(2 * g as i64 - 2 + n) * o.intersection_number(g, &rest);
        prop_assert_eq!(o.intersection_number(g, &full), expected);
    }

    #[test]
    fn insertion_order_is_irrelevant(g in 0u32..=3, weights in prop::collection::vec(0u32..8, 1..5)) {
        let n = weights.len() as i64;
        let total = 3 * g as i64 - 3 + n;
        prop_assume!(total >= 0);
        let lv = composition(total as u32, &weights);
        let mut rev = lv.clone();
        rev.reverse();
        let o = PointOracle::new();
        prop_assert_eq!(o.intersection_number(g, &lv), o.intersection_number(g, &rev));
    }
}
