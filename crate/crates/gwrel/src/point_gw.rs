//! Descendant intersection numbers ⟨τ_{n₁}⋯τ_{n_k}⟩_g of the point.

use num_bigint::BigInt;
use thiserror::Error;

use crate::exactnum::Rational;
use crate::memo::{parse_list, CacheKey, MemoTable};

/// Genus plus sorted descendant levels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointKey {
    pub genus: u32,
    pub levels: Vec<u32>,
}

impl PointKey {
    pub fn new(genus: u32, levels: &[u32]) -> Self {
        let mut levels = levels.to_vec();
        levels.sort_unstable();
        PointKey { genus, levels }
    }
}

impl CacheKey for PointKey {
    fn render(&self) -> String {
        let lv: Vec<String> = self.levels.iter().map(|n| n.to_string()).collect();
        format!("{};{}", self.genus, lv.join(","))
    }

    fn parse(text: &str) -> Result<Self, String> {
        let (g, lv) = text.split_once(';').ok_or("expected `g;levels`")?;
        let genus = g.trim().parse().map_err(|_| format!("bad genus {g:?}"))?;
        let levels = parse_list(lv.trim(), |s| s.parse::<u32>().map_err(|_| format!("bad level {s:?}")))?;
        let key = PointKey::new(genus, &levels);
        if key.levels != levels {
            return Err("levels not sorted".into());
        }
        Ok(key)
    }
}

pub(crate) fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut m = n;
    while m > 1 {
        acc *= m;
        m -= 2;
    }
    acc
}

pub(crate) fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, m| acc * m)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosedFormError {
    #[error("genus-0 closed form needs at least three insertions")]
    TooFewInsertions,
    #[error("levels sum to {sum}, expected {expected}")]
    DimensionMismatch { sum: u64, expected: u64 },
}

/// `(k−3)!/∏ n_i!` for genus zero.
pub fn genus0_closed_form(levels: &[u32]) -> Result<Rational, ClosedFormError> {
    let k = levels.len() as u64;
    if k < 3 {
        return Err(ClosedFormError::TooFewInsertions);
    }
    let sum: u64 = levels.iter().map(|&n| n as u64).sum();
    if sum != k - 3 {
        return Err(ClosedFormError::DimensionMismatch { sum, expected: k - 3 });
    }
    let den = levels.iter().fold(BigInt::from(1), |acc, &n| acc * factorial(n as u64));
    Ok(Rational::from_big(factorial(k - 3), den))
}

/// Memoized oracle for ψ-class intersection numbers.
#[derive(Default)]
pub struct PointOracle {
    cache: MemoTable<PointKey>,
}

impl PointOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cache(&self) -> &MemoTable<PointKey> {
        &self.cache
    }

    /// ⟨τ_{n₁}⋯τ_{n_k}⟩_g, zero outside the stable range or off dimension.
    pub fn intersection_number(&self, genus: u32, levels: &[u32]) -> Rational {
        self.eval(&PointKey::new(genus, levels))
    }

    fn eval(&self, key: &PointKey) -> Rational {
        let g = key.genus as i64;
        let k = key.levels.len() as i64;
        let sum: i64 = key.levels.iter().map(|&n| n as i64).sum();
        if sum != 3 * g - 3 + k || 2 * g - 2 + k <= 0 {
            return Rational::zero();
        }
        if g == 0 {
            return genus0_closed_form(&key.levels).expect("dimension already checked");
        }
        if let Some(v) = self.cache.get(key) {
            return v;
        }
        let v = if g == 1 && key.levels == [1] { Rational::new(1, 24) } else { self.recurse(key) };
        self.cache.insert(key.clone(), v.clone());
        v
    }

    fn recurse(&self, key: &PointKey) -> Rational {
        let g = key.genus;
        let lv = &key.levels;
        // Sorted ascending: any string or dilaton insertion sits in front.
        if lv[0] == 0 {
            let rest = &lv[1..];
            let mut acc = Rational::zero();
            for j in 0..rest.len() {
                if rest[j] > 0 && (j == 0 || rest[j] != rest[j - 1]) {
                    let mult = rest.iter().filter(|&&n| n == rest[j]).count() as i64;
                    let mut next = rest.to_vec();
                    next[j] -= 1;
                    acc += &(Rational::integer(mult) * self.eval(&PointKey::new(g, &next)));
                }
            }
            return acc;
        }
        if lv[0] == 1 {
            let rest = &lv[1..];
            let factor = 2 * g as i64 - 2 + rest.len() as i64;
            return Rational::integer(factor) * self.eval(&PointKey::new(g, rest));
        }
        self.dvv(key)
    }

    /// Virasoro recursion removing the highest insertion τ_{k+1}.
    fn dvv(&self, key: &PointKey) -> Rational {
        let g = key.genus;
        let (top, rest) = key.levels.split_last().unwrap();
        let k = (*top - 1) as i64;
        let mut acc = Rational::zero();
        for j in 0..rest.len() {
            let d = rest[j] as i64;
            let c = Rational::from_big(double_factorial(2 * k + 2 * d + 1), double_factorial(2 * d - 1));
            let mut next = rest.to_vec();
            next[j] = (d + k) as u32;
            acc += &(c * self.eval(&PointKey::new(g, &next)));
        }
        let half = Rational::new(1, 2);
        for r in 0..k {
            let s = k - 1 - r;
            let c = &half * &Rational::from_bigint(double_factorial(2 * r + 1) * double_factorial(2 * s + 1));
            let mut inner = Rational::zero();
            if g > 0 {
                let mut next = rest.to_vec();
                next.push(r as u32);
                next.push(s as u32);
                inner += &self.eval(&PointKey::new(g - 1, &next));
            }
            let n = rest.len();
            for mask in 0u32..(1 << n) {
                let (mut left, mut right) = (vec![r as u32], vec![s as u32]);
                for (i, &lvl) in rest.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        left.push(lvl);
                    } else {
                        right.push(lvl);
                    }
                }
                for g1 in 0..=g {
                    let a = self.eval(&PointKey::new(g1, &left));
                    if a.is_zero() {
                        continue;
                    }
                    inner += &(a * self.eval(&PointKey::new(g - g1, &right)));
                }
            }
            acc += &(c * inner);
        }
        acc * Rational::from_big(BigInt::from(1), double_factorial(2 * k + 3))
    }
}
