//! Degree-graded descendant invariants of P¹.
//!
//! Classes: `0` is the identity γ₀, `1` is the point class γ₁. The
//! recursion strips string, dilaton and divisor insertions, then applies the
//! Virasoro constraint to the highest descendant of γ₀. What remains is the
//! stationary sector (only γ₁ insertions), evaluated through the
//! Gromov–Witten/Hurwitz correspondence with completed cycles.

use num_bigint::BigInt;

use crate::exactnum::Rational;
use crate::memo::{CacheKey, MemoTable};
use crate::point_gw::factorial;

/// One insertion τ_level(γ_class).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Insertion {
    pub level: u32,
    pub class: u8,
}

impl Insertion {
    pub const fn new(level: u32, class: u8) -> Self {
        Insertion { level, class }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct P1Key {
    pub genus: u32,
    pub degree: u32,
    pub insertions: Vec<Insertion>,
}

impl P1Key {
    pub fn new(genus: u32, degree: u32, insertions: &[Insertion]) -> Self {
        let mut insertions = insertions.to_vec();
        insertions.sort_unstable();
        P1Key { genus, degree, insertions }
    }
}

impl CacheKey for P1Key {
    fn render(&self) -> String {
        let ins: Vec<String> = self.insertions.iter().map(|x| format!("({},{})", x.level, x.class)).collect();
        format!("{};{};{}", self.genus, self.degree, ins.join(","))
    }

    fn parse(text: &str) -> Result<Self, String> {
        let mut parts = text.splitn(3, ';');
        let g = parts.next().ok_or("missing genus")?;
        let d = parts.next().ok_or("missing degree")?;
        let ins = parts.next().ok_or("missing insertions")?.trim();
        let genus = g.trim().parse().map_err(|_| format!("bad genus {g:?}"))?;
        let degree = d.trim().parse().map_err(|_| format!("bad degree {d:?}"))?;
        let mut out = Vec::new();
        let mut rest = ins;
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(|| format!("expected '(' in {ins:?}"))?;
            let (pair, tail) = body.split_once(')').ok_or_else(|| format!("unclosed pair in {ins:?}"))?;
            let (n, q) = pair.split_once(',').ok_or_else(|| format!("bad pair {pair:?}"))?;
            let level = n.trim().parse().map_err(|_| format!("bad level {n:?}"))?;
            let class: u8 = q.trim().parse().map_err(|_| format!("bad class {q:?}"))?;
            if class > 1 {
                return Err(format!("class {class} out of range"));
            }
            out.push(Insertion::new(level, class));
            rest = tail.strip_prefix(',').unwrap_or(tail);
        }
        let key = P1Key::new(genus, degree, &out);
        if key.insertions != out {
            return Err("insertions not sorted".into());
        }
        Ok(key)
    }
}

/// ∫_{P¹} γ_a ∪ γ_b ∪ γ_c.
pub fn classical_triple(a: u8, b: u8, c: u8) -> Rational {
    if a as u32 + b as u32 + c as u32 == 1 {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Elementary symmetric polynomial e_r(x, x+1, …, x+k).
fn elem_consecutive(x: i64, k: i64, r: usize) -> Rational {
    let mut e = vec![BigInt::from(0); r + 1];
    e[0] = BigInt::from(1);
    for j in 0..=k {
        let v = BigInt::from(x + j);
        for i in (1..=r).rev() {
            let prev = e[i - 1].clone();
            e[i] += prev * &v;
        }
    }
    Rational::from_bigint(e[r].clone())
}

fn remove_at(v: &[Insertion], i: usize) -> Vec<Insertion> {
    let mut out = v.to_vec();
    out.remove(i);
    out
}

/// Memoized P¹ oracle.
#[derive(Default)]
pub struct P1Oracle {
    cache: MemoTable<P1Key>,
}

impl P1Oracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cache(&self) -> &MemoTable<P1Key> {
        &self.cache
    }

    pub fn invariant(&self, genus: u32, degree: u32, insertions: &[Insertion]) -> Rational {
        self.eval(&P1Key::new(genus, degree, insertions))
    }

    fn dimension_ok(key: &P1Key) -> bool {
        let lhs: i64 = key.insertions.iter().map(|x| x.level as i64 + x.class as i64).sum();
        lhs == 2 * key.genus as i64 - 2 + 2 * key.degree as i64 + key.insertions.len() as i64
    }

    fn stable(genus: u32, degree: u32, n: usize) -> bool {
        degree > 0 || 2 * genus as i64 - 2 + n as i64 > 0
    }

    fn eval(&self, key: &P1Key) -> Rational {
        let n = key.insertions.len();
        if !Self::dimension_ok(key) || !Self::stable(key.genus, key.degree, n) {
            return Rational::zero();
        }
        if key.genus == 0 && key.degree == 0 {
            let points = key.insertions.iter().filter(|x| x.class == 1).count();
            if points != 1 {
                return Rational::zero();
            }
            let den = key.insertions.iter().fold(BigInt::from(1), |acc, x| acc * factorial(x.level as u64));
            return Rational::from_big(factorial(n as u64 - 3), den);
        }
        if n == 0 {
            // Only ⟨⟩_{0,1} survives the dimension check: the single line.
            return Rational::one();
        }
        if let Some(v) = self.cache.get(key) {
            return v;
        }
        let v = self.recurse(key);
        self.cache.insert(key.clone(), v.clone());
        v
    }

    fn recurse(&self, key: &P1Key) -> Rational {
        let (g, d) = (key.genus, key.degree);
        let ins = &key.insertions;
        let n = ins.len();
        let rest_stable = Self::stable(g, d, n - 1);

        if let Some(i) = ins.iter().position(|x| *x == Insertion::new(0, 0)) {
            let rest = remove_at(ins, i);
            return self.string(g, d, &rest);
        }
        if let Some(i) = ins.iter().position(|x| *x == Insertion::new(1, 0)) {
            let rest = remove_at(ins, i);
            if rest_stable {
                let factor = 2 * g as i64 - 2 + rest.len() as i64;
                return Rational::integer(factor) * self.eval(&P1Key::new(g, d, &rest));
            }
            // Only ⟨τ₁(γ₀)⟩_{1,0} reaches here; L₀ relates it to ⟨τ₀(γ₁)⟩_{1,0}.
            return self.virasoro(g, d, 0, &rest);
        }
        if rest_stable {
            if let Some(i) = ins.iter().position(|x| *x == Insertion::new(0, 1)) {
                let rest = remove_at(ins, i);
                return self.divisor(g, d, &rest);
            }
        }
        if let Some(i) = (0..n).filter(|&i| ins[i].class == 0).max_by_key(|&i| ins[i].level) {
            let k = ins[i].level as i64 - 1;
            let rest = remove_at(ins, i);
            return self.virasoro(g, d, k, &rest);
        }
        let levels: Vec<u32> = ins.iter().map(|x| x.level).collect();
        stationary::connected(d, &levels)
    }

    fn string(&self, g: u32, d: u32, rest: &[Insertion]) -> Rational {
        let mut acc = Rational::zero();
        for j in 0..rest.len() {
            if rest[j].level > 0 {
                let mut next = rest.to_vec();
                next[j].level -= 1;
                acc += &self.eval(&P1Key::new(g, d, &next));
            }
        }
        acc
    }

    fn divisor(&self, g: u32, d: u32, rest: &[Insertion]) -> Rational {
        let mut acc = Rational::integer(d as i64) * self.eval(&P1Key::new(g, d, rest));
        for j in 0..rest.len() {
            if rest[j].class == 0 && rest[j].level > 0 {
                let mut next = rest.to_vec();
                next[j] = Insertion::new(rest[j].level - 1, 1);
                acc += &self.eval(&P1Key::new(g, d, &next));
            }
        }
        acc
    }

    /// Right-hand side of the L_k constraint for ⟨τ_{k+1}(γ₀) X⟩_{g,d},
    /// already divided by (k+1)!.
    pub(crate) fn virasoro(&self, g: u32, d: u32, k: i64, rest: &[Insertion]) -> Rational {
        let ku = k as u32;
        let mut acc = Rational::zero();

        let mut with_top = rest.to_vec();
        with_top.push(Insertion::new(ku, 1));
        let self_coeff = Rational::integer(-2) * elem_consecutive(1, k, k as usize);
        acc += &(self_coeff * self.eval(&P1Key::new(g, d, &with_top)));

        for j in 0..rest.len() {
            let x = rest[j];
            let m = x.level as i64;
            let b = x.class as i64;
            let c0 = elem_consecutive(b + m, k, k as usize + 1);
            if !c0.is_zero() {
                let mut next = rest.to_vec();
                next[j].level = (m + k) as u32;
                acc += &(c0 * self.eval(&P1Key::new(g, d, &next)));
            }
            if x.class == 0 && m + k >= 1 {
                let c1 = Rational::integer(2) * elem_consecutive(m, k, k as usize);
                if !c1.is_zero() {
                    let mut next = rest.to_vec();
                    next[j] = Insertion::new((m + k - 1) as u32, 1);
                    acc += &(c1 * self.eval(&P1Key::new(g, d, &next)));
                }
            }
        }

        for b in 0..=(k - 2) {
            let e = k - 2 - b;
            let c = Rational::from_bigint(factorial(b as u64 + 1) * factorial((k - 1 - b) as u64));
            let (pb, pe) = (Insertion::new(b as u32, 1), Insertion::new(e as u32, 1));
            let mut inner = Rational::zero();
            if g > 0 {
                let mut next = rest.to_vec();
                next.push(pb);
                next.push(pe);
                inner += &self.eval(&P1Key::new(g - 1, d, &next));
            }
            let n = rest.len();
            for mask in 0u32..(1 << n) {
                let (mut left, mut right) = (vec![pb], vec![pe]);
                for (i, x) in rest.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        left.push(*x);
                    } else {
                        right.push(*x);
                    }
                }
                for g1 in 0..=g {
                    for d1 in 0..=d {
                        let a = self.eval(&P1Key::new(g1, d1, &left));
                        if a.is_zero() {
                            continue;
                        }
                        inner += &(a * self.eval(&P1Key::new(g - g1, d - d1, &right)));
                    }
                }
            }
            acc += &(c * inner);
        }
        acc * Rational::from_big(BigInt::from(1), factorial(k as u64 + 1))
    }
}

pub(crate) mod stationary {
    //! ⟨∏ τ_{k_i}(ω)⟩_{g,d} from completed cycles.

    use std::collections::HashMap;

    use num_bigint::BigInt;

    use crate::exactnum::Rational;
    use crate::point_gw::factorial;

    fn partitions(n: u32) -> Vec<Vec<u32>> {
        fn go(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if n == 0 {
                out.push(cur.clone());
                return;
            }
            for p in (1..=n.min(max)).rev() {
                cur.push(p);
                go(n - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(n, n, &mut Vec::new(), &mut out);
        out
    }

    /// Number of standard Young tableaux, by the hook length formula.
    fn dimension(lambda: &[u32]) -> BigInt {
        let n: u32 = lambda.iter().sum();
        let mut hooks = BigInt::from(1);
        for (i, &row) in lambda.iter().enumerate() {
            for j in 0..row {
                let arm = row - j - 1;
                let leg = lambda[i + 1..].iter().filter(|&&r| r > j).count() as u32;
                hooks *= arm + leg + 1;
            }
        }
        factorial(n as u64) / hooks
    }

    fn bernoulli(n: usize) -> Vec<Rational> {
        // B_0..B_n with B_1 = -1/2.
        let mut b = vec![Rational::zero(); n + 1];
        b[0] = Rational::one();
        for m in 1..=n {
            let mut acc = Rational::zero();
            for j in 0..m {
                let binom = factorial(m as u64 + 1) / (factorial(j as u64) * factorial((m + 1 - j) as u64));
                acc += &(Rational::from_bigint(binom) * b[j].clone());
            }
            b[m] = -acc * Rational::new(1, m as i64 + 1);
        }
        b
    }

    /// Completed cycle value p_k(λ).
    fn completed(k: u32, lambda: &[u32], bern: &[Rational]) -> Rational {
        let half = Rational::new(1, 2);
        let mut acc = Rational::zero();
        for (i, &part) in lambda.iter().enumerate() {
            let shifted = Rational::integer(-(i as i64 + 1)) + &half;
            let moved = Rational::integer(part as i64) + &shifted;
            acc += &(moved.pow(k) - shifted.pow(k));
        }
        // (1 − 2^{−k}) ζ(−k), ζ(−k) = −B_{k+1}/(k+1) for k ≥ 1.
        let zeta = -bern[k as usize + 1].clone() * Rational::new(1, k as i64 + 1);
        let two_k = Rational::from_bigint(BigInt::from(1) << k as usize);
        acc + (Rational::one() - two_k.recip()) * zeta
    }

    /// Disconnected stationary invariants for every degree 0..=max_d, for the
    /// insertion levels in `levels`.
    fn disconnected(levels: &[u32], max_d: u32) -> Vec<Rational> {
        let kmax = levels.iter().copied().max().unwrap_or(0) + 1;
        let bern = bernoulli(kmax as usize + 1);
        (0..=max_d)
            .map(|d| {
                let dfact = Rational::from_bigint(factorial(d as u64));
                let mut total = Rational::zero();
                for lambda in partitions(d) {
                    let w = Rational::from_bigint(dimension(&lambda)) / &dfact;
                    let mut term = &w * &w;
                    for &k in levels {
                        term = term * completed(k + 1, &lambda, &bern)
                            / Rational::from_bigint(factorial(k as u64 + 1));
                    }
                    total += &term;
                }
                total
            })
            .collect()
    }

    /// Connected ⟨∏ τ_{k_i}(ω)⟩_{g,d}.
    pub fn connected(d: u32, levels: &[u32]) -> Rational {
        let n = levels.len();
        let full = (1u32 << n) - 1;
        let exp_neg: Vec<Rational> = (0..=d)
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                Rational::from_big(BigInt::from(sign), factorial(j as u64))
            })
            .collect();
        // G(B) = Z•(B)·e^{−q}, truncated at degree d.
        let mut gser: HashMap<u32, Vec<Rational>> = HashMap::new();
        for mask in 1..=full {
            let sub: Vec<u32> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| levels[i]).collect();
            let z = disconnected(&sub, d);
            let series: Vec<Rational> = (0..=d as usize)
                .map(|e| (0..=e).map(|j| &z[j] * &exp_neg[e - j]).sum())
                .collect();
            gser.insert(mask, series);
        }
        let mut fser: HashMap<u32, Vec<Rational>> = HashMap::new();
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let mut f = gser[&mask].clone();
            let others = mask & !low;
            // Proper sub-blocks containing the lowest element.
            let mut sub = others;
            loop {
                let block = sub | low;
                if block != mask {
                    let fb = &fser[&block];
                    let gr = &gser[&(mask & !block)];
                    for e in 0..=d as usize {
                        for j in 0..=e {
                            f[e] -= &(&fb[j] * &gr[e - j]);
                        }
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & others;
            }
            fser.insert(mask, f);
        }
        // The genus is fixed by dimension, so the degree-d coefficient is the
        // requested invariant once the caller has checked the dimension.
        fser[&full][d as usize].clone()
    }
}
