//! Unique disjointness: shifted UDISJ matrices, the pair classes `A`/`B`,
//! the partition description of `μ`, and exact checks of the
//! expectation identities behind the corruption bound.
//!
//! Subsets of `[n]` are `u32` bitmasks, bit `i-1` for element `i`.

mod bounds;
mod scan;

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{rat, RationalMatrix, Rational};

pub use bounds::{corruption_rhs, entropy_gap, shift_rank_lb, CorruptionParams, ShiftLb};
pub use scan::{rectangle_corruption, rectangle_corruption_scan, Rectangle, ScanMode, ScanReport, ScanRow};

/// Default size limit for `build_shift`.
pub const SHIFT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdisjParams {
    pub n: usize,
    pub l: usize,
}

impl UdisjParams {
    /// Requires `n ≡ 3 (mod 4)`; then `ℓ = (n + 1) / 4`.
    pub fn new(n: usize) -> Result<Self> {
        if n % 4 != 3 {
            return Err(Error::input(format!("n = {n} is not 3 mod 4")));
        }
        if n > 31 {
            return Err(Error::input("n must be at most 31"));
        }
        Ok(UdisjParams { n, l: (n + 1) / 4 })
    }

    pub fn full(&self) -> u32 {
        ((1u64 << self.n) - 1) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairClass {
    A,
    B,
}

/// Class of `(a, b)` when both are `ℓ`-subsets meeting in at most one element.
pub fn classify(p: &UdisjParams, a: u32, b: u32) -> Option<PairClass> {
    if a.count_ones() as usize != p.l || b.count_ones() as usize != p.l {
        return None;
    }
    match (a & b).count_ones() {
        0 => Some(PairClass::A),
        1 => Some(PairClass::B),
        _ => None,
    }
}

/// All `k`-subsets of `mask`, increasing.
pub fn k_subsets(mask: u32, k: usize) -> Vec<u32> {
    let bits: Vec<u32> = (0..32).filter(|&i| mask >> i & 1 == 1).map(|i| 1 << i).collect();
    let mut out = Vec::new();
    if k > bits.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().fold(0, |m, &i| m | bits[i]));
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == bits.len() - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out.sort_unstable();
    out
}

/// Ordered pairs of `A` and of `B`, lexicographic in `(a, b)`.
pub fn enum_classes(p: &UdisjParams) -> (Vec<(u32, u32)>, Vec<(u32, u32)>) {
    let subs = k_subsets(p.full(), p.l);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for &x in &subs {
        for &y in &subs {
            match classify(p, x, y) {
                Some(PairClass::A) => a.push((x, y)),
                Some(PairClass::B) => b.push((x, y)),
                None => {}
            }
        }
    }
    (a, b)
}

/// Nonnegative function on `2^[n]`, indexed by bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionTable {
    pub n: usize,
    #[serde(with = "serde_rational::vec")]
    pub values: Vec<Rational>,
}

impl FunctionTable {
    pub fn new(n: usize, values: Vec<Rational>) -> Result<Self> {
        let f = FunctionTable { n, values };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > 24 || self.values.len() != 1 << self.n {
            return Err(Error::input(format!(
                "function table for n = {} needs 2^n values, got {}",
                self.n,
                self.values.len()
            )));
        }
        if let Some(pos) = self.values.iter().position(Signed::is_negative) {
            return Err(Error::input(format!("negative function value at subset {pos}")));
        }
        Ok(())
    }

    fn from_fn(n: usize, f: impl FnMut(u32) -> Rational) -> Self {
        FunctionTable {
            n,
            values: (0..1u32 << n).map(f).collect(),
        }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::from_fn(n, |_| c.clone())
    }

    /// Indicator of the single subset `set`.
    pub fn indicator_of(n: usize, set: u32) -> Self {
        Self::from_fn(n, |s| if s == set { Rational::one() } else { Rational::zero() })
    }

    /// Indicator of subsets containing element `i` (1-based).
    pub fn contains(n: usize, i: usize) -> Self {
        Self::from_fn(n, |s| if s >> (i - 1) & 1 == 1 { Rational::one() } else { Rational::zero() })
    }

    /// Indicator of subsets avoiding element `i` (1-based).
    pub fn avoids(n: usize, i: usize) -> Self {
        Self::from_fn(n, |s| if s >> (i - 1) & 1 == 0 { Rational::one() } else { Rational::zero() })
    }

    /// Random values `p/q` with `0 <= p <= 20`, `1 <= q <= 12`.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self::from_fn(n, |_| Rational::new(rng.gen_range(0..=20i64).into(), rng.gen_range(1..=12i64).into()))
    }

    pub fn at(&self, s: u32) -> &Rational {
        &self.values[s as usize]
    }
}

fn check_fn(p: &UdisjParams, f: &FunctionTable) -> Result<()> {
    f.validate()?;
    if f.n != p.n {
        return Err(Error::input(format!("function table is for n = {}, expected {}", f.n, p.n)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Fill {
    /// `(1 - |a ∩ b|)² + ρ - 1`.
    HardPair,
    Constant {
        #[serde(with = "serde_rational")]
        value: Rational,
    },
}

/// `M_ab = ρ` on disjoint pairs, `ρ - 1` on uniquely intersecting pairs,
/// and `fill` elsewhere; `2^n × 2^n` in bitmask order.
pub fn build_shift(n: usize, rho: &Rational, fill: &Fill, budget: &Budget) -> Result<RationalMatrix> {
    if n > SHIFT_LIMIT {
        return Err(Error::budget(format!("shift matrix: n = {n} exceeds limit {SHIFT_LIMIT}")));
    }
    if rho < &Rational::one() {
        return Err(Error::input("rho must be at least 1"));
    }
    let size = 1usize << n;
    budget.charge((size * size) as u64, "shift matrix")?;
    let shift = rho - Rational::one();
    Ok(RationalMatrix::from_fn(size, size, |a, b| {
        match (a & b).count_ones() {
            0 => rho.clone(),
            1 => shift.clone(),
            k => match fill {
                Fill::HardPair => rat((1 - i64::from(k)).pow(2)) + &shift,
                Fill::Constant { value } => value.clone(),
            },
        }
    }))
}

/// `T = (T1, T2, {i})`; `i` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionT {
    pub t1: u32,
    pub t2: u32,
    pub i: usize,
}

impl PartitionT {
    pub fn validate(&self, p: &UdisjParams) -> Result<()> {
        let ibit = if (1..=p.n).contains(&self.i) { 1u32 << (self.i - 1) } else { 0 };
        let ok = ibit != 0
            && self.t1 & self.t2 == 0
            && (self.t1 | self.t2) & ibit == 0
            && (self.t1 | self.t2 | ibit) == p.full()
            && self.t1.count_ones() as usize == 2 * p.l - 1
            && self.t2.count_ones() as usize == 2 * p.l - 1;
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("{self:?} is not a valid partition of [{}]", p.n)))
        }
    }

    fn ibit(&self) -> u32 {
        1 << (self.i - 1)
    }
}

/// All partitions, by `i` then `T1` in increasing bitmask order.
pub fn partitions(p: &UdisjParams) -> Vec<PartitionT> {
    let mut out = Vec::new();
    for i in 1..=p.n {
        let rest = p.full() & !(1 << (i - 1));
        for t1 in k_subsets(rest, 2 * p.l - 1) {
            out.push(PartitionT { t1, t2: rest & !t1, i });
        }
    }
    out
}

fn binom(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, j| acc * (n - j) as u64 / (j + 1) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuReport {
    #[serde(with = "serde_rational")]
    pub p_a: Rational,
    #[serde(with = "serde_rational")]
    pub p_b: Rational,
    /// Every pair of `A` (resp. `B`) receives the same probability.
    pub uniform_on_a: bool,
    pub uniform_on_b: bool,
    /// The support is exactly `A ∪ B`.
    pub support_is_a_union_b: bool,
    pub triples: u64,
}

/// Enumerates `(T, a, b)` and accumulates the induced distribution on pairs.
pub fn mu_class_probabilities(p: &UdisjParams, budget: &Budget) -> Result<MuReport> {
    let parts = partitions(p);
    let per = binom(2 * p.l, p.l);
    let triples = parts.len() as u64 * per * per;
    budget.charge(triples, "mu enumeration")?;
    let mut weight: HashMap<(u32, u32), u64> = HashMap::new();
    for t in &parts {
        for a in k_subsets(t.t1 | t.ibit(), p.l) {
            for b in k_subsets(t.t2 | t.ibit(), p.l) {
                *weight.entry((a, b)).or_default() += 1;
            }
        }
    }
    let total = Rational::from_integer(triples.into());
    let (ca, cb) = enum_classes(p);
    let uniform = |class: &[(u32, u32)]| {
        let first = class.first().and_then(|k| weight.get(k));
        class.iter().all(|k| weight.get(k) == first)
    };
    let mass = |class: &[(u32, u32)]| -> Rational {
        let s: u64 = class.iter().filter_map(|k| weight.get(k)).sum();
        Rational::from_integer(s.into()) / &total
    };
    let support_is_a_union_b = weight.len() == ca.len() + cb.len()
        && weight.keys().all(|&(a, b)| classify(p, a, b).is_some());
    Ok(MuReport {
        p_a: mass(&ca),
        p_b: mass(&cb),
        uniform_on_a: uniform(&ca),
        uniform_on_b: uniform(&cb),
        support_is_a_union_b,
        triples,
    })
}

fn mean<'a>(vals: impl Iterator<Item = &'a Rational>) -> Rational {
    let (s, c) = vals.fold((Rational::zero(), 0i64), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        Rational::zero()
    } else {
        s / rat(c)
    }
}

/// `(E[f(a)g(b) | A], E[f(a)g(b) | B])` under the uniform distribution on
/// each class.
pub fn cond_expect(f: &FunctionTable, g: &FunctionTable, p: &UdisjParams) -> Result<(Rational, Rational)> {
    check_fn(p, f)?;
    check_fn(p, g)?;
    let (ca, cb) = enum_classes(p);
    let prod = |class: &[(u32, u32)]| -> Vec<Rational> { class.iter().map(|&(a, b)| f.at(a) * g.at(b)).collect() };
    Ok((mean(prod(&ca).iter()), mean(prod(&cb).iter())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowColStats {
    #[serde(with = "serde_rational")]
    pub row0: Rational,
    #[serde(with = "serde_rational")]
    pub row1: Rational,
    #[serde(with = "serde_rational")]
    pub col0: Rational,
    #[serde(with = "serde_rational")]
    pub col1: Rational,
}

/// `Row_s(T) = E[f(a) | T, [i ∈ a] = s]` over `ℓ`-subsets `a` of
/// `[n] ∖ T2`, and `Col_s(T)` likewise for `g` over `[n] ∖ T1`.
pub fn row_col_stats(f: &FunctionTable, g: &FunctionTable, t: &PartitionT, p: &UdisjParams) -> Result<RowColStats> {
    check_fn(p, f)?;
    check_fn(p, g)?;
    t.validate(p)?;
    Ok(row_col_unchecked(f, g, t, p))
}

fn row_col_unchecked(f: &FunctionTable, g: &FunctionTable, t: &PartitionT, p: &UdisjParams) -> RowColStats {
    let ib = t.ibit();
    let split = |h: &FunctionTable, side: u32| -> (Rational, Rational) {
        let subs = k_subsets(p.full() & !side, p.l);
        let without = mean(subs.iter().filter(|&&s| s & ib == 0).map(|&s| h.at(s)));
        let with = mean(subs.iter().filter(|&&s| s & ib != 0).map(|&s| h.at(s)));
        (without, with)
    };
    let (row0, row1) = split(f, t.t2);
    let (col0, col1) = split(g, t.t1);
    RowColStats { row0, row1, col0, col1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RazborovReport {
    pub n: usize,
    pub l: usize,
    pub partitions: usize,
    #[serde(with = "serde_rational")]
    pub e_x_given_a: Rational,
    #[serde(with = "serde_rational")]
    pub e_row0_col0: Rational,
    #[serde(with = "serde_rational")]
    pub e_x_given_b: Rational,
    #[serde(with = "serde_rational")]
    pub e_row1_col1: Rational,
    /// `E[Row_0 | T2] = E[Row_1 | T2]` for every `T2`.
    pub row_marginals_agree: bool,
    /// `(Row_0 + Row_1) / 2 = E[f(a) | T]` for every `T`.
    pub row_average_identity: bool,
}

impl RazborovReport {
    pub fn holds(&self) -> bool {
        self.e_x_given_a == self.e_row0_col0
            && self.e_x_given_b == self.e_row1_col1
            && self.row_marginals_agree
            && self.row_average_identity
    }
}

/// Checks the identities by full enumeration over partitions. The class
/// expectations come from the pair lists, the right-hand sides from the
/// Row/Col statistics, so the two sides take independent paths.
pub fn razborov_identities(f: &FunctionTable, g: &FunctionTable, p: &UdisjParams, budget: &Budget) -> Result<RazborovReport> {
    check_fn(p, f)?;
    check_fn(p, g)?;
    let parts = partitions(p);
    budget.charge(parts.len() as u64 * binom(2 * p.l, p.l) * 2, "razborov identities")?;
    let (e_x_given_a, e_x_given_b) = cond_expect(f, g, p)?;
    let stats: Vec<RowColStats> = parts.par_iter().map(|t| row_col_unchecked(f, g, t, p)).collect();

    let e_row0_col0 = mean(stats.iter().map(|s| &s.row0 * &s.col0).collect::<Vec<_>>().iter());
    let e_row1_col1 = mean(stats.iter().map(|s| &s.row1 * &s.col1).collect::<Vec<_>>().iter());

    let mut by_t2: HashMap<u32, (Rational, Rational)> = HashMap::new();
    for (t, s) in parts.iter().zip(&stats) {
        let e = by_t2.entry(t.t2).or_insert_with(|| (Rational::zero(), Rational::zero()));
        e.0 += &s.row0;
        e.1 += &s.row1;
    }
    let row_marginals_agree = by_t2.values().all(|(r0, r1)| r0 == r1);

    let half = Rational::new(1.into(), 2.into());
    let row_average_identity = parts.iter().zip(&stats).all(|(t, s)| {
        let direct = mean(k_subsets(t.t1 | t.ibit(), p.l).iter().map(|&a| f.at(a)));
        (&s.row0 + &s.row1) * &half == direct
    });

    Ok(RazborovReport {
        n: p.n,
        l: p.l,
        partitions: parts.len(),
        e_x_given_a,
        e_row0_col0,
        e_x_given_b,
        e_row1_col1,
        row_marginals_agree,
        row_average_identity,
    })
}

/// `trials` random rational pairs `(f, g)` from one seed.
pub fn random_trials(p: &UdisjParams, trials: usize, seed: u64, budget: &Budget) -> Result<Vec<RazborovReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let f = FunctionTable::random(p.n, &mut rng);
            let g = FunctionTable::random(p.n, &mut rng);
            razborov_identities(&f, &g, p, budget)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::ratio;

    fn p(n: usize) -> UdisjParams {
        UdisjParams::new(n).unwrap()
    }

    #[test]
    fn params() {
        assert_eq!(p(7).l, 2);
        assert!(UdisjParams::new(5).is_err());
    }

    #[test]
    fn subsets() {
        assert_eq!(k_subsets(0b1011, 2), vec![0b0011, 0b1001, 0b1010]);
        assert_eq!(k_subsets(0b111, 0), vec![0]);
        assert!(k_subsets(0b1, 2).is_empty());
    }

    #[test]
    fn shift_small() {
        let b = Budget::default();
        assert_eq!(
            build_shift(1, &rat(1), &Fill::HardPair, &b).unwrap(),
            RationalMatrix::from_i64(2, 2, &[1, 1, 1, 0])
        );
        assert_eq!(
            build_shift(1, &rat(2), &Fill::HardPair, &b).unwrap(),
            RationalMatrix::from_i64(2, 2, &[2, 2, 2, 1])
        );
        let m = build_shift(2, &rat(1), &Fill::HardPair, &b).unwrap();
        assert_eq!(m[(3, 3)], rat(1));
        let c = build_shift(2, &ratio(3, 2), &Fill::Constant { value: rat(9) }, &b).unwrap();
        for a in 0..4usize {
            for bb in 0..4usize {
                match (a & bb).count_ones() {
                    0 => assert_eq!(c[(a, bb)], &m[(a, bb)] + ratio(1, 2)),
                    1 => assert_eq!(c[(a, bb)], ratio(1, 2)),
                    _ => assert_eq!(c[(a, bb)], rat(9)),
                }
            }
        }
        assert!(matches!(build_shift(15, &rat(1), &Fill::HardPair, &b), Err(Error::Budget { .. })));
    }

    #[test]
    fn class_counts() {
        let (a, b) = enum_classes(&p(3));
        assert_eq!((a.len(), b.len()), (6, 3));
        let (a, b) = enum_classes(&p(7));
        assert_eq!((a.len(), b.len()), (210, 210));
        assert!(a.iter().all(|x| !b.contains(x)));
    }

    #[test]
    fn mu_probabilities() {
        for n in [3, 7] {
            let r = mu_class_probabilities(&p(n), &Budget::default()).unwrap();
            assert_eq!((r.p_a.clone(), r.p_b.clone()), (ratio(3, 4), ratio(1, 4)));
            assert!(r.uniform_on_a && r.uniform_on_b && r.support_is_a_union_b);
        }
        assert_eq!(mu_class_probabilities(&p(3), &Budget::default()).unwrap().triples, 3 * 2 * 4);
    }

    #[test]
    fn conditional_expectations() {
        let q = p(3);
        let one = FunctionTable::constant(3, rat(1));
        assert_eq!(cond_expect(&one, &one, &q).unwrap(), (rat(1), rat(1)));
        let e1 = FunctionTable::indicator_of(3, 0b001);
        assert_eq!(cond_expect(&e1, &e1, &q).unwrap(), (rat(0), ratio(1, 3)));
        let (_, eb) = cond_expect(&FunctionTable::contains(3, 1), &FunctionTable::avoids(3, 1), &q).unwrap();
        assert_eq!(eb, rat(0));
        let neg = FunctionTable { n: 3, values: vec![rat(-1); 8] };
        assert!(cond_expect(&neg, &one, &q).is_err());
    }

    #[test]
    fn row_col_example() {
        let q = p(3);
        let t = PartitionT { t1: 0b010, t2: 0b100, i: 1 };
        let f = FunctionTable::indicator_of(3, 0b001);
        let one = FunctionTable::constant(3, rat(1));
        let s = row_col_stats(&f, &one, &t, &q).unwrap();
        assert_eq!((s.row0, s.row1), (rat(0), rat(1)));
        assert_eq!((s.col0, s.col1), (rat(1), rat(1)));
        let bad = PartitionT { t1: 0b011, t2: 0b100, i: 1 };
        assert!(row_col_stats(&f, &one, &bad, &q).is_err());
    }

    #[test]
    fn identities_constant_and_indicator() {
        let one = FunctionTable::constant(3, rat(1));
        let r = razborov_identities(&one, &one, &p(3), &Budget::default()).unwrap();
        assert!(r.holds());
        assert_eq!(r.e_x_given_a, rat(1));
        let c = FunctionTable::contains(7, 1);
        assert!(razborov_identities(&c, &c, &p(7), &Budget::default()).unwrap().holds());
    }

    #[test]
    fn identities_random() {
        for r in random_trials(&p(3), 20, 1, &Budget::default()).unwrap() {
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn json_table() {
        let f: FunctionTable = serde_json::from_str(r#"{"n":1,"values":["1/2","3"]}"#).unwrap();
        assert_eq!(f.values, vec![ratio(1, 2), rat(3)]);
        assert!(serde_json::from_str::<FunctionTable>(r#"{"n":1,"values":["1/0","3"]}"#).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn identities_hold_for_random_tables(seed in any::<u64>()) {
            let p = UdisjParams::new(3).unwrap();
            for r in random_trials(&p, 2, seed, &Budget::default()).unwrap() {
                prop_assert!(r.holds());
            }
        }

        #[test]
        fn shift_on_a_union_b_ignores_fill(n in 1usize..=4, num in 2i64..20, den in 1i64..4, c in 0i64..9) {
            let rho = Rational::new(num.into(), den.into()).max(Rational::one());
            let b = Budget::default();
            let x = build_shift(n, &rho, &Fill::HardPair, &b).unwrap();
            let y = build_shift(n, &rho, &Fill::Constant { value: rat(c) }, &b).unwrap();
            for a in 0..1usize << n {
                for bb in 0..1usize << n {
                    if (a & bb).count_ones() <= 1 {
                        prop_assert_eq!(&x[(a, bb)], &y[(a, bb)]);
                    }
                }
            }
        }

        #[test]
        fn rhs_strictly_decreasing(eps in 0.01f64..1.0, l in 1usize..500) {
            let p = CorruptionParams { eps, c: 0.0 };
            prop_assert!(corruption_rhs(&p, l + 1).unwrap() < corruption_rhs(&p, l).unwrap());
        }

        #[test]
        fn lb_nonincreasing_in_rho(n in 3usize..5000, eps in 0.01f64..0.4, r in 1u32..100) {
            let lo = Rational::new((100 + r as i64).into(), 100.into());
            let hi = &lo + Rational::new(1.into(), 7.into());
            if eps < 1.0 / crate::ratlin::rational::to_f64(&hi) {
                let a = shift_rank_lb(n, &lo, Some(eps), 0.0).unwrap().value;
                let b = shift_rank_lb(n, &hi, Some(eps), 0.0).unwrap().value;
                prop_assert!(b <= a);
            }
        }
    }

    #[test]
    fn entropy_grid() {
        let mut near_zero = Vec::new();
        for k in 1..10_000 {
            let x = k as f64 / 10_000.0;
            let g = entropy_gap(x).unwrap();
            assert!(g >= -1e-12, "{x}: {g}");
            if g < 1e-12 {
                near_zero.push(x);
            }
        }
        assert!(near_zero.iter().all(|x| (x - 0.5).abs() < 0.01));
    }
}
