//! Concrete instances: the correlation polytope against `Q(n)`, the CLIQUE
//! encoding, cut and correlation cones, and the rank-one PSD factors of the
//! hard pair.
//!
//! Subsets of `[n]` are `u32` bitmasks with bit `i-1` standing for element
//! `i`. Matrix variables are flattened row-major.

mod clique;
mod cuts;
mod psd;

use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyhedra::{HRep, SlackMatrix, VRep};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{dot, rat, RationalMatrix, Rational};

pub use clique::{
    box_ef, box_report, clique_number, clique_weight, max_over_cor, qall_separate, BoxReport,
    Graph, QallMode, QallResult, CLIQUE_LIMIT, QALL_EXHAUSTIVE_LIMIT,
};
pub use cuts::{
    build_cut_family, covariance_map, cut_vector, edge_index, metric_hrep, CutKind, CUT_LIMIT,
};
pub use psd::{
    psd_factors, psd_t, psd_u, spectra_check, spectra_equation_holds, spectra_vertex_witness,
    PsdReport, SpectraReport,
};

/// Largest `n` for which the `2^n`-sized hard-pair objects are built.
pub const HARDPAIR_LIMIT: usize = 10;

pub(crate) fn check_limit(what: &str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::budget(format!("{what}: n = {n} exceeds limit {limit}")));
    }
    Ok(())
}

pub(crate) fn bit(mask: u32, i: usize) -> bool {
    mask >> i & 1 == 1
}

/// `bbᵀ` for the 0/1 vector `b` of `mask`.
pub fn outer01(n: usize, mask: u32) -> RationalMatrix {
    RationalMatrix::from_fn(n, n, |i, j| {
        if bit(mask, i) && bit(mask, j) {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

/// `2 diag(a) - aaᵀ`.
pub fn objmat(n: usize, a: u32) -> RationalMatrix {
    RationalMatrix::from_fn(n, n, |i, j| match (bit(a, i), bit(a, j)) {
        (true, true) if i == j => Rational::one(),
        (true, true) => -Rational::one(),
        _ => Rational::zero(),
    })
}

/// Largest absolute entry of `2 diag(a) - aaᵀ`.
pub fn objmat_infnorm_check(n: usize, a: u32) -> Rational {
    objmat(n, a).max_abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardPair {
    pub n: usize,
    pub p: VRep,
    pub q: HRep,
}

/// `COR(n)` (points `vec(bbᵀ)`) and `Q(n)` (rows `<2diag(a) - aaᵀ, x> <= 1`),
/// both indexed in bitmask order.
pub fn build_hard_pair(n: usize) -> Result<HardPair> {
    check_limit("hard pair", n, HARDPAIR_LIMIT)?;
    let count = 1u32 << n;
    let points = (0..count).map(|b| outer01(n, b).entries().to_vec()).collect();
    let rows = (0..count).map(|a| objmat(n, a).entries().to_vec()).collect();
    let a = RationalMatrix::from_rows(rows)?;
    let a = if n == 0 { RationalMatrix::zeros(1, 0) } else { a };
    Ok(HardPair {
        n,
        p: VRep {
            dim: n * n,
            points,
            rays: vec![],
        },
        q: HRep {
            dim: n * n,
            a,
            b: vec![Rational::one(); count as usize],
        },
    })
}

/// Slack of `(COR(n), ρQ(n))` from the closed form `(1 - aᵀb)² + ρ - 1`.
pub fn hardpair_slack(n: usize, rho: &Rational) -> Result<SlackMatrix> {
    check_limit("hard pair slack", n, HARDPAIR_LIMIT)?;
    if rho < &Rational::one() {
        return Err(Error::input("rho must be at least 1"));
    }
    let count = 1usize << n;
    let shift = rho - Rational::one();
    let vertex_block = RationalMatrix::from_fn(count, count, |a, b| {
        let s = 1 - i64::from((a & b).count_ones());
        rat(s * s) + &shift
    });
    Ok(SlackMatrix {
        vertex_block,
        ray_block: RationalMatrix::zeros(count, 0),
        source_b: vec![rho.clone(); count],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub rho: Rational,
    pub samples: usize,
    /// Largest row value `<2diag(a) - aaᵀ, x0 + δx>` seen.
    #[serde(with = "serde_rational")]
    pub max_row_value: Rational,
    pub holds: bool,
}

/// Samples `x0 ∈ COR(n)` (convex combinations of two vertices) and
/// perturbations of ℓ1-norm exactly `ρ - 1`, and checks every `Q(n)` row
/// stays at most `ρ`.
pub fn neighborhood_check(n: usize, rho: &Rational, samples: usize, seed: u64) -> Result<NeighborhoodReport> {
    check_limit("neighborhood check", n, HARDPAIR_LIMIT)?;
    if rho < &Rational::one() || n == 0 {
        return Err(Error::input("need n >= 1 and rho >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<RationalMatrix> = (0..1u32 << n).map(|a| objmat(n, a)).collect();
    let radius = rho - Rational::one();
    let mut max_row_value: Option<Rational> = None;
    for _ in 0..samples {
        let (b1, b2) = (rng.gen_range(0..1u32 << n), rng.gen_range(0..1u32 << n));
        let lam = Rational::new(rng.gen_range(0..=16).into(), 16.into());
        let x0 = outer01(n, b1)
            .scale(&lam)
            .entries()
            .iter()
            .zip(outer01(n, b2).scale(&(Rational::one() - &lam)).entries())
            .map(|(p, q)| p + q)
            .collect::<Vec<_>>();
        let raw: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-8..=8)).collect();
        let norm: i64 = raw.iter().map(|v| v.abs()).sum();
        let x: Vec<Rational> = if norm == 0 {
            x0
        } else {
            x0.iter()
                .zip(&raw)
                .map(|(v, &r)| v + &radius * Rational::new(r.into(), norm.into()))
                .collect()
        };
        for w in &rows {
            let val = dot(w.entries(), &x);
            if max_row_value.as_ref().map_or(true, |m| &val > m) {
                max_row_value = Some(val);
            }
        }
    }
    let max_row_value = max_row_value.unwrap_or_else(Rational::zero);
    Ok(NeighborhoodReport {
        n,
        rho: rho.clone(),
        samples,
        holds: &max_row_value <= rho,
        max_row_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::{build_slack, shift_slack};
    use crate::ratlin::ratio;

    #[test]
    fn hard_pair_n1() {
        let hp = build_hard_pair(1).unwrap();
        assert_eq!(hp.p.points, vec![vec![rat(0)], vec![rat(1)]]);
        assert_eq!(hp.q.a, RationalMatrix::from_i64(2, 1, &[0, 1]));
        let s = build_slack(&hp.p, &hp.q).unwrap();
        assert_eq!(s.vertex_block, RationalMatrix::from_i64(2, 2, &[1, 1, 1, 0]));
    }

    #[test]
    fn objective_rows() {
        assert_eq!(objmat(2, 0b11), RationalMatrix::from_i64(2, 2, &[1, -1, -1, 1]));
        assert!(build_hard_pair(3).unwrap().p.points[0].iter().all(Zero::is_zero));
        assert!(matches!(build_hard_pair(11), Err(Error::Budget { .. })));
    }

    #[test]
    fn closed_form_matches_pipeline() {
        for n in 1..=3 {
            let hp = build_hard_pair(n).unwrap();
            let base = build_slack(&hp.p, &hp.q).unwrap();
            assert!(base.is_nonnegative());
            for rho in [rat(1), ratio(3, 2), rat(2)] {
                assert_eq!(hardpair_slack(n, &rho).unwrap(), shift_slack(&base, &rho));
            }
        }
        let s = hardpair_slack(2, &rat(2)).unwrap();
        // disjoint pair ({1}, {2})
        assert_eq!(s.vertex_block[(0b01, 0b10)], rat(2));
        let s1 = hardpair_slack(2, &rat(1)).unwrap();
        assert_eq!(s1.vertex_block[(0b01, 0b11)], rat(0));
    }

    #[test]
    fn infnorm() {
        assert_eq!(objmat_infnorm_check(4, 0), rat(0));
        assert_eq!(objmat_infnorm_check(4, 0b1111), rat(1));
        for a in 0..64 {
            let v = objmat_infnorm_check(6, a);
            assert!(v == rat(0) || v == rat(1));
        }
    }

    #[test]
    fn neighborhood_holds() {
        for rho in [rat(1), ratio(3, 2), rat(3)] {
            let rep = neighborhood_check(3, &rho, 50, 11).unwrap();
            assert!(rep.holds, "{rep:?}");
        }
    }
}
