use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rect_cover_lb, verify_factorization, NonnegFactorization};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::ratlin::rational::{approximate, to_f64};
use crate::ratlin::{lp_solve, mat_rank, LpProblem, LpResult, RationalMatrix, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Largest denominator allowed when rounding the float factor.
    pub max_den: u64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            iterations: 2000,
            restarts: 4,
            seed: 0,
            max_den: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowerWitness {
    Rank,
    RectangleCover,
    /// Rectangle-cover search ran out of budget; its partial bound is used.
    RectangleCoverPartial,
}

impl LowerWitness {
    pub fn label(self) -> &'static str {
        match self {
            LowerWitness::Rank => "rank",
            LowerWitness::RectangleCover => "rectangle-cover",
            LowerWitness::RectangleCoverPartial => "rectangle-cover (partial)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnegrkBounds {
    pub lower: usize,
    pub upper: usize,
    pub rank: usize,
    pub rect_cover: usize,
    pub lower_witness: LowerWitness,
    /// `None` means the trivial `min(rows, cols)` bound.
    pub upper_witness: Option<NonnegFactorization>,
}

impl NnegrkBounds {
    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("lower={} via {}", self.lower, self.lower_witness.label()),
            format!(
                "upper={} via {}",
                self.upper,
                if self.upper_witness.is_some() {
                    "verified factorization"
                } else {
                    "trivial"
                }
            ),
        ]
    }
}

/// Lee–Seung multiplicative updates for `S ≈ W H` in floating point.
fn multiplicative_updates(s: &[Vec<f64>], r: usize, iterations: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, n) = (s.len(), s[0].len());
    let eps = 1e-12;
    let mut w: Vec<Vec<f64>> = (0..m).map(|_| (0..r).map(|_| rng.gen::<f64>() + 0.1).collect()).collect();
    let mut h: Vec<Vec<f64>> = (0..r).map(|_| (0..n).map(|_| rng.gen::<f64>() + 0.1).collect()).collect();
    for _ in 0..iterations {
        // H <- H ∘ (WᵀS) / (WᵀWH)
        let wtw: Vec<Vec<f64>> = (0..r)
            .map(|a| (0..r).map(|b| (0..m).map(|i| w[i][a] * w[i][b]).sum()).collect())
            .collect();
        for a in 0..r {
            for j in 0..n {
                let num: f64 = (0..m).map(|i| w[i][a] * s[i][j]).sum();
                let den: f64 = (0..r).map(|b| wtw[a][b] * h[b][j]).sum::<f64>() + eps;
                h[a][j] *= num / den;
            }
        }
        // W <- W ∘ (S Hᵀ) / (W H Hᵀ)
        let hht: Vec<Vec<f64>> = (0..r)
            .map(|a| (0..r).map(|b| (0..n).map(|j| h[a][j] * h[b][j]).sum()).collect())
            .collect();
        for i in 0..m {
            for a in 0..r {
                let num: f64 = (0..n).map(|j| s[i][j] * h[a][j]).sum();
                let den: f64 = (0..r).map(|b| w[i][b] * hht[b][a]).sum::<f64>() + eps;
                w[i][a] *= num / den;
            }
        }
    }
    (w, h)
}

/// Rounds a float factor to small-denominator rationals, snapping
/// near-zeros (relative to the largest entry) to zero.
fn round_factor(f: &[Vec<f64>], max_den: u64) -> Option<RationalMatrix> {
    let scale = f.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
    if !scale.is_finite() || scale == 0.0 {
        return None;
    }
    let rows = f
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| {
                    if x.abs() < 1e-6 * scale {
                        Some(Rational::zero())
                    } else {
                        approximate(x.max(0.0), max_den)
                    }
                })
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()?;
    RationalMatrix::from_rows(rows).ok()
}

/// Completes `T` to an exact factorization by solving `T u_j = s_j, u_j >= 0`
/// column by column.
fn complete_exactly(s: &RationalMatrix, t: &RationalMatrix, budget: &Budget) -> Result<Option<NonnegFactorization>> {
    let r = t.cols();
    let mut u = RationalMatrix::zeros(r, s.cols());
    for j in 0..s.cols() {
        budget.charge(1, "exact factor completion")?;
        let mut lp = LpProblem::feasibility(r);
        lp.a = RationalMatrix::identity(r).scale(&Rational::from_integer((-1).into()));
        lp.b = vec![Rational::zero(); r];
        lp.aeq = t.clone();
        lp.beq = s.column(j);
        match lp_solve(&lp)? {
            LpResult::Optimal { point, .. } => {
                for (a, v) in point.into_iter().enumerate() {
                    u[(a, j)] = v;
                }
            }
            _ => return Ok(None),
        }
    }
    let fac = NonnegFactorization { t: t.clone(), u };
    Ok(verify_factorization(s, &fac)?.is_none().then_some(fac))
}

fn try_rank(s: &RationalMatrix, r: usize, cfg: &NmfConfig, budget: &Budget) -> Result<Option<NonnegFactorization>> {
    let sf: Vec<Vec<f64>> = (0..s.rows()).map(|i| s.row(i).iter().map(to_f64).collect()).collect();
    for restart in 0..cfg.restarts {
        budget.charge((cfg.iterations * s.rows() * s.cols() * r) as u64 / 64 + 1, "nmf heuristic")?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((r as u64) << 32) ^ restart as u64);
        let (w, h) = multiplicative_updates(&sf, r, cfg.iterations, &mut rng);
        if let Some(t) = round_factor(&w, cfg.max_den) {
            if let Some(fac) = complete_exactly(s, &t, budget)? {
                return Ok(Some(fac));
            }
        }
        // Same from the other side: round H, complete T on the transpose.
        let ht: Vec<Vec<f64>> = (0..s.cols()).map(|j| (0..r).map(|a| h[a][j]).collect()).collect();
        if let Some(ut) = round_factor(&ht, cfg.max_den) {
            if let Some(fac) = complete_exactly(&s.transpose(), &ut, budget)? {
                return Ok(Some(NonnegFactorization {
                    t: fac.u.transpose(),
                    u: fac.t.transpose(),
                }));
            }
        }
    }
    Ok(None)
}

/// `lower = max(rank, rectangle cover)`; `upper` is `min(rows, cols)` unless
/// the seeded heuristic produces a factorization that verifies exactly.
pub fn nnegrk_bounds(s: &RationalMatrix, cfg: &NmfConfig, budget: &Budget) -> Result<NnegrkBounds> {
    if let Some((i, j)) = s.first_negative() {
        return Err(Error::input(format!("negative entry at ({i}, {j})")));
    }
    let rank = mat_rank(s);
    let (rect_cover, partial) = match rect_cover_lb(s, budget) {
        Ok(rc) => (rc.bound, false),
        Err(Error::Budget { best, .. }) => (best.unwrap_or(0), true),
        Err(e) => return Err(e),
    };
    let (lower, lower_witness) = if rect_cover > rank {
        let w = if partial {
            LowerWitness::RectangleCoverPartial
        } else {
            LowerWitness::RectangleCover
        };
        (rect_cover, w)
    } else {
        (rank, LowerWitness::Rank)
    };

    let mut upper = if s.is_zero() { 0 } else { s.rows().min(s.cols()) };
    let mut upper_witness = None;
    if s.entries().iter().any(Signed::is_positive) {
        for r in lower.max(1)..upper {
            match try_rank(s, r, cfg, budget) {
                Ok(Some(fac)) => {
                    upper = fac.rank();
                    upper_witness = Some(fac);
                    break;
                }
                Ok(None) => {}
                // Running out of budget only stops the heuristic.
                Err(Error::Budget { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    if lower > upper {
        return Err(Error::internal(format!("lower bound {lower} exceeds upper bound {upper}")));
    }
    Ok(NnegrkBounds {
        lower,
        upper,
        rank,
        rect_cover,
        lower_witness,
        upper_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::hardpair_slack;
    use crate::ratlin::rat;

    fn bounds(s: &RationalMatrix) -> NnegrkBounds {
        nnegrk_bounds(s, &NmfConfig::default(), &Budget::default()).unwrap()
    }

    #[test]
    fn all_ones() {
        let b = bounds(&RationalMatrix::from_i64(4, 4, &[1; 16]));
        assert_eq!((b.lower, b.upper), (1, 1));
        let fac = b.upper_witness.unwrap();
        assert_eq!(
            verify_factorization(&RationalMatrix::from_i64(4, 4, &[1; 16]), &fac).unwrap(),
            None
        );
    }

    #[test]
    fn segment() {
        let b = bounds(&RationalMatrix::from_i64(2, 2, &[0, 1, 1, 0]));
        assert_eq!((b.lower, b.upper), (2, 2));
        assert_eq!(b.provenance()[0], "lower=2 via rank");
    }

    #[test]
    fn rectangle_cover_beats_rank() {
        // (i - j)² has rank 3 but its support is the complement of the
        // identity, whose cover number is 4.
        let s = RationalMatrix::from_fn(4, 4, |i, j| rat((i as i64 - j as i64).pow(2)));
        let b = bounds(&s);
        assert_eq!((b.rank, b.rect_cover), (3, 4));
        assert_eq!(b.lower_witness, LowerWitness::RectangleCover);
        assert_eq!(b.provenance()[0], "lower=4 via rectangle-cover");
        assert_eq!(b.upper, 4);
    }

    #[test]
    fn hard_pair_bounds_n3() {
        let s = hardpair_slack(3, &rat(1)).unwrap().full();
        let b = bounds(&s);
        // frozen from the independent oracles: elimination rank 1 + n + C(n,2)
        // and the exhaustive rectangle-cover oracle
        assert_eq!(b.rank, 7);
        assert_eq!(b.rect_cover, 7);
        assert!(b.lower >= b.rank && b.lower <= b.upper);
        if let Some(fac) = &b.upper_witness {
            assert_eq!(verify_factorization(&s, fac).unwrap(), None);
        }
    }

    /// Largest set of support entries pairwise not contained in a common
    /// all-one rectangle, by exhaustive clique search.
    fn max_fooling_set(s: &RationalMatrix) -> usize {
        let one = |i: usize, j: usize| !s[(i, j)].is_zero();
        let elems: Vec<(usize, usize)> = (0..s.rows())
            .flat_map(|i| (0..s.cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| one(i, j))
            .collect();
        assert!(elems.len() <= 128);
        let fooling: Vec<u128> = elems
            .iter()
            .map(|&(i, j)| {
                elems.iter().enumerate().fold(0u128, |m, (f, &(k, l))| {
                    if f != elems.iter().position(|&e| e == (i, j)).unwrap() && !(one(i, l) && one(k, j)) {
                        m | 1 << f
                    } else {
                        m
                    }
                })
            })
            .collect();
        fn grow(cand: u128, adj: &[u128], size: usize, best: &mut usize) {
            if cand == 0 {
                *best = (*best).max(size);
                return;
            }
            if size + cand.count_ones() as usize <= *best {
                return;
            }
            let v = cand.trailing_zeros() as usize;
            grow(cand & adj[v], adj, size + 1, best);
            grow(cand & !(1 << v), adj, size, best);
        }
        let mut best = 0;
        grow((1u128 << elems.len()) - 1, &fooling, 0, &mut best);
        best
    }

    #[test]
    fn hard_pair_cover_oracle() {
        let s = hardpair_slack(3, &rat(1)).unwrap().full();
        // 37 support entries (64 minus the 27 uniquely intersecting pairs)
        assert_eq!(s.entries().iter().filter(|v| !v.is_zero()).count(), 37);
        assert_eq!(max_fooling_set(&s), 7);
        let rc = crate::nnfact::rect_cover_lb(&s, &Budget::default()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let covered = rc.cover.iter().any(|(r, c)| r.contains(&i) && c.contains(&j));
                assert_eq!(covered, !s[(i, j)].is_zero());
            }
        }
        assert_eq!(rc.cover.len(), 7);
    }

    #[test]
    fn negative_input_rejected() {
        let s = RationalMatrix::from_i64(1, 2, &[1, -1]);
        assert!(matches!(
            nnegrk_bounds(&s, &NmfConfig::default(), &Budget::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn deterministic_for_seed() {
        let s = RationalMatrix::from_i64(3, 3, &[1, 2, 0, 2, 4, 0, 0, 0, 5]);
        assert_eq!(bounds(&s), bounds(&s));
        assert_eq!(bounds(&s).upper, 2);
    }
}
