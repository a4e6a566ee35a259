use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{bit, check_limit, outer01};
use crate::error::{Error, Result};
use crate::polyhedra::{HRep, VRep};
use crate::ratlin::{rat, RationalMatrix, Rational};

pub const CUT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    CutPolytope,
    CutCone,
    CorrelationCone,
}

/// Position of edge `{i, j}` (0-based, `i < j`) in lexicographic order.
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Characteristic vector of `δ(X)` for `X ⊆ [n]` given as a bitmask.
pub fn cut_vector(n: usize, x: u32) -> Vec<Rational> {
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            v.push(if bit(x, i) != bit(x, j) { Rational::one() } else { Rational::zero() });
        }
    }
    v
}

/// Cut polytope/cone of `K_n` (cuts `δ(X)` with `X ⊆ [n-1]`) or the
/// correlation cone of dimension `(n-1)²`.
pub fn build_cut_family(kind: CutKind, n: usize) -> Result<VRep> {
    check_limit("cut family", n, CUT_LIMIT)?;
    if n < 2 {
        return Err(Error::input("cut families need n >= 2"));
    }
    let m = n - 1;
    let edges = n * m / 2;
    let cuts = (0..1u32 << m).map(|x| cut_vector(n, x));
    Ok(match kind {
        CutKind::CutPolytope => VRep {
            dim: edges,
            points: cuts.collect(),
            rays: vec![],
        },
        CutKind::CutCone => VRep {
            dim: edges,
            points: vec![vec![Rational::zero(); edges]],
            rays: cuts.skip(1).collect(),
        },
        CutKind::CorrelationCone => VRep {
            dim: m * m,
            points: vec![vec![Rational::zero(); m * m]],
            rays: (1..1u32 << m).map(|b| outer01(m, b).entries().to_vec()).collect(),
        },
    })
}

/// Triangle inequalities `x_ij - x_ik - x_jk <= 0` (three per triple) and,
/// when `bounded`, the perimeter rows `x_ij + x_ik + x_jk <= 2`. For `n <= 4`
/// these describe `CUT(n)` (bounded) and `CUTCONE(n)` exactly.
pub fn metric_hrep(n: usize, bounded: bool) -> HRep {
    let dim = n * n.saturating_sub(1) / 2;
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let e = [edge_index(n, i, j), edge_index(n, i, k), edge_index(n, j, k)];
                for pos in 0..3 {
                    let mut row = vec![Rational::zero(); dim];
                    for (q, &idx) in e.iter().enumerate() {
                        row[idx] = if q == pos { rat(1) } else { rat(-1) };
                    }
                    rows.push(row);
                    b.push(Rational::zero());
                }
                if bounded {
                    let mut row = vec![Rational::zero(); dim];
                    for &idx in &e {
                        row[idx] = rat(1);
                    }
                    rows.push(row);
                    b.push(rat(2));
                }
            }
        }
    }
    let a = if rows.is_empty() {
        RationalMatrix::zeros(0, dim)
    } else {
        RationalMatrix::from_rows(rows).expect("rows have equal length")
    };
    HRep { dim, a, b }
}

/// Covariance map with distinguished node `n`: `y_ii = x_in`,
/// `y_ij = (x_in + x_jn - x_ij) / 2`.
pub fn covariance_map(x: &[Rational], n: usize) -> Result<RationalMatrix> {
    if n < 2 || x.len() != n * (n - 1) / 2 {
        return Err(Error::input(format!(
            "expected {} edge coordinates for n = {n}",
            n * n.saturating_sub(1) / 2
        )));
    }
    let m = n - 1;
    let last = |i: usize| &x[edge_index(n, i, m)];
    let two = rat(2);
    let y = RationalMatrix::from_fn(m, m, |i, j| {
        if i == j {
            last(i).clone()
        } else {
            let (p, q) = (i.min(j), i.max(j));
            (last(i) + last(j) - &x[edge_index(n, p, q)]) / &two
        }
    });
    let binary = x.iter().all(|v| v.is_zero() || v.is_one());
    if binary && y.entries().iter().any(|v| !v.is_integer()) {
        return Err(Error::internal("covariance map left the integers on a 0/1 vector"));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::{
        ef_contains_points, ef_inside_hrep, homogenize, ExtendedFormulation, Inclusion,
    };
    use std::collections::HashSet;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn edge_order() {
        let n = 4;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(edge_index(n, i, j), k);
                k += 1;
            }
        }
    }

    #[test]
    fn cut3() {
        let p = build_cut_family(CutKind::CutPolytope, 3).unwrap();
        assert_eq!(p.points, vec![v(&[0, 0, 0]), v(&[1, 1, 0]), v(&[1, 0, 1]), v(&[0, 1, 1])]);
        let c = build_cut_family(CutKind::CutCone, 3).unwrap();
        assert_eq!(c.rays, p.points[1..].to_vec());
        let cor = build_cut_family(CutKind::CorrelationCone, 3).unwrap();
        assert!(cor.rays.contains(&v(&[1, 1, 1, 1])));
        assert_eq!(cor.rays.len(), 3);
    }

    #[test]
    fn metric_rows_are_valid_for_cuts() {
        for n in 3..=5 {
            let h = metric_hrep(n, true);
            for x in 0..1u32 << n {
                assert!(h.contains(&cut_vector(n, x)));
            }
        }
        assert_eq!(metric_hrep(3, false).rows(), 3);
        assert_eq!(metric_hrep(3, true).rows(), 4);
    }

    #[test]
    fn covariance_examples() {
        assert!(covariance_map(&v(&[0, 0, 0]), 3).unwrap().is_zero());
        assert_eq!(covariance_map(&v(&[1, 1, 0]), 3).unwrap(), outer01(2, 0b01));
        assert_eq!(covariance_map(&v(&[0, 1, 1]), 3).unwrap(), outer01(2, 0b11));
    }

    #[test]
    fn covariance_bijection() {
        for n in 2..=5 {
            let m = n - 1;
            let images: HashSet<RationalMatrix> = (0..1u32 << m)
                .map(|x| {
                    let y = covariance_map(&cut_vector(n, x), n).unwrap();
                    assert_eq!(y, outer01(m, x));
                    y
                })
                .collect();
            assert_eq!(images.len(), 1 << m);
        }
    }

    #[test]
    fn homogenized_cut3_is_cutcone3() {
        let k = homogenize(&ExtendedFormulation::trivial(&metric_hrep(3, true)));
        let cone = build_cut_family(CutKind::CutCone, 3).unwrap();
        assert!(ef_contains_points(&cone, &k).unwrap().passed());
        assert!(matches!(
            ef_inside_hrep(&k, &metric_hrep(3, false)).unwrap(),
            Inclusion::Inside(_)
        ));
    }
}
