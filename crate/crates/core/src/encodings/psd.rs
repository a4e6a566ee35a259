use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bit, check_limit, objmat, outer01, HARDPAIR_LIMIT};
use crate::error::Result;
use crate::ratlin::{dot, rat, RationalMatrix};

fn lifted(n: usize, mask: u32, head: i64) -> Vec<i64> {
    std::iter::once(head)
        .chain((0..n).map(|i| i64::from(bit(mask, i))))
        .collect()
}

fn outer_i64(v: &[i64]) -> RationalMatrix {
    RationalMatrix::from_fn(v.len(), v.len(), |i, j| rat(v[i] * v[j]))
}

/// `T_a = (-1; a)(-1; a)ᵀ`.
pub fn psd_t(n: usize, a: u32) -> RationalMatrix {
    outer_i64(&lifted(n, a, -1))
}

/// `U^b = (1; b)(1; b)ᵀ`.
pub fn psd_u(n: usize, b: u32) -> RationalMatrix {
    outer_i64(&lifted(n, b, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub n: usize,
    pub pairs_checked: u64,
    /// First `(a, b)` in bitmask order with `<T_a, U^b> != (1 - aᵀb)²`.
    pub mismatch: Option<(u32, u32)>,
}

impl PsdReport {
    pub fn holds(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Checks `<T_a, U^b> = (1 - aᵀb)²` for all `4^n` pairs. The Frobenius
/// product is summed entrywise over the explicit factor matrices; entries
/// are small integers, so machine integers are exact here.
pub fn psd_factors(n: usize) -> Result<PsdReport> {
    check_limit("psd factors", n, HARDPAIR_LIMIT)?;
    let count = 1u32 << n;
    let dim = n + 1;
    let full = |v: Vec<i64>| -> Vec<i64> {
        let mut m = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                m.push(v[i] * v[j]);
            }
        }
        m
    };
    let ts: Vec<Vec<i64>> = (0..count).map(|a| full(lifted(n, a, -1))).collect();
    let us: Vec<Vec<i64>> = (0..count).map(|b| full(lifted(n, b, 1))).collect();
    let mismatch = (0..count)
        .into_par_iter()
        .find_map_first(|a| {
            (0..count).find_map(|b| {
                let inner: i64 = ts[a as usize].iter().zip(&us[b as usize]).map(|(x, y)| x * y).sum();
                let s = 1 - i64::from((a & b).count_ones());
                (inner != s * s).then_some((a, b))
            })
        });
    Ok(PsdReport {
        n,
        pairs_checked: u64::from(count) * u64::from(count),
        mismatch,
    })
}

/// `<2diag(a) - aaᵀ, x> + <T_a, Y> = 1`.
pub fn spectra_equation_holds(n: usize, a: u32, x: &RationalMatrix, y: &RationalMatrix) -> bool {
    let lhs = dot(objmat(n, a).entries(), x.entries()) + dot(psd_t(n, a).entries(), y.entries());
    lhs == rat(1)
}

/// First `a` whose equation fails at `(x, Y)`, if any.
pub fn spectra_check(n: usize, x: &RationalMatrix, y: &RationalMatrix) -> Result<Option<u32>> {
    check_limit("spectrahedron check", n, HARDPAIR_LIMIT)?;
    if x.shape() != (n, n) || y.shape() != (n + 1, n + 1) {
        return Err(crate::Error::input(format!(
            "expected x {n}x{n} and Y {0}x{0}",
            n + 1
        )));
    }
    Ok((0..1u32 << n)
        .into_par_iter()
        .find_first(|&a| !spectra_equation_holds(n, a, x, y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraReport {
    pub n: usize,
    pub b: u32,
    pub holds: bool,
    pub failing_a: Option<u32>,
    pub y: RationalMatrix,
}

/// Checks that `(bbᵀ, U^b)` satisfies every spectrahedral equation.
pub fn spectra_vertex_witness(b: u32, n: usize) -> Result<SpectraReport> {
    check_limit("spectrahedron witness", n, HARDPAIR_LIMIT)?;
    if b >> n != 0 {
        return Err(crate::Error::input(format!("subset mask {b} outside [{n}]")));
    }
    let y = psd_u(n, b);
    let failing_a = spectra_check(n, &outer01(n, b), &y)?;
    Ok(SpectraReport {
        n,
        b,
        holds: failing_a.is_none(),
        failing_a,
        y,
    })
}

/// Frobenius product, used by the cone checks.
#[cfg(test)]
pub(crate) fn frobenius(x: &RationalMatrix, y: &RationalMatrix) -> crate::ratlin::Rational {
    dot(x.entries(), y.entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{build_cut_family, CutKind};
    use num_traits::Signed;

    #[test]
    fn small_inner_products() {
        assert_eq!(frobenius(&psd_t(3, 0), &psd_u(3, 0)), rat(1));
        assert_eq!(frobenius(&psd_t(2, 0b11), &psd_u(2, 0b11)), rat(1));
        assert_eq!(frobenius(&psd_t(3, 0b001), &psd_u(3, 0b011)), rat(0));
    }

    #[test]
    fn identity_holds_small() {
        for n in 0..=5 {
            let rep = psd_factors(n).unwrap();
            assert!(rep.holds());
            assert_eq!(rep.pairs_checked, 1 << (2 * n));
        }
    }

    #[test]
    fn exact_path_agrees_with_fast_path() {
        let n = 3;
        for a in 0..8 {
            for b in 0..8 {
                let s = 1 - i64::from((a & b as u32).count_ones());
                assert_eq!(frobenius(&psd_t(n, a), &psd_u(n, b)), rat(s * s));
            }
        }
    }

    #[test]
    fn vertex_witnesses() {
        assert!(spectra_vertex_witness(0, 1).unwrap().holds);
        for b in 0..8 {
            assert!(spectra_vertex_witness(b, 3).unwrap().holds);
        }
        let y = psd_u(3, 0b101);
        let bumped = RationalMatrix::from_fn(4, 4, |i, j| {
            y[(i, j)].clone() + if i == j { rat(1) } else { rat(0) }
        });
        assert!(spectra_check(3, &outer01(3, 0b101), &bumped).unwrap().is_some());
    }

    #[test]
    fn t_factors_nonnegative_on_correlation_cone() {
        for n in 2..=6 {
            let cone = build_cut_family(CutKind::CorrelationCone, n).unwrap();
            let m = n - 1;
            for a in 0..1u32 << (m - 1) {
                let t = psd_t(m - 1, a);
                for r in &cone.rays {
                    let z = RationalMatrix::from_entries(m, m, r.clone()).unwrap();
                    assert!(!frobenius(&t, &z).is_negative());
                }
            }
        }
    }
}
