//! Nonnegative factorizations of slack matrices and the two constructions
//! linking them to extended formulations, plus sound bounds on the
//! nonnegative rank.

mod nmf;
mod rectcover;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::polyhedra::{
    build_slack, ef_contains_points, ef_inside_hrep_with, Containment, ExtendedFormulation, HRep,
    Inclusion, VRep,
};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{RationalMatrix, Rational};

pub use nmf::{nnegrk_bounds, LowerWitness, NmfConfig, NnegrkBounds};
pub use rectcover::{rect_cover_lb, RectCover};

/// `S = T U` with `T, U >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegFactorization {
    #[serde(rename = "T")]
    pub t: RationalMatrix,
    #[serde(rename = "U")]
    pub u: RationalMatrix,
}

impl NonnegFactorization {
    pub fn rank(&self) -> usize {
        self.t.cols()
    }

    /// `T = I`, `U = S`.
    pub fn trivial(s: &RationalMatrix) -> Self {
        NonnegFactorization {
            t: RationalMatrix::identity(s.rows()),
            u: s.clone(),
        }
    }

    /// Drops inner indices whose column of `T` or row of `U` vanishes.
    pub fn pruned(&self) -> Self {
        let keep: Vec<usize> = (0..self.rank())
            .filter(|&k| {
                (0..self.t.rows()).any(|i| !self.t[(i, k)].is_zero())
                    && self.u.row(k).iter().any(|v| !v.is_zero())
            })
            .collect();
        NonnegFactorization {
            t: self.t.select_cols(&keep),
            u: self.u.select_rows(&keep),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum FactorizationIssue {
    NegativeT { row: usize, col: usize },
    NegativeU { row: usize, col: usize },
    Mismatch {
        row: usize,
        col: usize,
        #[serde(with = "serde_rational")]
        expected: Rational,
        #[serde(with = "serde_rational")]
        product: Rational,
    },
}

/// `Ok(None)` when `T U = S` exactly with nonnegative factors, otherwise
/// the first problem found.
pub fn verify_factorization(s: &RationalMatrix, fac: &NonnegFactorization) -> Result<Option<FactorizationIssue>> {
    if fac.t.rows() != s.rows() || fac.u.cols() != s.cols() || fac.t.cols() != fac.u.rows() {
        return Err(Error::input(format!(
            "factorization {}x{} · {}x{} against {}x{}",
            fac.t.rows(),
            fac.t.cols(),
            fac.u.rows(),
            fac.u.cols(),
            s.rows(),
            s.cols()
        )));
    }
    if let Some((row, col)) = fac.t.first_negative() {
        return Ok(Some(FactorizationIssue::NegativeT { row, col }));
    }
    if let Some((row, col)) = fac.u.first_negative() {
        return Ok(Some(FactorizationIssue::NegativeU { row, col }));
    }
    let prod = fac.t.mul(&fac.u)?;
    for i in 0..s.rows() {
        for j in 0..s.cols() {
            if prod[(i, j)] != s[(i, j)] {
                return Ok(Some(FactorizationIssue::Mismatch {
                    row: i,
                    col: j,
                    expected: s[(i, j)].clone(),
                    product: prod[(i, j)].clone(),
                }));
            }
        }
    }
    Ok(None)
}

pub fn mismatch_certificate(s: &RationalMatrix, fac: &NonnegFactorization) -> Certificate {
    Certificate::FactorizationMismatch {
        s: s.clone(),
        t: fac.t.clone(),
        u: fac.u.clone(),
    }
}

/// `A x + T y = b, y >= 0`.
pub fn factorization_to_ef(q: &HRep, fac: &NonnegFactorization) -> Result<ExtendedFormulation> {
    q.validate()?;
    if fac.t.rows() != q.rows() {
        return Err(Error::input(format!(
            "T has {} rows but Q has {} inequalities",
            fac.t.rows(),
            q.rows()
        )));
    }
    if fac.t.first_negative().is_some() {
        return Err(Error::input("T has a negative entry"));
    }
    ExtendedFormulation::new(q.a.clone(), fac.t.clone(), q.b.clone())
}

/// Reads a factorization of the slack matrix of `(P, Q)` off an EF with
/// `P ⊆ K ⊆ Q`: `[TF | c] · [[W, Z], [1ᵀ, 0ᵀ]]`, without the offset column
/// when every `c_i` can be taken to be zero.
pub fn ef_to_factorization(k: &ExtendedFormulation, p: &VRep, q: &HRep) -> Result<NonnegFactorization> {
    let slack = build_slack(p, q)?.full();
    let wit = match ef_contains_points(p, k)? {
        Containment::Contained(w) => w,
        bad @ Containment::Violated { .. } => {
            return Err(Error::Precondition {
                message: "P is not contained in K".into(),
                certificate: bad.certificate().map(Box::new),
            })
        }
    };
    let der = match ef_inside_hrep_with(k, q, true)? {
        Inclusion::Inside(d) => d,
        Inclusion::EmptyK { .. } => {
            // P ⊆ K = ∅, so the slack matrix has no columns.
            if slack.cols() != 0 {
                return Err(Error::internal("empty K contains generators of P"));
            }
            return Ok(NonnegFactorization {
                t: RationalMatrix::zeros(q.rows(), 0),
                u: RationalMatrix::zeros(0, 0),
            });
        }
        bad @ Inclusion::Violated { .. } => {
            return Err(Error::Precondition {
                message: "K is not contained in Q".into(),
                certificate: bad.certificate(k, q).map(Box::new),
            })
        }
    };

    let tf = der.t.mul(&k.f)?;
    let wz = wit.w.hstack(&wit.z)?;
    let fac = if der.offsets_vanish() {
        NonnegFactorization { t: tf, u: wz }
    } else {
        let cc = RationalMatrix::from_fn(q.rows(), 1, |i, _| der.c[i].clone());
        let ones = RationalMatrix::from_fn(1, wz.cols(), |_, j| {
            if j < wit.w.cols() {
                Rational::one()
            } else {
                Rational::zero()
            }
        });
        NonnegFactorization {
            t: tf.hstack(&cc)?,
            u: wz.vstack(&ones)?,
        }
    }
    .pruned();
    if let Some(issue) = verify_factorization(&slack, &fac)? {
        return Err(Error::internal(format!("constructed factorization fails: {issue:?}")));
    }
    debug_assert!(fac.t.entries().iter().all(|v| !v.is_negative()));
    Ok(fac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::build_hard_pair;
    use crate::polyhedra::{verify_sandwich, SandwichStatus};
    use crate::ratlin::rat;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn verification_examples() {
        let i2 = RationalMatrix::identity(2);
        let id = NonnegFactorization { t: i2.clone(), u: i2.clone() };
        assert_eq!(verify_factorization(&i2, &id).unwrap(), None);
        let ones = RationalMatrix::from_i64(2, 2, &[1, 1, 1, 1]);
        let r1 = NonnegFactorization {
            t: RationalMatrix::from_i64(2, 1, &[1, 1]),
            u: RationalMatrix::from_i64(1, 2, &[1, 1]),
        };
        assert_eq!(verify_factorization(&ones, &r1).unwrap(), None);
        assert_eq!(r1.rank(), 1);
        let neg = NonnegFactorization {
            t: RationalMatrix::from_i64(2, 2, &[1, 0, 0, -1]),
            u: RationalMatrix::from_i64(2, 2, &[1, 0, 0, -1]),
        };
        assert_eq!(
            verify_factorization(&i2, &neg).unwrap(),
            Some(FactorizationIssue::NegativeT { row: 1, col: 1 })
        );
        assert!(mismatch_certificate(&i2, &neg).check());
        assert!(!mismatch_certificate(&i2, &id).check());
        assert!(verify_factorization(&ones, &NonnegFactorization::trivial(&i2.select_rows(&[0]))).is_err());
    }

    #[test]
    fn segment_roundtrip() {
        let q = HRep::unit_box(1);
        let p = VRep::unit_box_vertices(1);
        let s = build_slack(&p, &q).unwrap().full();
        let fac = NonnegFactorization { t: RationalMatrix::identity(2), u: s.clone() };
        let k = factorization_to_ef(&q, &fac).unwrap();
        assert_eq!(k, ExtendedFormulation::trivial(&q));
        assert_eq!(verify_sandwich(&p, &q, &rat(1), &k).unwrap().status, SandwichStatus::Pass);
        let back = ef_to_factorization(&k, &p, &q).unwrap();
        assert!(back.rank() <= 3);
        assert_eq!(verify_factorization(&s, &back).unwrap(), None);
    }

    #[test]
    fn rank_one_ef_has_one_variable() {
        // P = {(0,0), (1,0)}, Q = {y <= 1, -y <= 1}: slack is all ones.
        let p = VRep::new(2, vec![v(&[0, 0]), v(&[1, 0])], vec![]).unwrap();
        let q = HRep::new(RationalMatrix::from_i64(2, 2, &[0, 1, 0, -1]), v(&[1, 1])).unwrap();
        let s = build_slack(&p, &q).unwrap().full();
        let fac = NonnegFactorization {
            t: RationalMatrix::from_i64(2, 1, &[1, 1]),
            u: RationalMatrix::from_i64(1, 2, &[1, 1]),
        };
        assert_eq!(verify_factorization(&s, &fac).unwrap(), None);
        let k = factorization_to_ef(&q, &fac).unwrap();
        assert_eq!(k.size(), 1);
        assert!(verify_sandwich(&p, &q, &rat(1), &k).unwrap().passed());

        // K = {y = 0} has no auxiliary variables; the factorization is c·1ᵀ.
        let empty = ExtendedFormulation::new(
            RationalMatrix::from_i64(1, 2, &[0, 1]),
            RationalMatrix::zeros(1, 0),
            v(&[0]),
        )
        .unwrap();
        let rep = verify_sandwich(&p, &q, &rat(1), &empty).unwrap();
        assert_eq!(rep.status, SandwichStatus::Affine);
        let back = ef_to_factorization(&empty, &p, &q).unwrap();
        assert_eq!(back.rank(), 1);
        assert_eq!(back.t, RationalMatrix::from_i64(2, 1, &[1, 1]));
    }

    #[test]
    fn hard_pair_roundtrip() {
        for n in 1..=2 {
            let hp = build_hard_pair(n).unwrap();
            let s = build_slack(&hp.p, &hp.q).unwrap().full();
            let fac = NonnegFactorization::trivial(&s);
            let k = factorization_to_ef(&hp.q, &fac).unwrap();
            assert_eq!(k.size(), 1 << n);
            assert!(verify_sandwich(&hp.p, &hp.q, &rat(1), &k).unwrap().passed());
            let back = ef_to_factorization(&k, &hp.p, &hp.q).unwrap();
            assert!(back.rank() <= k.size() + 1);
            assert_eq!(verify_factorization(&s, &back).unwrap(), None);
        }
    }

    #[test]
    fn precondition_failure_carries_certificate() {
        let q = HRep::unit_box(1);
        let p = VRep::new(1, vec![v(&[2])], vec![]).unwrap();
        let k = ExtendedFormulation::trivial(&q);
        let err = ef_to_factorization(&k, &p, &HRep::unit_box(1)).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.certificate().unwrap().check());
    }

    #[test]
    fn row_mismatch_is_input_error() {
        let fac = NonnegFactorization::trivial(&RationalMatrix::identity(3));
        assert!(matches!(factorization_to_ef(&HRep::unit_box(1), &fac), Err(Error::Input(_))));
    }
}
