//! Machine-checkable failure certificates.
//!
//! Every certificate is self-contained: `check` re-derives its claim from
//! the data it carries, with exact arithmetic, and never trusts a stored
//! verdict.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::encodings::{self, Graph};
use crate::polyhedra::ExtendedFormulation;
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{dot, Farkas, RationalMatrix, Rational};

/// `{x : A x <= b, Aeq x = beq}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    #[serde(rename = "A")]
    pub a: RationalMatrix,
    #[serde(with = "serde_rational::vec")]
    pub b: Vec<Rational>,
    #[serde(rename = "Aeq")]
    pub aeq: RationalMatrix,
    #[serde(with = "serde_rational::vec")]
    pub beq: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The system has no solution; `farkas` combines it into `0 <= -1`.
    InfeasibleSystem {
        context: String,
        system: LinearSystem,
        farkas: Farkas,
    },
    /// `(x, y)` lies in the EF but `row · x > rhs`.
    EfPointViolation {
        context: String,
        ef: ExtendedFormulation,
        #[serde(with = "serde_rational::vec")]
        x: Vec<Rational>,
        #[serde(with = "serde_rational::vec")]
        y: Vec<Rational>,
        #[serde(with = "serde_rational::vec")]
        row: Vec<Rational>,
        #[serde(with = "serde_rational")]
        rhs: Rational,
    },
    /// `T U != S`, or `T`/`U` has a negative entry.
    FactorizationMismatch {
        s: RationalMatrix,
        t: RationalMatrix,
        u: RationalMatrix,
    },
    /// `<w^G, x> > ω(G)` for the stored graph.
    QallViolation {
        x: RationalMatrix,
        graph: Graph,
    },
    /// `x_ij < 0`.
    QallSignViolation { x: RationalMatrix, i: usize, j: usize },
    /// `<T_a, U^b> != (1 - aᵀb)²`; subsets as bitmasks.
    PsdMismatch { n: usize, a: u32, b: u32 },
    /// `(bbᵀ, y)` violates the spectrahedral equation indexed by `a`.
    SpectraWitnessFailure {
        n: usize,
        b: u32,
        a: u32,
        y: RationalMatrix,
    },
}

impl Certificate {
    /// Short label used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::InfeasibleSystem { .. } => "infeasible_system",
            Certificate::EfPointViolation { .. } => "ef_point_violation",
            Certificate::FactorizationMismatch { .. } => "factorization_mismatch",
            Certificate::QallViolation { .. } => "qall_violation",
            Certificate::QallSignViolation { .. } => "qall_sign_violation",
            Certificate::PsdMismatch { .. } => "psd_mismatch",
            Certificate::SpectraWitnessFailure { .. } => "spectra_witness_failure",
        }
    }

    /// True iff the certificate proves its claim.
    pub fn check(&self) -> bool {
        match self {
            Certificate::InfeasibleSystem { system, farkas, .. } => {
                farkas.verify(&system.a, &system.b, &system.aeq, &system.beq)
            }
            Certificate::EfPointViolation {
                ef, x, y, row, rhs, ..
            } => {
                ef.validate().is_ok()
                    && row.len() == x.len()
                    && ef.satisfied_by(x, y)
                    && &dot(row, x) > rhs
            }
            Certificate::FactorizationMismatch { s, t, u } => {
                if t.cols() != u.rows() || t.rows() != s.rows() || u.cols() != s.cols() {
                    return true;
                }
                !t.is_nonnegative()
                    || !u.is_nonnegative()
                    || t.mul(u).map(|p| &p != s).unwrap_or(true)
            }
            Certificate::QallViolation { x, graph } => {
                let n = graph.n;
                if x.shape() != (n, n) || graph.validate().is_err() || n > encodings::CLIQUE_LIMIT {
                    return false;
                }
                let w = encodings::clique_weight(graph);
                let lhs = dot(w.entries(), x.entries());
                let omega = encodings::clique_number(graph).expect("size checked");
                lhs > Rational::from_integer(omega.into())
            }
            Certificate::QallSignViolation { x, i, j } => {
                *i < x.rows() && *j < x.cols() && x[(*i, *j)] < Rational::zero()
            }
            Certificate::PsdMismatch { n, a, b } => {
                if *n > encodings::HARDPAIR_LIMIT || (*a | *b) >> n != 0 {
                    return false;
                }
                let t = encodings::psd_t(*n, *a);
                let u = encodings::psd_u(*n, *b);
                let inner = dot(t.entries(), u.entries());
                let s = Rational::one() - Rational::from_integer((*a & *b).count_ones().into());
                inner != &s * &s
            }
            Certificate::SpectraWitnessFailure { n, b, a, y } => {
                if *n > encodings::HARDPAIR_LIMIT || (*a | *b) >> n != 0 || y.shape() != (n + 1, n + 1) {
                    return false;
                }
                let x = encodings::outer01(*n, *b);
                !encodings::spectra_equation_holds(*n, *a, &x, y)
            }
        }
    }
}
