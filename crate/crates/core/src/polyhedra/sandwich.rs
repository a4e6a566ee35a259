use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dilate, ExtendedFormulation, HRep, VRep};
use crate::certificate::{Certificate, LinearSystem};
use crate::error::{Error, Result};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{dot, lp_solve, Farkas, LpProblem, LpResult, RationalMatrix, Rational, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "index", rename_all = "lowercase")]
pub enum Generator {
    Point(usize),
    Ray(usize),
}

/// Columns of `w` certify the points, columns of `z` the rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    pub w: RationalMatrix,
    pub z: RationalMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Containment {
    Contained(Witnesses),
    Violated {
        generator: Generator,
        system: LinearSystem,
        farkas: Farkas,
    },
}

impl Containment {
    pub fn passed(&self) -> bool {
        matches!(self, Containment::Contained(_))
    }

    pub fn certificate(&self) -> Option<Certificate> {
        match self {
            Containment::Contained(_) => None,
            Containment::Violated {
                generator,
                system,
                farkas,
            } => Some(Certificate::InfeasibleSystem {
                context: format!("P not inside K: no witness for {generator:?}"),
                system: system.clone(),
                farkas: farkas.clone(),
            }),
        }
    }
}

/// Row `i` of `t` derives row `i` of `Q`: `t_i E = A_i`, `t_i F >= 0`,
/// `t_i g + c_i = b_i`, `c_i >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub t: RationalMatrix,
    #[serde(with = "serde_rational::vec")]
    pub c: Vec<Rational>,
}

impl Derivation {
    pub fn verify(&self, k: &ExtendedFormulation, q: &HRep) -> bool {
        if self.t.shape() != (q.rows(), k.num_equations()) || self.c.len() != q.rows() {
            return false;
        }
        let (Ok(te), Ok(tf)) = (self.t.mul(&k.e), self.t.mul(&k.f)) else {
            return false;
        };
        te == q.a
            && tf.is_nonnegative()
            && (0..q.rows()).all(|i| {
                !self.c[i].is_negative() && dot(self.t.row(i), &k.g) + &self.c[i] == q.b[i]
            })
    }

    pub fn offsets_vanish(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Inclusion {
    Inside(Derivation),
    /// `K` is empty, so inclusion holds vacuously.
    EmptyK { system: LinearSystem, farkas: Farkas },
    Violated {
        row: usize,
        #[serde(with = "serde_rational::vec")]
        x: Vec<Rational>,
        #[serde(with = "serde_rational::vec")]
        y: Vec<Rational>,
        #[serde(with = "serde_rational")]
        value: Rational,
        #[serde(with = "serde_rational")]
        rhs: Rational,
    },
}

impl Inclusion {
    pub fn passed(&self) -> bool {
        !matches!(self, Inclusion::Violated { .. })
    }

    pub fn certificate(&self, k: &ExtendedFormulation, q: &HRep) -> Option<Certificate> {
        match self {
            Inclusion::Violated { row, x, y, rhs, .. } => Some(Certificate::EfPointViolation {
                context: format!("K not inside Q: row {row} violated"),
                ef: k.clone(),
                x: x.clone(),
                y: y.clone(),
                row: q.a.row(*row).to_vec(),
                rhs: rhs.clone(),
            }),
            _ => None,
        }
    }
}

fn check_dims(what: &str, d1: usize, d2: usize) -> Result<()> {
    if d1 != d2 {
        return Err(Error::input(format!("{what}: dimensions {d1} and {d2} differ")));
    }
    Ok(())
}

fn neg_identity(r: usize) -> RationalMatrix {
    RationalMatrix::identity(r).scale(&-Rational::one())
}

/// Finds `w >= 0` with `F w = rhs`.
fn witness(k: &ExtendedFormulation, rhs: Vec<Rational>) -> Result<std::result::Result<Vec<Rational>, (LinearSystem, Farkas)>> {
    let r = k.size();
    let mut lp = LpProblem::feasibility(r);
    lp.a = neg_identity(r);
    lp.b = vec![Rational::zero(); r];
    lp.aeq = k.f.clone();
    lp.beq = rhs;
    match lp_solve(&lp)? {
        LpResult::Optimal { point, .. } => Ok(Ok(point)),
        LpResult::Infeasible(farkas) => Ok(Err((
            LinearSystem {
                a: lp.a,
                b: lp.b,
                aeq: lp.aeq,
                beq: lp.beq,
            },
            farkas,
        ))),
        LpResult::Unbounded { .. } => Err(Error::internal("zero objective reported unbounded")),
    }
}

/// Witnesses `P ⊆ K`: `F w_j = g - E v_j` and `F z_j = -E r_j` with
/// `w_j, z_j >= 0`. The first generator without a witness is reported
/// together with a Farkas certificate.
pub fn ef_contains_points(p: &VRep, k: &ExtendedFormulation) -> Result<Containment> {
    p.validate()?;
    k.validate()?;
    check_dims("ef_contains_points", p.dim, k.dim())?;
    let gens: Vec<Generator> = (0..p.points.len())
        .map(Generator::Point)
        .chain((0..p.rays.len()).map(Generator::Ray))
        .collect();
    let results: Vec<_> = gens
        .par_iter()
        .map(|gen| {
            let rhs: Vec<Rational> = match *gen {
                Generator::Point(j) => {
                    let ev = k.e.mul_vec(&p.points[j])?;
                    k.g.iter().zip(ev).map(|(g, e)| g - e).collect()
                }
                Generator::Ray(j) => k.e.mul_vec(&p.rays[j])?.into_iter().map(|e| -e).collect(),
            };
            witness(k, rhs)
        })
        .collect();

    let r = k.size();
    let mut w = RationalMatrix::zeros(r, p.points.len());
    let mut z = RationalMatrix::zeros(r, p.rays.len());
    for (gen, res) in gens.into_iter().zip(results) {
        match res? {
            Ok(col) => {
                let target = match gen {
                    Generator::Point(j) => (&mut w, j),
                    Generator::Ray(j) => (&mut z, j),
                };
                for (i, v) in col.into_iter().enumerate() {
                    target.0[(i, target.1)] = v;
                }
            }
            Err((system, farkas)) => {
                return Ok(Containment::Violated {
                    generator: gen,
                    system,
                    farkas,
                })
            }
        }
    }
    Ok(Containment::Contained(Witnesses { w, z }))
}

enum RowOutcome {
    Derived(Vec<Rational>, Rational),
    Empty(LinearSystem, Farkas),
    Violated(Vec<Rational>, Vec<Rational>, Rational),
}

/// `t E = A_i`, `t g = b_i`, `t F >= 0`, if such `t` exists.
fn derive_without_offset(k: &ExtendedFormulation, ai: &[Rational], bi: &Rational) -> Result<Option<Vec<Rational>>> {
    let (p, r) = (k.num_equations(), k.size());
    let mut lp = LpProblem::feasibility(p);
    lp.a = k.f.transpose().scale(&-Rational::one());
    lp.b = vec![Rational::zero(); r];
    let gt = RationalMatrix::from_fn(1, p, |_, j| k.g[j].clone());
    lp.aeq = k.e.transpose().vstack(&gt)?;
    lp.beq = ai.iter().cloned().chain(std::iter::once(bi.clone())).collect();
    Ok(match lp_solve(&lp)? {
        LpResult::Optimal { point, .. } => Some(point),
        _ => None,
    })
}

fn derive_row(k: &ExtendedFormulation, ai: &[Rational], bi: &Rational, zero_first: bool) -> Result<RowOutcome> {
    let (d, r) = (k.dim(), k.size());
    if zero_first {
        if let Some(t) = derive_without_offset(k, ai, bi)? {
            return Ok(RowOutcome::Derived(t, Rational::zero()));
        }
    }

    // max A_i x over K; its equality duals are multipliers t with
    // t g = optimum, leaving c = b_i - optimum.
    let mut lp = LpProblem::feasibility(d + r);
    lp.aeq = k.e.hstack(&k.f)?;
    lp.beq = k.g.clone();
    lp.a = RationalMatrix::zeros(r, d).hstack(&neg_identity(r))?;
    lp.b = vec![Rational::zero(); r];
    lp.c = ai.iter().cloned().chain(std::iter::repeat(Rational::zero()).take(r)).collect();
    lp.sense = Sense::Max;
    match lp_solve(&lp)? {
        LpResult::Optimal {
            value,
            point,
            eq_duals,
            ..
        } => {
            if &value <= bi {
                Ok(RowOutcome::Derived(eq_duals, bi - value))
            } else {
                let (x, y) = point.split_at(d);
                Ok(RowOutcome::Violated(x.to_vec(), y.to_vec(), value))
            }
        }
        LpResult::Unbounded { point, ray } => {
            let base = dot(ai, &point[..d]);
            let slope = dot(ai, &ray[..d]);
            if !slope.is_positive() {
                return Err(Error::internal("unbounded ray does not improve the row"));
            }
            let lambda = if &base > bi {
                Rational::zero()
            } else {
                (bi - &base) / &slope + Rational::one()
            };
            let full: Vec<Rational> = point.iter().zip(&ray).map(|(p, r)| p + &lambda * r).collect();
            let value = dot(ai, &full[..d]);
            let (x, y) = full.split_at(d);
            Ok(RowOutcome::Violated(x.to_vec(), y.to_vec(), value))
        }
        LpResult::Infeasible(farkas) => Ok(RowOutcome::Empty(
            LinearSystem {
                a: lp.a,
                b: lp.b,
                aeq: lp.aeq,
                beq: lp.beq,
            },
            farkas,
        )),
    }
}

/// Derives every row of `Q` from the EF system, or reports the first row
/// with a point of `K` violating it. Offsets are `c_i = b_i - max_K A_i x`.
pub fn ef_inside_hrep(k: &ExtendedFormulation, q: &HRep) -> Result<Inclusion> {
    ef_inside_hrep_with(k, q, false)
}

/// As [`ef_inside_hrep`]; with `zero_offsets_first`, each row first tries a
/// derivation with `c_i = 0`.
pub fn ef_inside_hrep_with(k: &ExtendedFormulation, q: &HRep, zero_offsets_first: bool) -> Result<Inclusion> {
    k.validate()?;
    q.validate()?;
    check_dims("ef_inside_hrep", k.dim(), q.dim)?;
    let outcomes: Vec<Result<RowOutcome>> = (0..q.rows())
        .into_par_iter()
        .map(|i| derive_row(k, q.a.row(i), &q.b[i], zero_offsets_first))
        .collect();

    let mut t = RationalMatrix::zeros(q.rows(), k.num_equations());
    let mut c = Vec::with_capacity(q.rows());
    for (i, out) in outcomes.into_iter().enumerate() {
        match out? {
            RowOutcome::Derived(ti, ci) => {
                for (j, v) in ti.into_iter().enumerate() {
                    t[(i, j)] = v;
                }
                c.push(ci);
            }
            RowOutcome::Empty(system, farkas) => return Ok(Inclusion::EmptyK { system, farkas }),
            RowOutcome::Violated(x, y, value) => {
                return Ok(Inclusion::Violated {
                    row: i,
                    x,
                    y,
                    value,
                    rhs: q.b[i].clone(),
                })
            }
        }
    }
    let der = Derivation { t, c };
    if !der.verify(k, q) {
        return Err(Error::internal("derivation failed exact re-check"));
    }
    Ok(Inclusion::Inside(der))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SandwichStatus {
    Pass,
    /// Passed, and `aff(P) ⊆ ρQ` already, so no auxiliary variable is needed.
    Affine,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub status: SandwichStatus,
    #[serde(with = "serde_rational")]
    pub rho: Rational,
    pub containment: Containment,
    pub inclusion: Inclusion,
    pub affine_hull_inside: bool,
    /// The recession cone of `Q` has interior, so the factorization built
    /// from `K` may need the extra offset column.
    pub recession_full_dim: bool,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.status != SandwichStatus::Fail
    }

    pub fn certificate(&self, k: &ExtendedFormulation, q_rho: &HRep) -> Option<Certificate> {
        self.containment
            .certificate()
            .or_else(|| self.inclusion.certificate(k, q_rho))
    }
}

fn affine_hull_inside(p: &VRep, q: &HRep) -> bool {
    let Some(v0) = p.points.first() else {
        return true;
    };
    (0..q.rows()).all(|i| {
        let ai = q.a.row(i);
        let base = dot(ai, v0);
        base <= q.b[i]
            && p.points.iter().all(|v| dot(ai, v) == base)
            && p.rays.iter().all(|r| dot(ai, r).is_zero())
    })
}

/// Whether `{x : A x <= 0}` has nonempty interior.
pub fn recession_full_dim(q: &HRep) -> Result<bool> {
    let rows: Vec<usize> = (0..q.rows())
        .filter(|&i| q.a.row(i).iter().any(|v| !v.is_zero()))
        .collect();
    if rows.is_empty() {
        return Ok(true);
    }
    let d = q.dim;
    let a = q.a.select_rows(&rows);
    let ones = RationalMatrix::from_fn(rows.len(), 1, |_, _| Rational::one());
    let mut lp = LpProblem::feasibility(d + 1);
    let mut cap = vec![Rational::zero(); d + 1];
    cap[d] = Rational::one();
    lp.a = a.hstack(&ones)?.vstack(&RationalMatrix::from_rows(vec![cap.clone()])?)?;
    lp.b = vec![Rational::zero(); rows.len()];
    lp.b.push(Rational::one());
    lp.c = cap;
    match lp_solve(&lp)? {
        LpResult::Optimal { value, .. } => Ok(value.is_positive()),
        other => Err(Error::internal(format!("recession probe: {}", other.status()))),
    }
}

/// Checks `P ⊆ K ⊆ ρQ`.
pub fn verify_sandwich(p: &VRep, q: &HRep, rho: &Rational, k: &ExtendedFormulation) -> Result<SandwichReport> {
    check_dims("verify_sandwich", p.dim, q.dim)?;
    check_dims("verify_sandwich", p.dim, k.dim())?;
    let q_rho = dilate(q, rho)?;
    let containment = ef_contains_points(p, k)?;
    let inclusion = ef_inside_hrep(k, &q_rho)?;
    let affine = affine_hull_inside(p, &q_rho);
    let status = if !(containment.passed() && inclusion.passed()) {
        SandwichStatus::Fail
    } else if affine {
        SandwichStatus::Affine
    } else {
        SandwichStatus::Pass
    };
    Ok(SandwichReport {
        status,
        rho: rho.clone(),
        containment,
        inclusion,
        affine_hull_inside: affine,
        recession_full_dim: recession_full_dim(q)?,
    })
}
