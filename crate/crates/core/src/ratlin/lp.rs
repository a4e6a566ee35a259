//! Exact two-phase simplex over the rationals.
//!
//! Problems are stated over free variables:
//!
//! ```text
//!   max/min  c·x   s.t.  A x <= b,  Aeq x = beq
//! ```
//!
//! Internally each free variable is split into a nonnegative pair, every
//! inequality gets a slack, and every row gets an artificial whose column
//! doubles as a running copy of the basis inverse. Pivoting follows Bland's
//! rule. Every certificate is checked exactly before it is returned.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::{dot, RationalMatrix};
use super::rational::{serde_rational, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    fn sign(self) -> Rational {
        match self {
            Sense::Max => Rational::from_integer(1.into()),
            Sense::Min => Rational::from_integer((-1).into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub a: RationalMatrix,
    pub b: Vec<Rational>,
    pub aeq: RationalMatrix,
    pub beq: Vec<Rational>,
    pub c: Vec<Rational>,
    pub sense: Sense,
}

impl LpProblem {
    /// Feasibility problem (zero objective) over `nvars` free variables.
    pub fn feasibility(nvars: usize) -> Self {
        LpProblem {
            a: RationalMatrix::zeros(0, nvars),
            b: vec![],
            aeq: RationalMatrix::zeros(0, nvars),
            beq: vec![],
            c: vec![Rational::zero(); nvars],
            sense: Sense::Max,
        }
    }

    pub fn nvars(&self) -> usize {
        self.c.len()
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.c.len();
        let ok = self.a.cols() == n
            && self.aeq.cols() == n
            && self.a.rows() == self.b.len()
            && self.aeq.rows() == self.beq.len();
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!(
                "lp dimensions: A {}x{}, b {}, Aeq {}x{}, beq {}, c {}",
                self.a.rows(),
                self.a.cols(),
                self.b.len(),
                self.aeq.rows(),
                self.aeq.cols(),
                self.beq.len(),
                n
            )))
        }
    }
}

/// Farkas certificate of infeasibility: `ineq >= 0`,
/// `ineq·A + eq·Aeq = 0` and `ineq·b + eq·beq < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Farkas {
    #[serde(with = "serde_rational::vec")]
    pub ineq: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub eq: Vec<Rational>,
}

impl Farkas {
    pub fn verify(&self, a: &RationalMatrix, b: &[Rational], aeq: &RationalMatrix, beq: &[Rational]) -> bool {
        if self.ineq.len() != a.rows() || self.eq.len() != aeq.rows() || a.cols() != aeq.cols() {
            return false;
        }
        if self.ineq.iter().any(Signed::is_negative) {
            return false;
        }
        let (Ok(ya), Ok(za)) = (a.vec_mul(&self.ineq), aeq.vec_mul(&self.eq)) else {
            return false;
        };
        if ya.iter().zip(&za).any(|(p, q)| !(p + q).is_zero()) {
            return false;
        }
        (dot(&self.ineq, b) + dot(&self.eq, beq)).is_negative()
    }

    pub fn rhs_value(&self, b: &[Rational], beq: &[Rational]) -> Rational {
        dot(&self.ineq, b) + dot(&self.eq, beq)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    /// `ineq_duals >= 0` and `ineq_duals·A + eq_duals·Aeq = s·c` with
    /// `s = +1` for max and `-1` for min; their value against `(b, beq)`
    /// equals `s·value`.
    Optimal {
        value: Rational,
        point: Vec<Rational>,
        ineq_duals: Vec<Rational>,
        eq_duals: Vec<Rational>,
    },
    Infeasible(Farkas),
    /// `point` is feasible; `ray` satisfies `A r <= 0`, `Aeq r = 0` and
    /// improves the objective strictly.
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpResult::Optimal { .. })
    }

    pub fn status(&self) -> &'static str {
        match self {
            LpResult::Optimal { .. } => "optimal",
            LpResult::Infeasible(_) => "infeasible",
            LpResult::Unbounded { .. } => "unbounded",
        }
    }
}

struct Tableau {
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.t[r][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col].clone();
        for v in self.t[row].iter_mut() {
            *v /= &piv;
        }
        let prow = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row || line[col].is_zero() {
                continue;
            }
            let f = line[col].clone();
            for (v, p) in line.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (r, &bv) in self.basis.iter().enumerate() {
            let cb = &cost[bv];
            if cb.is_zero() {
                continue;
            }
            for (dj, tj) in d.iter_mut().zip(&self.t[r][..self.ncols]) {
                if !tj.is_zero() {
                    *dj -= cb * tj;
                }
            }
        }
        d
    }

    /// Maximizes `cost` over columns `< enter_limit`. Returns the unbounded
    /// entering column, if any.
    fn optimize(&mut self, cost: &[Rational], enter_limit: usize) -> Option<usize> {
        loop {
            let d = self.reduced_costs(cost);
            // Bland: lowest-index improving column
            let Some(j) = (0..enter_limit).find(|&j| d[j].is_positive()) else {
                return None;
            };
            let mut best: Option<(usize, Rational)> = None;
            for r in 0..self.t.len() {
                let a = &self.t[r][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &best {
                    None => true,
                    Some((br, bq)) => ratio < *bq || (ratio == *bq && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                None => return Some(j),
                Some((r, _)) => self.pivot(r, j),
            }
        }
    }

    /// `cost_B B^{-1}`, read off the artificial block starting at `art0`.
    fn duals(&self, cost: &[Rational], art0: usize) -> Vec<Rational> {
        let m = self.t.len();
        (0..m)
            .map(|k| {
                self.basis
                    .iter()
                    .enumerate()
                    .filter(|(_, &bv)| !cost[bv].is_zero())
                    .fold(Rational::zero(), |acc, (r, &bv)| acc + &cost[bv] * &self.t[r][art0 + k])
            })
            .collect()
    }

    fn values(&self) -> Vec<Rational> {
        let mut z = vec![Rational::zero(); self.ncols];
        for (r, &bv) in self.basis.iter().enumerate() {
            z[bv] = self.rhs(r).clone();
        }
        z
    }
}

pub fn lp_solve(p: &LpProblem) -> Result<LpResult> {
    p.check_dims()?;
    let n = p.nvars();
    let m1 = p.a.rows();
    let m2 = p.aeq.rows();
    let m = m1 + m2;
    // columns: x+ [0,n), x- [n,2n), slack [2n,2n+m1), artificial [2n+m1, 2n+m1+m)
    let slack0 = 2 * n;
    let art0 = slack0 + m1;
    let ncols = art0 + m;

    let orig_row = |r: usize| -> (&[Rational], &Rational) {
        if r < m1 {
            (p.a.row(r), &p.b[r])
        } else {
            (p.aeq.row(r - m1), &p.beq[r - m1])
        }
    };

    let mut signs = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for r in 0..m {
        let (row, rhs) = orig_row(r);
        let s: Rational = if rhs.is_negative() { -Rational::from_integer(1.into()) } else { Rational::from_integer(1.into()) };
        let mut line = vec![Rational::zero(); ncols + 1];
        for (j, a) in row.iter().enumerate() {
            if !a.is_zero() {
                line[j] = &s * a;
                line[n + j] = -(&s * a);
            }
        }
        if r < m1 {
            line[slack0 + r] = s.clone();
        }
        line[art0 + r] = Rational::from_integer(1.into());
        line[ncols] = &s * rhs;
        signs.push(s);
        t.push(line);
    }
    let mut tab = Tableau {
        t,
        basis: (art0..art0 + m).collect(),
        ncols,
    };

    // Phase 1: maximize -(sum of artificials).
    let mut cost1 = vec![Rational::zero(); ncols];
    for c in cost1.iter_mut().skip(art0) {
        *c = -Rational::from_integer(1.into());
    }
    if tab.optimize(&cost1, ncols).is_some() {
        return Err(Error::internal("phase 1 reported unbounded"));
    }
    let infeas: Rational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= art0)
        .fold(Rational::zero(), |acc, (r, _)| acc + tab.rhs(r));
    if infeas.is_positive() {
        let u = tab.duals(&cost1, art0);
        let y: Vec<Rational> = u.iter().zip(&signs).map(|(u, s)| u * s).collect();
        let cert = Farkas {
            ineq: y[..m1].to_vec(),
            eq: y[m1..].to_vec(),
        };
        if !cert.verify(&p.a, &p.b, &p.aeq, &p.beq) {
            return Err(Error::internal("Farkas certificate failed exact verification"));
        }
        return Ok(LpResult::Infeasible(cert));
    }

    // Drive zero-level artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= art0 {
            if let Some(j) = (0..art0).find(|&j| !tab.t[r][j].is_zero()) {
                tab.pivot(r, j);
            }
        }
    }

    // Phase 2 on the original objective, artificials barred from entering.
    let sigma = p.sense.sign();
    let mut cost2 = vec![Rational::zero(); ncols];
    for j in 0..n {
        let cj = &sigma * &p.c[j];
        cost2[n + j] = -cj.clone();
        cost2[j] = cj;
    }
    let unbounded = tab.optimize(&cost2, art0);
    let z = tab.values();
    let point: Vec<Rational> = (0..n).map(|j| &z[j] - &z[n + j]).collect();

    if let Some(j) = unbounded {
        let mut dz = vec![Rational::zero(); ncols];
        dz[j] = Rational::from_integer(1.into());
        for (r, &bv) in tab.basis.iter().enumerate() {
            dz[bv] = -tab.t[r][j].clone();
        }
        let ray: Vec<Rational> = (0..n).map(|k| &dz[k] - &dz[n + k]).collect();
        let out = LpResult::Unbounded { point, ray };
        verify_result(p, &out)?;
        return Ok(out);
    }

    let u = tab.duals(&cost2, art0);
    let y: Vec<Rational> = u.iter().zip(&signs).map(|(u, s)| u * s).collect();
    let value = dot(&p.c, &point);
    let out = LpResult::Optimal {
        value,
        point,
        ineq_duals: y[..m1].to_vec(),
        eq_duals: y[m1..].to_vec(),
    };
    verify_result(p, &out)?;
    Ok(out)
}

fn is_feasible(p: &LpProblem, x: &[Rational]) -> Result<bool> {
    let ax = p.a.mul_vec(x)?;
    let ex = p.aeq.mul_vec(x)?;
    Ok(ax.iter().zip(&p.b).all(|(l, r)| l <= r) && ex.iter().zip(&p.beq).all(|(l, r)| l == r))
}

/// Exact re-check of a solver result against its problem.
pub fn verify_result(p: &LpProblem, res: &LpResult) -> Result<()> {
    let fail = |what: &str| Err(Error::internal(format!("lp result check failed: {what}")));
    match res {
        LpResult::Infeasible(cert) => {
            if !cert.verify(&p.a, &p.b, &p.aeq, &p.beq) {
                return fail("farkas");
            }
        }
        LpResult::Unbounded { point, ray } => {
            if !is_feasible(p, point)? {
                return fail("unbounded point infeasible");
            }
            let ar = p.a.mul_vec(ray)?;
            let er = p.aeq.mul_vec(ray)?;
            let improving = (p.sense.sign() * dot(&p.c, ray)).is_positive();
            if ar.iter().any(Signed::is_positive) || er.iter().any(|v| !v.is_zero()) || !improving {
                return fail("ray");
            }
        }
        LpResult::Optimal {
            value,
            point,
            ineq_duals,
            eq_duals,
        } => {
            if !is_feasible(p, point)? || *value != dot(&p.c, point) {
                return fail("primal");
            }
            if ineq_duals.len() != p.a.rows() || eq_duals.len() != p.aeq.rows() {
                return fail("dual length");
            }
            if ineq_duals.iter().any(Signed::is_negative) {
                return fail("dual sign");
            }
            let sigma = p.sense.sign();
            let ya = p.a.vec_mul(ineq_duals)?;
            let za = p.aeq.vec_mul(eq_duals)?;
            for ((l, r), c) in ya.iter().zip(&za).zip(&p.c) {
                if l + r != &sigma * c {
                    return fail("dual feasibility");
                }
            }
            let ax = p.a.mul_vec(point)?;
            for ((y, l), b) in ineq_duals.iter().zip(&ax).zip(&p.b) {
                if !y.is_zero() && l != b {
                    return fail("complementary slackness");
                }
            }
            if dot(ineq_duals, &p.b) + dot(eq_duals, &p.beq) != &sigma * value {
                return fail("duality gap");
            }
        }
    }
    Ok(())
}
