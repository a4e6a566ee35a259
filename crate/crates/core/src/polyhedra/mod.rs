//! Inner/outer descriptions of polyhedra, slack matrices of nested pairs,
//! extended formulations, and the exact sandwich checks `P ⊆ K ⊆ ρQ`.

mod sandwich;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{dot, RationalMatrix, Rational};

pub use sandwich::{
    ef_contains_points, ef_inside_hrep, ef_inside_hrep_with, verify_sandwich, Containment, Derivation, Generator,
    Inclusion, SandwichReport, SandwichStatus, Witnesses, recession_full_dim,
};

/// `conv(points) + cone(rays)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VRep {
    pub dim: usize,
    #[serde(with = "serde_rational::vecvec")]
    pub points: Vec<Vec<Rational>>,
    #[serde(default, with = "serde_rational::vecvec")]
    pub rays: Vec<Vec<Rational>>,
}

impl VRep {
    pub fn new(dim: usize, points: Vec<Vec<Rational>>, rays: Vec<Vec<Rational>>) -> Result<Self> {
        let v = VRep { dim, points, rays };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self
            .points
            .iter()
            .chain(&self.rays)
            .find(|g| g.len() != self.dim)
        {
            return Err(Error::input(format!(
                "generator of length {} in dimension {}",
                bad.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Vertices of `[0,1]^d` in bitmask order (bit `i` is coordinate `i`).
    pub fn unit_box_vertices(d: usize) -> Self {
        assert!(d < 20, "box too large to enumerate");
        let points = (0u32..1 << d)
            .map(|m| {
                (0..d)
                    .map(|i| if m >> i & 1 == 1 { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        VRep {
            dim: d,
            points,
            rays: vec![],
        }
    }
}

/// `{x : A x <= b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HRep {
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: RationalMatrix,
    #[serde(with = "serde_rational::vec")]
    pub b: Vec<Rational>,
}

impl HRep {
    pub fn new(a: RationalMatrix, b: Vec<Rational>) -> Result<Self> {
        let h = HRep { dim: a.cols(), a, b };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.rows() != self.b.len() || self.a.cols() != self.dim {
            return Err(Error::input(format!(
                "HRep: A is {}x{}, b has {} entries, dim {}",
                self.a.rows(),
                self.a.cols(),
                self.b.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// `[0,1]^d` as rows `-x_i <= 0` (all `i`) followed by `x_i <= 1`.
    pub fn unit_box(d: usize) -> Self {
        let a = RationalMatrix::from_fn(2 * d, d, |r, c| {
            if r < d && r == c {
                -Rational::one()
            } else if r >= d && r - d == c {
                Rational::one()
            } else {
                Rational::zero()
            }
        });
        let b = (0..2 * d)
            .map(|r| if r < d { Rational::zero() } else { Rational::one() })
            .collect();
        HRep { dim: d, a, b }
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        (0..self.rows()).all(|i| dot(self.a.row(i), x) <= self.b[i])
    }
}

/// Vertex and ray blocks of the slack matrix of a pair `(P, Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackMatrix {
    pub vertex_block: RationalMatrix,
    pub ray_block: RationalMatrix,
    #[serde(with = "serde_rational::vec")]
    pub source_b: Vec<Rational>,
}

impl SlackMatrix {
    /// `[S_vertex | S_ray]`.
    pub fn full(&self) -> RationalMatrix {
        self.vertex_block
            .hstack(&self.ray_block)
            .expect("slack blocks share rows")
    }

    /// All entries nonnegative, i.e. `P ⊆ Q` for the generating pair.
    pub fn is_nonnegative(&self) -> bool {
        self.vertex_block.is_nonnegative() && self.ray_block.is_nonnegative()
    }
}

/// `K = {x : ∃ y >= 0, E x + F y = g}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedFormulation {
    #[serde(rename = "E")]
    pub e: RationalMatrix,
    #[serde(rename = "F")]
    pub f: RationalMatrix,
    #[serde(with = "serde_rational::vec")]
    pub g: Vec<Rational>,
}

impl ExtendedFormulation {
    pub fn new(e: RationalMatrix, f: RationalMatrix, g: Vec<Rational>) -> Result<Self> {
        let k = ExtendedFormulation { e, f, g };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.e.rows() != self.f.rows() || self.e.rows() != self.g.len() {
            return Err(Error::input(format!(
                "EF: E has {} rows, F has {}, g has {}",
                self.e.rows(),
                self.f.rows(),
                self.g.len()
            )));
        }
        Ok(())
    }

    /// Number of nonnegative auxiliary variables.
    pub fn size(&self) -> usize {
        self.f.cols()
    }

    pub fn num_equations(&self) -> usize {
        self.e.rows()
    }

    pub fn dim(&self) -> usize {
        self.e.cols()
    }

    /// Slack form `A x + I y = b` of an outer description.
    pub fn trivial(q: &HRep) -> Self {
        ExtendedFormulation {
            e: q.a.clone(),
            f: RationalMatrix::identity(q.rows()),
            g: q.b.clone(),
        }
    }

    /// Checks `(x, y)` against the defining system exactly.
    pub fn satisfied_by(&self, x: &[Rational], y: &[Rational]) -> bool {
        if x.len() != self.dim() || y.len() != self.size() {
            return false;
        }
        if y.iter().any(|v| v < &Rational::zero()) {
            return false;
        }
        let ex = self.e.mul_vec(x).expect("dims checked");
        let fy = self.f.mul_vec(y).expect("dims checked");
        ex.iter().zip(&fy).zip(&self.g).all(|((a, b), g)| &(a + b) == g)
    }
}

pub fn build_slack(p: &VRep, q: &HRep) -> Result<SlackMatrix> {
    p.validate()?;
    q.validate()?;
    if p.dim != q.dim {
        return Err(Error::input(format!(
            "slack: P has dimension {}, Q has {}",
            p.dim, q.dim
        )));
    }
    let m = q.rows();
    let vertex_block = RationalMatrix::from_fn(m, p.points.len(), |i, j| {
        &q.b[i] - dot(q.a.row(i), &p.points[j])
    });
    let ray_block = RationalMatrix::from_fn(m, p.rays.len(), |i, j| -dot(q.a.row(i), &p.rays[j]));
    Ok(SlackMatrix {
        vertex_block,
        ray_block,
        source_b: q.b.clone(),
    })
}

/// `ρQ = {x : A x <= ρ b}` for `ρ >= 1`. Minimization pairs use the
/// reciprocal dilation and should scale `b` directly.
pub fn dilate(q: &HRep, rho: &Rational) -> Result<HRep> {
    if rho < &Rational::one() {
        return Err(Error::input(format!(
            "dilation factor {} < 1",
            crate::ratlin::format_rational(rho)
        )));
    }
    Ok(HRep {
        dim: q.dim,
        a: q.a.clone(),
        b: q.b.iter().map(|x| x * rho).collect(),
    })
}

/// Slack of `(P, ρQ)` from that of `(P, Q)`: vertex entries gain
/// `(ρ-1) b_i`, ray entries are unchanged.
pub fn shift_slack(s: &SlackMatrix, rho: &Rational) -> SlackMatrix {
    let delta = rho - Rational::one();
    let mut vertex_block = s.vertex_block.clone();
    for i in 0..vertex_block.rows() {
        let add = &delta * &s.source_b[i];
        for j in 0..vertex_block.cols() {
            vertex_block[(i, j)] += &add;
        }
    }
    SlackMatrix {
        vertex_block,
        ray_block: s.ray_block.clone(),
        source_b: s.source_b.iter().map(|x| x * rho).collect(),
    }
}

/// Conic version of `K`: `E x + F y - λ g = 0`, `y, λ >= 0`.
pub fn homogenize(k: &ExtendedFormulation) -> ExtendedFormulation {
    let neg_g = RationalMatrix::from_fn(k.g.len(), 1, |i, _| -k.g[i].clone());
    ExtendedFormulation {
        e: k.e.clone(),
        f: k.f.hstack(&neg_g).expect("same row count"),
        g: vec![Rational::zero(); k.g.len()],
    }
}
