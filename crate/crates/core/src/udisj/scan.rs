use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{enum_classes, UdisjParams};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScanMode {
    /// Every row set and column set drawn from the full lattice `2^[n]`.
    Exhaustive,
    /// Row and column sets containing each subset independently with
    /// probability 1/2.
    Sample { seed: u64, count: usize },
}

/// Row and column sets, as increasing lists of subset bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
}

impl Rectangle {
    pub fn full(p: &UdisjParams) -> Self {
        let all: Vec<u32> = (0..=p.full()).collect();
        Rectangle { rows: all.clone(), cols: all }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub id: u64,
    #[serde(with = "serde_rational")]
    pub p_a: Rational,
    #[serde(with = "serde_rational")]
    pub p_b: Rational,
    #[serde(with = "serde_rational")]
    pub corruption: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub eps: Rational,
    pub mode: ScanMode,
    pub scanned: u64,
    #[serde(with = "serde_rational")]
    pub best_value: Rational,
    pub best_id: u64,
    pub best_rectangle: Rectangle,
    /// `max{P(R|A) : P(R|B) = 0}`, exhaustive mode only.
    #[serde(with = "serde_rational::option")]
    pub max_pa_with_pb_zero: Option<Rational>,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["rectangle-id", "P(R|A)", "P(R|B)", "corruption"]).map_err(io)?;
        for r in &self.rows {
            out.write_record([
                r.id.to_string(),
                crate::ratlin::format_rational(&r.p_a),
                crate::ratlin::format_rational(&r.p_b),
                crate::ratlin::format_rational(&r.corruption),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Membership bitmaps of a rectangle over lattice indices.
struct Sides {
    rows: Vec<bool>,
    cols: Vec<bool>,
}

fn evaluate(id: u64, s: &Sides, a: &[(u32, u32)], b: &[(u32, u32)], eps: &Rational) -> ScanRow {
    let hits = |class: &[(u32, u32)]| {
        let k = class.iter().filter(|&&(x, y)| s.rows[x as usize] && s.cols[y as usize]).count();
        Rational::new((k as i64).into(), (class.len() as i64).into())
    };
    let (p_a, p_b) = (hits(a), hits(b));
    let corruption = (Rational::one() - eps) * &p_a - &p_b;
    ScanRow { id, p_a, p_b, corruption }
}

fn sides_from_masks(lattice: usize, rmask: u64, cmask: u64) -> Sides {
    Sides {
        rows: (0..lattice).map(|i| rmask >> i & 1 == 1).collect(),
        cols: (0..lattice).map(|i| cmask >> i & 1 == 1).collect(),
    }
}

fn rectangle_of(s: &Sides) -> Rectangle {
    let pick = |v: &[bool]| v.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i as u32).collect();
    Rectangle { rows: pick(&s.rows), cols: pick(&s.cols) }
}

/// Scans combinatorial rectangles `R ⊆ 2^[n] × 2^[n]` for
/// `(1 - ε) P(R|A) - P(R|B)`, with `A`, `B` uniform. Ties keep the lowest id.
pub fn rectangle_corruption_scan(p: &UdisjParams, eps: &Rational, mode: ScanMode, budget: &Budget) -> Result<ScanReport> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::input("eps must lie in (0, 1)"));
    }
    let (a, b) = enum_classes(p);
    let lattice = 1usize << p.n;
    let (rows, sides): (Vec<ScanRow>, Box<dyn Fn(u64) -> Sides + Sync>) = match mode {
        ScanMode::Exhaustive => {
            if lattice > 16 {
                return Err(Error::budget(format!(
                    "exhaustive scan over 2^{} rectangles is out of reach",
                    2 * lattice
                )));
            }
            let total = 1u64 << (2 * lattice);
            budget.charge(total, "exhaustive rectangle scan")?;
            let rows: Vec<ScanRow> = (0..total)
                .into_par_iter()
                .map(|id| evaluate(id, &sides_from_masks(lattice, id >> lattice, id & ((1 << lattice) - 1)), &a, &b, eps))
                .collect();
            (rows, Box::new(move |id| sides_from_masks(lattice, id >> lattice, id & ((1 << lattice) - 1))))
        }
        ScanMode::Sample { seed, count } => {
            budget.charge(count as u64 * lattice as u64, "sampled rectangle scan")?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let drawn: Vec<Sides> = (0..count)
                .map(|_| Sides {
                    rows: (0..lattice).map(|_| rng.gen_bool(0.5)).collect(),
                    cols: (0..lattice).map(|_| rng.gen_bool(0.5)).collect(),
                })
                .collect();
            let rows = drawn
                .par_iter()
                .enumerate()
                .map(|(id, s)| evaluate(id as u64, s, &a, &b, eps))
                .collect();
            (rows, Box::new(move |id| {
                let s = &drawn[id as usize];
                Sides { rows: s.rows.clone(), cols: s.cols.clone() }
            }))
        }
    };
    let best = rows
        .iter()
        .fold(None::<&ScanRow>, |acc, r| match acc {
            Some(x) if x.corruption >= r.corruption => Some(x),
            _ => Some(r),
        })
        .ok_or_else(|| Error::input("sample count must be positive"))?;
    let max_pa_with_pb_zero = match mode {
        ScanMode::Exhaustive => rows.iter().filter(|r| r.p_b.is_zero()).map(|r| r.p_a.clone()).max(),
        ScanMode::Sample { .. } => None,
    };
    Ok(ScanReport {
        n: p.n,
        eps: eps.clone(),
        mode,
        scanned: rows.len() as u64,
        best_value: best.corruption.clone(),
        best_id: best.id,
        best_rectangle: rectangle_of(&sides(best.id)),
        max_pa_with_pb_zero,
        rows,
    })
}

/// Exact corruption of one rectangle.
pub fn rectangle_corruption(p: &UdisjParams, eps: &Rational, r: &Rectangle) -> (Rational, Rational, Rational) {
    let (a, b) = enum_classes(p);
    let lattice = 1usize << p.n;
    let mark = |v: &[u32]| {
        let mut m = vec![false; lattice];
        for &x in v {
            if (x as usize) < lattice {
                m[x as usize] = true;
            }
        }
        m
    };
    let row = evaluate(0, &Sides { rows: mark(&r.rows), cols: mark(&r.cols) }, &a, &b, eps);
    (row.p_a, row.p_b, row.corruption)
}
