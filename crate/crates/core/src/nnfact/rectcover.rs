use std::collections::{BTreeSet, HashSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::ratlin::RationalMatrix;

type Bits = Vec<u64>;

fn bits_new(n: usize) -> Bits {
    vec![0; n.div_ceil(64)]
}

fn bits_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bits_get(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn bits_and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn bits_empty(a: &Bits) -> bool {
    a.iter().all(|&x| x == 0)
}

fn bits_iter(b: &Bits, n: usize) -> impl Iterator<Item = usize> + '_ {
    (0..n).filter(move |&i| bits_get(b, i))
}

/// Minimum rectangle cover of the support, or a lower bound on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectCover {
    pub bound: usize,
    /// Rectangles of an optimal cover as (rows, cols) of the original
    /// matrix.
    pub cover: Vec<(Vec<usize>, Vec<usize>)>,
    /// Support entries no two of which fit in one rectangle.
    pub fooling_set: Vec<(usize, usize)>,
    pub maximal_rectangles: usize,
}

struct Instance {
    /// support rows of the deduplicated matrix, over deduplicated columns
    rows: Vec<Bits>,
    ncols: usize,
    row_groups: Vec<Vec<usize>>,
    col_groups: Vec<Vec<usize>>,
}

fn reduce(s: &RationalMatrix) -> Instance {
    let support = |i: usize, j: usize| !s[(i, j)].is_zero();
    // distinct nonzero columns
    let mut col_keys: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
    for j in 0..s.cols() {
        let key: Vec<bool> = (0..s.rows()).map(|i| support(i, j)).collect();
        if !key.iter().any(|&b| b) {
            continue;
        }
        match col_keys.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(j),
            None => col_keys.push((key, vec![j])),
        }
    }
    let ncols = col_keys.len();
    let mut row_keys: Vec<(Bits, Vec<usize>)> = Vec::new();
    for i in 0..s.rows() {
        let mut b = bits_new(ncols);
        for (c, (key, _)) in col_keys.iter().enumerate() {
            if key[i] {
                bits_set(&mut b, c);
            }
        }
        if bits_empty(&b) {
            continue;
        }
        match row_keys.iter_mut().find(|(k, _)| *k == b) {
            Some((_, g)) => g.push(i),
            None => row_keys.push((b, vec![i])),
        }
    }
    Instance {
        rows: row_keys.iter().map(|(b, _)| b.clone()).collect(),
        ncols,
        row_groups: row_keys.into_iter().map(|(_, g)| g).collect(),
        col_groups: col_keys.into_iter().map(|(_, g)| g).collect(),
    }
}

/// Column sets closed under `C = ∩ rows containing C`, i.e. the column
/// sides of all maximal all-one rectangles.
fn maximal_rectangles(inst: &Instance, budget: &Budget) -> Result<Vec<(Bits, Bits)>> {
    let mut seen: HashSet<Bits> = HashSet::new();
    let mut frontier: Vec<Bits> = Vec::new();
    for r in &inst.rows {
        if seen.insert(r.clone()) {
            frontier.push(r.clone());
        }
    }
    while let Some(c) = frontier.pop() {
        for r in &inst.rows {
            budget.charge(1, "maximal rectangle enumeration")?;
            let x = bits_and(&c, r);
            if !bits_empty(&x) && seen.insert(x.clone()) {
                frontier.push(x);
            }
        }
    }
    let mut rects: Vec<(Bits, Bits)> = seen
        .into_iter()
        .map(|cols| {
            let mut rows = bits_new(inst.rows.len());
            for (i, r) in inst.rows.iter().enumerate() {
                if bits_subset(&cols, r) {
                    bits_set(&mut rows, i);
                }
            }
            (rows, cols)
        })
        .collect();
    rects.sort();
    Ok(rects)
}

struct Search<'a> {
    rects: &'a [(Bits, Bits)],
    /// rectangles covering each element
    covering: Vec<Vec<usize>>,
    elems: Vec<(usize, usize)>,
    /// elements pairwise in a common rectangle
    compatible: Vec<Bits>,
    best: Vec<usize>,
    budget: &'a Budget,
}

impl Search<'_> {
    fn covers(&self, r: usize, e: usize) -> bool {
        let (i, j) = self.elems[e];
        bits_get(&self.rects[r].0, i) && bits_get(&self.rects[r].1, j)
    }

    /// Greedy fooling set among uncovered elements.
    fn fooling(&self, uncovered: &[usize]) -> Vec<usize> {
        let mut order = uncovered.to_vec();
        order.sort_by_key(|&e| self.covering[e].len());
        let mut chosen: Vec<usize> = Vec::new();
        for e in order {
            if chosen.iter().all(|&f| !bits_get(&self.compatible[e], f)) {
                chosen.push(e);
            }
        }
        chosen
    }

    fn run(&mut self, chosen: &mut Vec<usize>, uncovered: Vec<usize>) -> Result<()> {
        self.budget.charge(1, "rectangle cover search")?;
        if uncovered.is_empty() {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return Ok(());
        }
        if chosen.len() + self.fooling(&uncovered).len() >= self.best.len() {
            return Ok(());
        }
        let &pivot = uncovered
            .iter()
            .min_by_key(|&&e| self.covering[e].len())
            .expect("nonempty");
        for &r in &self.covering[pivot].clone() {
            let rest: Vec<usize> = uncovered.iter().copied().filter(|&e| !self.covers(r, e)).collect();
            chosen.push(r);
            self.run(chosen, rest)?;
            chosen.pop();
        }
        Ok(())
    }
}

fn budget_with_best(err: Error, best: usize) -> Error {
    match err {
        Error::Budget { reason, .. } => Error::Budget {
            reason,
            best: Some(best),
        },
        other => other,
    }
}

/// Exact minimum number of all-one rectangles covering the support of `s`,
/// by branch and bound over maximal rectangles with a fooling-set bound.
/// When the budget runs out the error carries the best lower bound found.
pub fn rect_cover_lb(s: &RationalMatrix, budget: &Budget) -> Result<RectCover> {
    let inst = reduce(s);
    let rects = maximal_rectangles(&inst, budget).map_err(|e| budget_with_best(e, usize::from(!inst.rows.is_empty())))?;

    let mut elems = Vec::new();
    for (i, r) in inst.rows.iter().enumerate() {
        for j in bits_iter(r, inst.ncols) {
            elems.push((i, j));
        }
    }
    let covering: Vec<Vec<usize>> = elems
        .iter()
        .map(|&(i, j)| {
            (0..rects.len())
                .filter(|&r| bits_get(&rects[r].0, i) && bits_get(&rects[r].1, j))
                .collect()
        })
        .collect();
    let compatible: Vec<Bits> = elems
        .iter()
        .map(|&(i, j)| {
            let mut b = bits_new(elems.len());
            for (f, &(k, l)) in elems.iter().enumerate() {
                if bits_get(&inst.rows[i], l) && bits_get(&inst.rows[k], j) {
                    bits_set(&mut b, f);
                }
            }
            b
        })
        .collect();

    // Greedy cover as the starting incumbent.
    let mut greedy = Vec::new();
    let mut left: BTreeSet<usize> = (0..elems.len()).collect();
    while let Some(&e) = left.iter().next() {
        let r = *covering[e]
            .iter()
            .max_by_key(|&&r| left.iter().filter(|&&f| covering[f].contains(&r)).count())
            .expect("every support entry lies in a maximal rectangle");
        left.retain(|&f| !(bits_get(&rects[r].0, elems[f].0) && bits_get(&rects[r].1, elems[f].1)));
        greedy.push(r);
    }

    let mut search = Search {
        rects: &rects,
        covering,
        elems,
        compatible,
        best: greedy,
        budget,
    };
    let all: Vec<usize> = (0..search.elems.len()).collect();
    let fooling = search.fooling(&all);
    let root_lb = fooling.len();
    if root_lb < search.best.len() {
        search
            .run(&mut Vec::new(), all)
            .map_err(|e| budget_with_best(e, root_lb))?;
    }

    let expand_rows = |b: &Bits| -> Vec<usize> {
        let mut v: Vec<usize> = bits_iter(b, inst.rows.len())
            .flat_map(|i| inst.row_groups[i].iter().copied())
            .collect();
        v.sort_unstable();
        v
    };
    let expand_cols = |b: &Bits| -> Vec<usize> {
        let mut v: Vec<usize> = bits_iter(b, inst.ncols)
            .flat_map(|j| inst.col_groups[j].iter().copied())
            .collect();
        v.sort_unstable();
        v
    };
    let cover = search
        .best
        .iter()
        .map(|&r| (expand_rows(&rects[r].0), expand_cols(&rects[r].1)))
        .collect();
    let fooling_set = fooling
        .iter()
        .map(|&e| {
            let (i, j) = search.elems[e];
            (inst.row_groups[i][0], inst.col_groups[j][0])
        })
        .collect();
    Ok(RectCover {
        bound: search.best.len(),
        cover,
        fooling_set,
        maximal_rectangles: rects.len(),
    })
}
