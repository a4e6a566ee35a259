use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bit, check_limit};
use crate::error::{Error, Result};
use crate::polyhedra::{ExtendedFormulation, HRep};
use crate::ratlin::rational::serde_rational;
use crate::ratlin::{dot, rat, RationalMatrix, Rational};

/// Brute-force limit for `ω(G)` and `max_over_cor`.
pub const CLIQUE_LIMIT: usize = 20;
/// Exhaustive `Q^all` separation enumerates `2^C(n,2)` graphs per vertex set.
pub const QALL_EXHAUSTIVE_LIMIT: usize = 4;

/// Graph with `V(G) ⊆ [n]`; labels are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

impl Graph {
    pub fn new(n: usize, vertices: Vec<usize>, edges: Vec<[usize; 2]>) -> Result<Self> {
        let g = Graph { n, vertices, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > 32 {
            return Err(Error::input("graphs are limited to n <= 32"));
        }
        let vm = self.vertex_mask_unchecked();
        if let Some(&v) = self.vertices.iter().find(|&&v| v == 0 || v > self.n) {
            return Err(Error::input(format!("vertex {v} outside [{}]", self.n)));
        }
        for &[i, j] in &self.edges {
            if i == j {
                return Err(Error::input(format!("loop at vertex {i}")));
            }
            if i == 0 || j == 0 || i > self.n || j > self.n || !bit(vm, i - 1) || !bit(vm, j - 1) {
                return Err(Error::input(format!("edge {i}-{j} leaves the vertex set")));
            }
        }
        Ok(())
    }

    fn vertex_mask_unchecked(&self) -> u32 {
        self.vertices
            .iter()
            .filter(|&&v| v >= 1 && v <= 32)
            .fold(0, |m, &v| m | 1 << (v - 1))
    }

    pub fn vertex_mask(&self) -> u32 {
        self.vertex_mask_unchecked()
    }

    /// Neighbourhood bitmasks, 0-based.
    pub fn adjacency(&self) -> Vec<u32> {
        let mut adj = vec![0u32; self.n];
        for &[i, j] in &self.edges {
            adj[i - 1] |= 1 << (j - 1);
            adj[j - 1] |= 1 << (i - 1);
        }
        adj
    }

    pub fn complete(n: usize) -> Self {
        let edges = (1..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| [i, j]))
            .collect();
        Graph {
            n,
            vertices: (1..=n).collect(),
            edges,
        }
    }

    /// Edgeless graph on the subset `mask`.
    pub fn edgeless(n: usize, mask: u32) -> Self {
        Graph {
            n,
            vertices: (1..=n).filter(|&v| bit(mask, v - 1)).collect(),
            edges: vec![],
        }
    }

    pub fn cycle(n: usize) -> Self {
        let edges = (1..=n).map(|i| [i, i % n + 1]).collect();
        Graph {
            n,
            vertices: (1..=n).collect(),
            edges,
        }
    }

    pub fn path(n: usize) -> Self {
        Graph {
            n,
            vertices: (1..=n).collect(),
            edges: (1..n).map(|i| [i, i + 1]).collect(),
        }
    }
}

/// `w^G`: ones on `V(G)`'s diagonal, `-1` on non-edges inside `V(G)`.
pub fn clique_weight(g: &Graph) -> RationalMatrix {
    let vm = g.vertex_mask();
    let adj = g.adjacency();
    RationalMatrix::from_fn(g.n, g.n, |i, j| {
        if !bit(vm, i) || !bit(vm, j) {
            Rational::zero()
        } else if i == j {
            Rational::one()
        } else if bit(adj[i], j) {
            Rational::zero()
        } else {
            -Rational::one()
        }
    })
}

fn max_clique(cand: u32, adj: &[u32], size: usize, best: &mut usize) {
    if cand == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + cand.count_ones() as usize <= *best {
        return;
    }
    let mut rest = cand;
    while rest != 0 {
        if size + rest.count_ones() as usize <= *best {
            return;
        }
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        max_clique(rest & adj[v], adj, size + 1, best);
    }
}

/// `ω(G)`; the empty graph has clique number 0.
pub fn clique_number(g: &Graph) -> Result<usize> {
    g.validate()?;
    check_limit("clique number", g.vertices.len(), CLIQUE_LIMIT)?;
    let mut best = 0;
    max_clique(g.vertex_mask(), &g.adjacency(), 0, &mut best);
    Ok(best)
}

/// `max_b <w, bbᵀ>` over `b ∈ {0,1}^n`, with the first maximiser in bitmask order.
pub fn max_over_cor(w: &RationalMatrix) -> Result<(Rational, u32)> {
    let n = w.rows();
    if w.cols() != n {
        return Err(Error::input("weight matrix must be square"));
    }
    check_limit("max over COR", n, CLIQUE_LIMIT)?;
    let mut best = (Rational::zero(), 0u32);
    for b in 1..1u32 << n {
        let mut v = Rational::zero();
        for i in (0..n).filter(|&i| bit(b, i)) {
            for j in (0..n).filter(|&j| bit(b, j)) {
                v += &w[(i, j)];
            }
        }
        if v > best.0 {
            best = (v, b);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum QallResult {
    Inside { heuristic: bool, graphs_checked: u64 },
    /// `x_ij < 0` for `i != j` (0-based indices).
    SignViolation {
        i: usize,
        j: usize,
        #[serde(with = "serde_rational")]
        value: Rational,
    },
    GraphViolation {
        graph: Graph,
        #[serde(with = "serde_rational")]
        lhs: Rational,
        omega: usize,
    },
}

impl QallResult {
    pub fn is_inside(&self) -> bool {
        matches!(self, QallResult::Inside { .. })
    }

    pub fn certificate(&self, x: &RationalMatrix) -> Option<crate::certificate::Certificate> {
        use crate::certificate::Certificate;
        match self {
            QallResult::Inside { .. } => None,
            QallResult::SignViolation { i, j, .. } => Some(Certificate::QallSignViolation {
                x: x.clone(),
                i: *i,
                j: *j,
            }),
            QallResult::GraphViolation { graph, .. } => Some(Certificate::QallViolation {
                x: x.clone(),
                graph: graph.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QallMode {
    Exhaustive,
    /// Random graphs; an "inside" answer is only heuristic.
    Sampled { seed: u64, count: u64 },
}

fn graph_from_masks(n: usize, vmask: u32, pairs: &[(usize, usize)], emask: u64) -> Graph {
    Graph {
        n,
        vertices: (1..=n).filter(|&v| bit(vmask, v - 1)).collect(),
        edges: pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| emask >> k & 1 == 1)
            .map(|(_, &(i, j))| [i + 1, j + 1])
            .collect(),
    }
}

fn check_graph(x: &RationalMatrix, g: Graph) -> Result<Option<QallResult>> {
    let lhs = dot(clique_weight(&g).entries(), x.entries());
    let omega = clique_number(&g)?;
    Ok((lhs > rat(omega as i64)).then_some(QallResult::GraphViolation { graph: g, lhs, omega }))
}

/// Separates `x` from `Q^all`: sign rows first (row-major), then graphs by
/// vertex subset and edge subset, both in bitmask order.
pub fn qall_separate(x: &RationalMatrix, mode: QallMode) -> Result<QallResult> {
    let n = x.rows();
    if x.cols() != n {
        return Err(Error::input("x must be square"));
    }
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if x[(i, j)].is_negative() {
                return Ok(QallResult::SignViolation {
                    i,
                    j,
                    value: x[(i, j)].clone(),
                });
            }
        }
    }
    match mode {
        QallMode::Exhaustive => {
            check_limit("exhaustive Q^all separation", n, QALL_EXHAUSTIVE_LIMIT)?;
            let mut checked = 0u64;
            for vmask in 1..1u32 << n {
                let verts: Vec<usize> = (0..n).filter(|&i| bit(vmask, i)).collect();
                let pairs: Vec<(usize, usize)> = verts
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &i)| verts[k + 1..].iter().map(move |&j| (i, j)))
                    .collect();
                for emask in 0..1u64 << pairs.len() {
                    checked += 1;
                    if let Some(v) = check_graph(x, graph_from_masks(n, vmask, &pairs, emask))? {
                        return Ok(v);
                    }
                }
            }
            Ok(QallResult::Inside {
                heuristic: false,
                graphs_checked: checked,
            })
        }
        QallMode::Sampled { seed, count } => {
            check_limit("sampled Q^all separation", n, CLIQUE_LIMIT)?;
            if n == 0 {
                return Ok(QallResult::Inside {
                    heuristic: true,
                    graphs_checked: 0,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let vmask = rng.gen_range(1..1u32 << n);
                let verts: Vec<usize> = (0..n).filter(|&i| bit(vmask, i)).collect();
                let pairs: Vec<(usize, usize)> = verts
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &i)| verts[k + 1..].iter().map(move |&j| (i, j)))
                    .collect();
                let emask = pairs
                    .iter()
                    .enumerate()
                    .fold(0u64, |m, (k, _)| if rng.gen_bool(0.5) { m | 1 << k } else { m });
                if let Some(v) = check_graph(x, graph_from_masks(n, vmask, &pairs, emask))? {
                    return Ok(v);
                }
            }
            Ok(QallResult::Inside {
                heuristic: true,
                graphs_checked: count,
            })
        }
    }
}

/// Slack form of `0 <= x <= 1` on `R^{n×n}`: size `2n²`.
pub fn box_ef(n: usize) -> ExtendedFormulation {
    ExtendedFormulation::trivial(&HRep::unit_box(n * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxReport {
    pub n: usize,
    pub ef_size: usize,
    #[serde(with = "serde_rational")]
    pub box_max: Rational,
    #[serde(with = "serde_rational")]
    pub cor_max: Rational,
    /// `box_max / cor_max` when the latter is positive.
    #[serde(with = "serde_rational::option")]
    pub ratio: Option<Rational>,
    pub within_factor_n: bool,
}

/// Compares `max <w, x>` over the box (sum of positive entries) with
/// `n · max_over_cor(w)`.
pub fn box_report(w: &RationalMatrix) -> Result<BoxReport> {
    let n = w.rows();
    let box_max = w
        .entries()
        .iter()
        .filter(|v| v.is_positive())
        .fold(Rational::zero(), |s, v| s + v);
    let (cor_max, _) = max_over_cor(w)?;
    let ratio = cor_max.is_positive().then(|| &box_max / &cor_max);
    let within = if cor_max.is_zero() {
        box_max.is_zero()
    } else {
        box_max <= rat(n as i64) * &cor_max
    };
    Ok(BoxReport {
        n,
        ef_size: 2 * n * n,
        box_max,
        cor_max,
        ratio,
        within_factor_n: within,
    })
}
