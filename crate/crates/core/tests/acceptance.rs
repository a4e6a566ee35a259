//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the table; the test fails if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use efbound::budget::Budget;
use efbound::encodings::{
    box_report, build_cut_family, build_hard_pair, clique_number, clique_weight, covariance_map, cut_vector,
    hardpair_slack, max_over_cor, metric_hrep, outer01, psd_factors, CutKind, Graph,
};
use efbound::nnfact::{
    ef_to_factorization, factorization_to_ef, nnegrk_bounds, rect_cover_lb, verify_factorization, NmfConfig,
    NonnegFactorization,
};
use efbound::polyhedra::{
    build_slack, ef_contains_points, ef_inside_hrep, homogenize, shift_slack, verify_sandwich, Containment,
    ExtendedFormulation, HRep, Inclusion, VRep,
};
use efbound::ratlin::{mat_rank, rat, ratio, RationalMatrix, Rational};
use efbound::udisj::{
    corruption_rhs, entropy_gap, k_subsets, mu_class_probabilities, partitions, razborov_identities,
    rectangle_corruption, rectangle_corruption_scan, shift_rank_lb, CorruptionParams, FunctionTable, Rectangle,
    ScanMode, UdisjParams,
};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { ok: false, detail: detail.into() }
}

fn criterion(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let ok = out.ok && in_time;
    let timing = if in_time {
        format!("{:.2}s", took.as_secs_f64())
    } else {
        format!("{:.2}s, over the {}s limit", took.as_secs_f64(), limit.as_secs())
    };
    println!(
        "criterion {id:>2} {}: {title} [{}] ({timing})",
        if ok { "PASS" } else { "FAIL" },
        out.detail
    );
    ok
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

// 1
fn psd_identity() -> Outcome {
    let mut pairs = 0;
    for n in 1..=8 {
        match psd_factors(n) {
            Ok(r) if r.holds() && r.pairs_checked == 1u64 << (2 * n) => pairs += r.pairs_checked,
            Ok(r) => return fail(format!("n = {n}: mismatch {:?}", r.mismatch)),
            Err(e) => return fail(format!("n = {n}: {e}")),
        }
    }
    pass(format!("{pairs} pairs over n = 1..8"))
}

// 2
fn slack_consistency() -> Outcome {
    for n in 1..=3 {
        let hp = build_hard_pair(n).unwrap();
        let base = build_slack(&hp.p, &hp.q).unwrap();
        for rho in [rat(1), ratio(3, 2), rat(2)] {
            let closed = hardpair_slack(n, &rho).unwrap();
            let shifted = shift_slack(&base, &rho);
            if closed.full() != shifted.full() {
                return fail(format!("n = {n}, rho = {rho}"));
            }
        }
    }
    pass("n = 1..3, rho in {1, 3/2, 2}")
}

// 3
fn roundtrip_fixture(name: &str, p: &VRep, q: &HRep, extra: Vec<NonnegFactorization>) -> Result<usize, String> {
    let s = build_slack(p, q).map_err(|e| e.to_string())?.full();
    let mut facs = vec![NonnegFactorization::trivial(&s)];
    facs.extend(extra);
    for fac in &facs {
        if verify_factorization(&s, fac).map_err(|e| e.to_string())?.is_some() {
            continue;
        }
        let k = factorization_to_ef(q, fac).map_err(|e| e.to_string())?;
        let rep = verify_sandwich(p, q, &rat(1), &k).map_err(|e| e.to_string())?;
        if !rep.passed() {
            return Err(format!("{name}: sandwich fails for a rank-{} factorization", fac.rank()));
        }
        let back = ef_to_factorization(&k, p, q).map_err(|e| e.to_string())?;
        if verify_factorization(&s, &back).map_err(|e| e.to_string())?.is_some() {
            return Err(format!("{name}: reconstructed factorization is wrong"));
        }
        if back.rank() > k.size() + 1 {
            return Err(format!("{name}: rank {} > size {} + 1", back.rank(), k.size()));
        }
    }
    Ok(facs.len())
}

fn factorization_roundtrip() -> Outcome {
    let mut fixtures: Vec<(String, VRep, HRep)> = Vec::new();
    for n in 1..=3 {
        let hp = build_hard_pair(n).unwrap();
        fixtures.push((format!("hard pair n={n}"), hp.p, hp.q));
    }
    for d in 1..=3 {
        fixtures.push((format!("box d={d}"), VRep::unit_box_vertices(d), HRep::unit_box(d)));
    }
    let mut checked = 0;
    for (name, p, q) in &fixtures {
        let s = build_slack(p, q).unwrap().full();
        let cfg = NmfConfig { iterations: 400, restarts: 2, ..NmfConfig::default() };
        let extra = nnegrk_bounds(&s, &cfg, &Budget::default())
            .ok()
            .and_then(|b| b.upper_witness)
            .into_iter()
            .collect();
        match roundtrip_fixture(name, p, q, extra) {
            Ok(k) => checked += k,
            Err(e) => return fail(e),
        }
    }
    pass(format!("{} fixtures, {checked} factorizations", fixtures.len()))
}

// 4
/// `E[X | A]` and `E[X | B]` by weighting every `(T, a, b)` triple, with
/// no reference to the class lists or the Row/Col statistics.
fn mu_weighted(p: &UdisjParams, f: &FunctionTable, g: &FunctionTable) -> (Rational, Rational) {
    let (mut sa, mut na, mut sb, mut nb) = (Rational::zero(), 0i64, Rational::zero(), 0i64);
    for t in partitions(p) {
        let ib = 1u32 << (t.i - 1);
        for a in k_subsets(t.t1 | ib, p.l) {
            for b in k_subsets(t.t2 | ib, p.l) {
                let x = f.at(a) * g.at(b);
                if a & b == 0 {
                    sa += x;
                    na += 1;
                } else {
                    sb += x;
                    nb += 1;
                }
            }
        }
    }
    (sa / rat(na), sb / rat(nb))
}

fn corruption_identities() -> Outcome {
    for (n, seed) in [(3, 11u64), (7, 12)] {
        let p = UdisjParams::new(n).unwrap();
        let b = Budget::default();
        let mu = mu_class_probabilities(&p, &b).unwrap();
        if (mu.p_a.clone(), mu.p_b.clone()) != (ratio(3, 4), ratio(1, 4)) || !mu.uniform_on_a || !mu.uniform_on_b {
            return fail(format!("n = {n}: class probabilities {} / {}", mu.p_a, mu.p_b));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let f = FunctionTable::random(n, &mut rng);
            let g = FunctionTable::random(n, &mut rng);
            let r = razborov_identities(&f, &g, &p, &b).unwrap();
            if !r.holds() {
                return fail(format!("n = {n}: {r:?}"));
            }
            if mu_weighted(&p, &f, &g) != (r.e_x_given_a.clone(), r.e_x_given_b.clone()) {
                return fail(format!("n = {n}: mu-weighted expectations disagree"));
            }
        }
    }
    pass("n in {3, 7}, 20 random (f, g) each, P(A), P(B) = 3/4, 1/4")
}

// 5
fn entropy_bound() -> Outcome {
    let mut worst = f64::INFINITY;
    for k in 1..=10_000 {
        let x = k as f64 / 10_001.0;
        worst = worst.min(entropy_gap(x).unwrap());
    }
    if worst >= -1e-12 {
        pass(format!("min gap {worst:.3e} over 10^4 points"))
    } else {
        fail(format!("min gap {worst:.3e}"))
    }
}

// 6
fn exhaustive_scan() -> Outcome {
    let p = UdisjParams::new(3).unwrap();
    for eps in [ratio(1, 10), ratio(1, 2), ratio(9, 10)] {
        let rep = rectangle_corruption_scan(&p, &eps, ScanMode::Exhaustive, &Budget::default()).unwrap();
        if rep.scanned != 1 << 16 {
            return fail(format!("scanned {}", rep.scanned));
        }
        if rep.max_pa_with_pb_zero != Some(ratio(1, 3)) {
            return fail(format!("max P(R|A) with P(R|B) = 0 is {:?}", rep.max_pa_with_pb_zero));
        }
        let (_, _, full) = rectangle_corruption(&p, &eps, &Rectangle::full(&p));
        if full != -eps.clone() || rep.rows.last().map(|r| &r.corruption) != Some(&full) {
            return fail(format!("full rectangle corruption {full} at eps = {eps}"));
        }
    }
    pass("2^16 rectangles, eps in {1/10, 1/2, 9/10}")
}

// 7
fn omega_oracle(n: usize, vmask: u32, adj: &[u32]) -> usize {
    (0..1u32 << n)
        .filter(|&s| s & !vmask == 0)
        .filter(|&s| (0..n).all(|i| s >> i & 1 == 0 || (s & !(1 << i)) & !adj[i] == 0))
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn clique_encoding() -> Outcome {
    let mut graphs = 0;
    for n in 1..=4usize {
        for vmask in 0u32..1 << n {
            let vs: Vec<usize> = (1..=n).filter(|&v| vmask >> (v - 1) & 1 == 1).collect();
            let pairs: Vec<[usize; 2]> = vs
                .iter()
                .flat_map(|&i| vs.iter().filter(move |&&j| j > i).map(move |&j| [i, j]))
                .collect();
            for emask in 0u32..1 << pairs.len() {
                let edges: Vec<[usize; 2]> =
                    pairs.iter().enumerate().filter(|(k, _)| emask >> k & 1 == 1).map(|(_, e)| *e).collect();
                let mut adj = vec![0u32; n];
                for &[i, j] in &edges {
                    adj[i - 1] |= 1 << (j - 1);
                    adj[j - 1] |= 1 << (i - 1);
                }
                let g = Graph::new(n, vs.clone(), edges).unwrap();
                let w = clique_weight(&g);
                let omega = clique_number(&g).unwrap();
                let (cor, _) = max_over_cor(&w).unwrap();
                if omega != omega_oracle(n, vmask, &adj) || cor != rat(omega as i64) {
                    return fail(format!("{g:?}: omega {omega}, cor max {cor}"));
                }
                let bx = box_report(&w).unwrap();
                if !bx.within_factor_n {
                    return fail(format!("{g:?}: box ratio above n"));
                }
                graphs += 1;
            }
        }
        let edgeless = box_report(&clique_weight(&Graph::edgeless(n, (1 << n) - 1))).unwrap();
        if edgeless.ratio != Some(rat(n as i64)) {
            return fail(format!("edgeless graph on [{n}] has ratio {:?}", edgeless.ratio));
        }
    }
    pass(format!("{graphs} labeled graphs, edgeless ratios = n"))
}

// 8
fn covariance_bijection() -> Outcome {
    for n in 2..=5usize {
        let m = n - 1;
        let images: BTreeSet<Vec<Rational>> = (0u32..1 << m)
            .map(|x| covariance_map(&cut_vector(n, x), n).unwrap().entries().to_vec())
            .collect();
        let vertices: BTreeSet<Vec<Rational>> = (0u32..1 << m).map(|b| outer01(m, b).entries().to_vec()).collect();
        if images.len() != 1 << m || images != vertices {
            return fail(format!("n = {n}"));
        }
    }
    pass("n = 2..5")
}

// 9
fn homogenization() -> Outcome {
    let k = homogenize(&ExtendedFormulation::trivial(&metric_hrep(3, true)));
    let cuts = build_cut_family(CutKind::CutPolytope, 3).unwrap();
    match ef_contains_points(&cuts, &k).unwrap() {
        Containment::Contained(_) => {}
        other => return fail(format!("cut vector outside: {other:?}")),
    }
    let cone = metric_hrep(3, false);
    match ef_inside_hrep(&k, &cone).unwrap() {
        Inclusion::Inside(d) if d.verify(&k, &cone) && cone.rows() == 3 => pass("4 cuts inside, 3 triangle rows derived"),
        Inclusion::Inside(_) => fail("derivation does not re-verify"),
        other => fail(format!("{other:?}")),
    }
}

// 10
fn bound_formulas() -> Outcome {
    let v = corruption_rhs(&CorruptionParams { eps: 1.0, c: 0.0 }, 16).unwrap();
    if (v - (-1.0f64).exp()).abs() > 1e-12 {
        return fail(format!("corruption_rhs(1, 16, 0) = {v}"));
    }
    for c in [0.0, 1.0] {
        let eps = 0.04;
        let rhos: Vec<Rational> = (0..20).map(|k| rat(1) + ratio(k, 1)).collect();
        let by_rho: Vec<f64> =
            rhos.iter().map(|r| shift_rank_lb(1_000_003, r, Some(eps), c).unwrap().value).collect();
        if by_rho.windows(2).any(|w| w[1] > w[0]) {
            return fail(format!("not nonincreasing in rho at C = {c}: {by_rho:?}"));
        }
        let by_n: Vec<f64> =
            (0..20).map(|k| shift_rank_lb(3 + 40_000 * k, &rat(1), Some(eps), c).unwrap().value).collect();
        if by_n.windows(2).any(|w| w[1] < w[0]) {
            return fail(format!("not nondecreasing in n at C = {c}: {by_n:?}"));
        }
    }
    pass("rhs = 1/e, 20-point grids in rho and n, C in {0, 1}")
}

// 11
fn bound_soundness() -> Outcome {
    let mut fixtures: Vec<(RationalMatrix, NonnegFactorization)> = Vec::new();
    let id = RationalMatrix::identity(3);
    fixtures.push((id.clone(), NonnegFactorization { t: id.clone(), u: id.clone() }));
    let ones = RationalMatrix::from_i64(3, 4, &[1; 12]);
    fixtures.push((
        ones,
        NonnegFactorization {
            t: RationalMatrix::from_i64(3, 1, &[1, 1, 1]),
            u: RationalMatrix::from_i64(1, 4, &[1, 1, 1, 1]),
        },
    ));
    for n in 1..=3 {
        let s = hardpair_slack(n, &rat(1)).unwrap().full();
        fixtures.push((s.clone(), NonnegFactorization::trivial(&s)));
        let s2 = hardpair_slack(n, &ratio(3, 2)).unwrap().full();
        fixtures.push((s2.clone(), NonnegFactorization::trivial(&s2)));
    }
    let sq = RationalMatrix::from_fn(4, 4, |i, j| rat((i as i64 - j as i64).pow(2)));
    fixtures.push((sq.clone(), NonnegFactorization::trivial(&sq)));
    let seg = build_slack(&VRep::unit_box_vertices(1), &HRep::unit_box(1)).unwrap().full();
    fixtures.push((seg.clone(), NonnegFactorization::trivial(&seg)));

    let mut witnesses = Vec::new();
    for (s, _) in &fixtures {
        let cfg = NmfConfig { iterations: 400, restarts: 2, ..NmfConfig::default() };
        if let Some(w) = nnegrk_bounds(s, &cfg, &Budget::default()).ok().and_then(|b| b.upper_witness) {
            witnesses.push((s.clone(), w));
        }
    }
    fixtures.extend(witnesses);

    for (s, fac) in &fixtures {
        if verify_factorization(s, fac).unwrap().is_some() {
            return fail("fixture factorization does not verify");
        }
        let lb = mat_rank(s).max(rect_cover_lb(s, &Budget::default()).unwrap().bound);
        if lb > fac.rank() {
            return fail(format!("lower bound {lb} above verified rank {}", fac.rank()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let (r, c) = (rng.gen_range(1..7), rng.gen_range(1..7));
        let m = RationalMatrix::from_fn(r, c, |_, _| ratio(rng.gen_range(1..30), rng.gen_range(1..5)));
        let b = rect_cover_lb(&m, &Budget::default()).unwrap().bound;
        if b != 1 {
            return fail(format!("positive {r}x{c} matrix has cover bound {b}"));
        }
    }
    pass(format!("{} verified factorizations, 50 positive matrices", fixtures.len()))
}

fn main() {
    let results = [
        criterion(1, "PSD factor identity", secs(10), psd_identity),
        criterion(2, "slack consistency", secs(10), slack_consistency),
        criterion(3, "factorization roundtrip", secs(60), factorization_roundtrip),
        criterion(4, "corruption-lemma identities", secs(60), corruption_identities),
        criterion(5, "entropy Taylor bound", secs(1), entropy_bound),
        criterion(6, "exhaustive corruption scan", secs(30), exhaustive_scan),
        criterion(7, "CLIQUE encoding", secs(120), clique_encoding),
        criterion(8, "covariance bijection", secs(10), covariance_bijection),
        criterion(9, "homogenization", secs(10), homogenization),
        criterion(10, "bound formulas", secs(1), bound_formulas),
        criterion(11, "bound soundness", secs(30), bound_soundness),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
