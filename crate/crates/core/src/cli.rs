//! Command-line front end. `run` returns the process exit status:
//! 0 success, 1 verification failure (certificate written), 2 input error,
//! 3 budget exhausted, 4 internal error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::budget::{Budget, BUDGET_ENV};
use crate::certificate::Certificate;
use crate::encodings::{
    box_ef, box_report, build_cut_family, build_hard_pair, clique_number, clique_weight, covariance_map,
    cut_vector, hardpair_slack, max_over_cor, metric_hrep, psd_factors, qall_separate, spectra_vertex_witness,
    CutKind, Graph, QallMode, QallResult,
};
use crate::error::{Error, Result};
use crate::nnfact::{
    ef_to_factorization, factorization_to_ef, nnegrk_bounds, verify_factorization, mismatch_certificate,
    NmfConfig, NonnegFactorization,
};
use crate::polyhedra::{build_slack, dilate, shift_slack, verify_sandwich, ExtendedFormulation, HRep, SlackMatrix, VRep};
use crate::ratlin::{format_rational, parse_rational, RationalMatrix, Rational};
use crate::udisj::{
    build_shift, corruption_rhs, mu_class_probabilities, razborov_identities, random_trials,
    rectangle_corruption_scan, shift_rank_lb, CorruptionParams, Fill, FunctionTable, ScanMode, UdisjParams,
};

#[derive(Debug, Parser)]
#[command(name = "efbound", version, about = "Exact slack matrices, extended formulations and nonnegative-rank bounds")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Step budget for exhaustive enumerations.
    #[arg(long, global = true, default_value_t = 50_000_000)]
    pub max_steps: u64,
    /// Where failure certificates go; defaults to `<out>.cert.json`, or
    /// `efbound-certificate.json` without `--out`.
    #[arg(long, global = true)]
    pub cert: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutKindArg {
    CutPolytope,
    CutCone,
    CorrelationCone,
}

impl From<CutKindArg> for CutKind {
    fn from(k: CutKindArg) -> Self {
        match k {
            CutKindArg::CutPolytope => CutKind::CutPolytope,
            CutKindArg::CutCone => CutKind::CutCone,
            CutKindArg::CorrelationCone => CutKind::CorrelationCone,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanModeArg {
    Exhaustive,
    Sample,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Slack matrix of `P` (points, rays) against `Q`.
    Slack {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// `ρQ = {x : A x <= ρ b}`.
    Dilate {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        rho: String,
    },
    /// Slack matrix of `(P, ρQ)` from that of `(P, Q)`.
    ShiftSlack {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        rho: String,
    },
    /// EF `A x + T y = b, y >= 0` from a factorization `S = T U`.
    Fac2ef {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        fac: PathBuf,
        /// Check the factorization against the slack matrix of `(P, Q)` first.
        #[arg(long)]
        p: Option<PathBuf>,
    },
    /// Factorization of the slack matrix of `(P, Q)` from an EF between them.
    Ef2fac {
        #[arg(long)]
        ef: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Certified lower and upper bounds on the nonnegative rank.
    NnegrkBounds {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 64)]
        max_den: u64,
    },
    /// ρ-extension of unique disjointness, `2^n × 2^n`.
    UdisjShift {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        rho: String,
        /// Constant for pairs meeting in two or more elements; hard-pair
        /// values otherwise.
        #[arg(long)]
        fill: Option<String>,
    },
    /// Exact check of the class probabilities and the Row/Col identities.
    RazborovCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Function tables; random tables are used when absent.
        #[arg(long, requires = "g")]
        f: Option<PathBuf>,
        #[arg(long, requires = "f")]
        g: Option<PathBuf>,
    },
    /// Corruption `(1-ε)P(R|A) - P(R|B)` over rectangles.
    CorruptionScan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: String,
        #[arg(long, value_enum, default_value_t = ScanModeArg::Exhaustive)]
        mode: ScanModeArg,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// `2^(-ε²ℓ/(16 ln 2) + C log₂ ℓ)`.
    CorruptionBound {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
    },
    /// Lower bound on the nonnegative rank of a ρ-extension.
    ShiftLb {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        rho: String,
        /// Defaults to `1/(2ρ)`.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
    },
    /// `COR(n)` and `Q(n)`.
    Hardpair {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out_p: Option<PathBuf>,
        #[arg(long)]
        out_q: Option<PathBuf>,
    },
    /// Slack matrix of `(COR(n), ρQ(n))` in closed form.
    HardpairSlack {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        rho: String,
    },
    /// Checks `P ⊆ K ⊆ ρQ`.
    VerifySandwich {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, default_value = "1")]
        rho: String,
        #[arg(long)]
        ef: PathBuf,
    },
    /// CLIQUE objective matrix `w^G`.
    CliqueWeight {
        #[arg(long)]
        graph: PathBuf,
    },
    /// `ω(G)` and the maximum of `<w^G, ·>` over `COR(n)`.
    CliqueOmega {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Separates a symmetric matrix from `Q^all`.
    QallSeparate {
        #[arg(long)]
        x: PathBuf,
        /// Random graphs instead of all of them.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Trivial box EF of CLIQUE; with `--graph`, its approximation ratio.
    BoxEf {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Cut polytope, cut cone or correlation cone generators.
    CutFamily {
        #[arg(long, value_enum)]
        kind: CutKindArg,
        #[arg(long)]
        n: usize,
        /// Metric inequalities instead of generators.
        #[arg(long)]
        hrep: bool,
    },
    /// Covariance map of a cut vector.
    Covmap {
        #[arg(long)]
        n: usize,
        /// JSON list of edge values, lexicographic edge order.
        #[arg(long, conflicts_with = "subset")]
        x: Option<PathBuf>,
        /// Cut shore `X ⊆ [n-1]` as a bitmask.
        #[arg(long)]
        subset: Option<u32>,
    },
    /// `<T_a, U^b> = (1 - aᵀb)²` for all `a, b`.
    PsdCheck {
        #[arg(long)]
        n: usize,
    },
    /// `(bbᵀ, U^b)` against every spectrahedral equation.
    SpectraWitness {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: u32,
    },
    /// Re-verifies a certificate file.
    CheckCert {
        #[arg(value_name = "FILE")]
        file: PathBuf,
    },
}

enum Payload {
    Json(Value),
    Text(String),
    Csv(String),
}

struct Outcome {
    payload: Payload,
    failure: Option<(String, Certificate)>,
}

impl Outcome {
    fn ok(v: impl Serialize) -> Result<Self> {
        Ok(Outcome { payload: Payload::Json(serde_json::to_value(v)?), failure: None })
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s)
}

fn matrix_csv(m: &RationalMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(format_rational).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn text_of(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}: {s}\n"),
                other => format!("{k}: {other}\n"),
            })
            .collect(),
        other => format!("{other}\n"),
    }
}

fn budget(g: &Global) -> Budget {
    Budget::steps(g.max_steps).with_env_deadline()
}

fn validate_params(n: usize) -> Result<UdisjParams> {
    UdisjParams::new(n)
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Slack { p, q } => {
            let s = build_slack(&read_json::<VRep>(p)?, &read_json::<HRep>(q)?)?;
            slack_outcome(g, s)
        }
        Command::Dilate { q, rho } => Outcome::ok(dilate(&read_json::<HRep>(q)?, &rational(rho)?)?),
        Command::ShiftSlack { s, rho } => {
            let s: SlackMatrix = read_json(s)?;
            let rho = rational(rho)?;
            if rho < Rational::from_integer(1.into()) {
                return Err(Error::input("rho must be at least 1"));
            }
            slack_outcome(g, shift_slack(&s, &rho))
        }
        Command::Fac2ef { q, fac, p } => {
            let q: HRep = read_json(q)?;
            let fac: NonnegFactorization = read_json(fac)?;
            if let Some(p) = p {
                let s = build_slack(&read_json::<VRep>(p)?, &q)?.full();
                if let Some(issue) = verify_factorization(&s, &fac)? {
                    return Ok(Outcome {
                        payload: Payload::Json(json!({ "verified": false, "issue": issue })),
                        failure: Some(("factorization does not reproduce the slack matrix".into(), mismatch_certificate(&s, &fac))),
                    });
                }
            }
            Outcome::ok(factorization_to_ef(&q, &fac)?)
        }
        Command::Ef2fac { ef, p, q } => {
            let k: ExtendedFormulation = read_json(ef)?;
            let fac = ef_to_factorization(&k, &read_json(p)?, &read_json(q)?)?;
            Outcome::ok(fac)
        }
        Command::NnegrkBounds { matrix, iterations, restarts, max_den } => {
            let s: RationalMatrix = read_json(matrix)?;
            let cfg = NmfConfig { iterations: *iterations, restarts: *restarts, seed: g.seed, max_den: *max_den };
            let b = nnegrk_bounds(&s, &cfg, &budget(g))?;
            let lines = b.provenance();
            let payload = match g.format {
                Format::Text => Payload::Text(lines.join("\n") + "\n"),
                _ => {
                    let mut v = serde_json::to_value(&b)?;
                    v["provenance"] = json!(lines);
                    Payload::Json(v)
                }
            };
            Ok(Outcome { payload, failure: None })
        }
        Command::UdisjShift { n, rho, fill } => {
            let fill = match fill {
                Some(c) => Fill::Constant { value: rational(c)? },
                None => Fill::HardPair,
            };
            let m = build_shift(*n, &rational(rho)?, &fill, &budget(g))?;
            matrix_outcome(g, m)
        }
        Command::RazborovCheck { n, trials, f, g: gpath } => {
            let p = validate_params(*n)?;
            let b = budget(g);
            let mu = mu_class_probabilities(&p, &b)?;
            let reports = match (f, gpath) {
                (Some(f), Some(gp)) => {
                    let f: FunctionTable = read_json(f)?;
                    let gt: FunctionTable = read_json(gp)?;
                    vec![razborov_identities(&f, &gt, &p, &b)?]
                }
                _ => random_trials(&p, *trials, g.seed, &b)?,
            };
            let quarter = Rational::new(1.into(), 4.into());
            let mu_ok = mu.p_a == Rational::from_integer(1.into()) - &quarter
                && mu.p_b == quarter
                && mu.uniform_on_a
                && mu.uniform_on_b
                && mu.support_is_a_union_b;
            let all = mu_ok && reports.iter().all(|r| r.holds());
            if !all {
                return Err(Error::internal("corruption-lemma identity failed to hold exactly"));
            }
            Outcome::ok(json!({ "n": p.n, "l": p.l, "holds": all, "mu": mu, "trials": reports }))
        }
        Command::CorruptionScan { n, eps, mode, count } => {
            let p = validate_params(*n)?;
            let mode = match mode {
                ScanModeArg::Exhaustive => ScanMode::Exhaustive,
                ScanModeArg::Sample => ScanMode::Sample { seed: g.seed, count: *count },
            };
            let rep = rectangle_corruption_scan(&p, &rational(eps)?, mode, &budget(g))?;
            if g.format == Format::Csv {
                let mut buf = Vec::new();
                rep.write_csv(&mut buf)?;
                let text = String::from_utf8(buf).map_err(|e| Error::internal(e.to_string()))?;
                return Ok(Outcome { payload: Payload::Csv(text), failure: None });
            }
            Outcome::ok(rep)
        }
        Command::CorruptionBound { eps, l, c } => {
            let p = CorruptionParams { eps: *eps, c: *c };
            Outcome::ok(json!({ "eps": eps, "l": l, "c": c, "value": corruption_rhs(&p, *l)? }))
        }
        Command::ShiftLb { n, rho, eps, c } => Outcome::ok(shift_rank_lb(*n, &rational(rho)?, *eps, *c)?),
        Command::Hardpair { n, out_p, out_q } => {
            let hp = build_hard_pair(*n)?;
            if let Some(path) = out_p {
                write_file(path, &(serde_json::to_string_pretty(&hp.p)? + "\n"))?;
            }
            if let Some(path) = out_q {
                write_file(path, &(serde_json::to_string_pretty(&hp.q)? + "\n"))?;
            }
            Outcome::ok(json!({ "n": hp.n, "P": hp.p, "Q": hp.q }))
        }
        Command::HardpairSlack { n, rho } => slack_outcome(g, hardpair_slack(*n, &rational(rho)?)?),
        Command::VerifySandwich { p, q, rho, ef } => {
            let q: HRep = read_json(q)?;
            let k: ExtendedFormulation = read_json(ef)?;
            let rho = rational(rho)?;
            let rep = verify_sandwich(&read_json(p)?, &q, &rho, &k)?;
            let failure = if rep.passed() {
                None
            } else {
                let q_rho = dilate(&q, &rho)?;
                let cert = rep
                    .certificate(&k, &q_rho)
                    .ok_or_else(|| Error::internal("failing sandwich report without certificate"))?;
                Some(("sandwich check failed".to_string(), cert))
            };
            Ok(Outcome { payload: Payload::Json(serde_json::to_value(&rep)?), failure })
        }
        Command::CliqueWeight { graph } => matrix_outcome(g, clique_weight(&read_json::<Graph>(graph)?)),
        Command::CliqueOmega { graph } => {
            let gr: Graph = read_json(graph)?;
            gr.validate()?;
            let omega = clique_number(&gr)?;
            let (value, argmax) = max_over_cor(&clique_weight(&gr))?;
            Outcome::ok(json!({
                "omega": omega,
                "cor_max": format_rational(&value),
                "argmax": argmax,
                "agree": value == Rational::from_integer((omega as i64).into()),
            }))
        }
        Command::QallSeparate { x, samples } => {
            let x: RationalMatrix = read_json(x)?;
            let mode = match samples {
                Some(count) => QallMode::Sampled { seed: g.seed, count: *count },
                None => QallMode::Exhaustive,
            };
            let res = qall_separate(&x, mode)?;
            let failure = match &res {
                QallResult::Inside { .. } => None,
                _ => Some((
                    "matrix lies outside Q^all".to_string(),
                    res.certificate(&x).ok_or_else(|| Error::internal("violation without certificate"))?,
                )),
            };
            Ok(Outcome { payload: Payload::Json(serde_json::to_value(&res)?), failure })
        }
        Command::BoxEf { n, graph } => match graph {
            Some(path) => {
                let gr: Graph = read_json(path)?;
                if gr.n != *n {
                    return Err(Error::input(format!("graph is on {} vertices, expected {n}", gr.n)));
                }
                Outcome::ok(box_report(&clique_weight(&gr))?)
            }
            None => Outcome::ok(box_ef(*n)),
        },
        Command::CutFamily { kind, n, hrep } => {
            if *hrep {
                let bounded = *kind == CutKindArg::CutPolytope;
                if *kind == CutKindArg::CorrelationCone {
                    return Err(Error::input("metric inequalities describe the cut polytope and cut cone only"));
                }
                if *n > 4 || *n < 2 {
                    return Err(Error::input("metric inequalities are exact only for 2 <= n <= 4"));
                }
                Outcome::ok(metric_hrep(*n, bounded))
            } else {
                Outcome::ok(build_cut_family((*kind).into(), *n)?)
            }
        }
        Command::Covmap { n, x, subset } => {
            let xv: Vec<Rational> = match (x, subset) {
                (Some(path), _) => {
                    let raw: Vec<String> = read_json(path)?;
                    raw.iter().map(|s| rational(s)).collect::<Result<_>>()?
                }
                (None, Some(mask)) => {
                    if *n < 2 || *n > 31 || *mask >> (*n - 1) != 0 {
                        return Err(Error::input("subset must lie in [n-1]"));
                    }
                    cut_vector(*n, *mask)
                }
                (None, None) => return Err(Error::input("pass --x or --subset")),
            };
            matrix_outcome(g, covariance_map(&xv, *n)?)
        }
        Command::PsdCheck { n } => {
            let rep = psd_factors(*n)?;
            let failure = rep
                .mismatch
                .map(|(a, b)| ("PSD factor identity fails".to_string(), Certificate::PsdMismatch { n: *n, a, b }));
            Ok(Outcome { payload: Payload::Json(serde_json::to_value(&rep)?), failure })
        }
        Command::SpectraWitness { n, b } => {
            let rep = spectra_vertex_witness(*b, *n)?;
            let failure = rep.failing_a.map(|a| {
                (
                    "spectrahedral equation fails".to_string(),
                    Certificate::SpectraWitnessFailure { n: *n, b: *b, a, y: rep.y.clone() },
                )
            });
            Ok(Outcome { payload: Payload::Json(serde_json::to_value(&rep)?), failure })
        }
        Command::CheckCert { file } => {
            let cert: Certificate = read_json(file)?;
            let valid = cert.check();
            let payload = Payload::Json(json!({ "kind": cert.kind(), "valid": valid }));
            if valid {
                Ok(Outcome { payload, failure: None })
            } else {
                Err(Error::input(format!("certificate of kind {} does not check", cert.kind())))
            }
        }
    }
}

fn slack_outcome(g: &Global, s: SlackMatrix) -> Result<Outcome> {
    match g.format {
        Format::Csv => Ok(Outcome { payload: Payload::Csv(matrix_csv(&s.full())), failure: None }),
        _ => Outcome::ok(s),
    }
}

fn matrix_outcome(g: &Global, m: RationalMatrix) -> Result<Outcome> {
    match g.format {
        Format::Csv => Ok(Outcome { payload: Payload::Csv(matrix_csv(&m)), failure: None }),
        _ => Outcome::ok(m),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn render(g: &Global, payload: Payload) -> Result<String> {
    Ok(match payload {
        Payload::Json(v) => match g.format {
            Format::Text => text_of(&v),
            _ => serde_json::to_string_pretty(&v)? + "\n",
        },
        Payload::Text(s) | Payload::Csv(s) => s,
    })
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn cert_path(g: &Global) -> PathBuf {
    match (&g.cert, &g.out) {
        (Some(c), _) => c.clone(),
        (None, Some(out)) => {
            let mut s = out.clone().into_os_string();
            s.push(".cert.json");
            s.into()
        }
        (None, None) => PathBuf::from("efbound-certificate.json"),
    }
}

fn write_certificate(g: &Global, message: &str, cert: &Certificate) -> i32 {
    let path = cert_path(g);
    let text = match serde_json::to_string_pretty(cert) {
        Ok(t) => t + "\n",
        Err(e) => {
            eprintln!("error: cannot serialize certificate: {e}");
            return 4;
        }
    };
    if let Err(e) = write_file(&path, &text) {
        eprintln!("error: {e}");
        return 2;
    }
    eprintln!("verification failed: {message}; certificate ({}) written to {}", cert.kind(), path.display());
    1
}

/// Runs one parsed invocation and returns its exit status.
pub fn run(cli: Cli) -> i32 {
    if let Some(k) = cli.global.threads {
        if k == 0 {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        // A second initialisation in the same process is harmless to ignore.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    if let Ok(v) = std::env::var(BUDGET_ENV) {
        if v.trim().parse::<u64>().is_err() {
            eprintln!("error: {BUDGET_ENV} must be a number of milliseconds, got {v:?}");
            return 2;
        }
    }
    let g = &cli.global;
    let result = execute(&cli).and_then(|o| {
        let text = render(g, o.payload)?;
        emit(g, &text)?;
        Ok(o.failure)
    });
    match result {
        Ok(None) => 0,
        Ok(Some((msg, cert))) => write_certificate(g, &msg, &cert),
        Err(e) => {
            if let Some(cert) = e.certificate() {
                return write_certificate(g, &e.to_string(), cert);
            }
            eprintln!("error: {e}");
            if let Error::Budget { best: Some(b), .. } = &e {
                eprintln!("best bound so far: {b}");
            }
            e.exit_code()
        }
    }
}
