// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end: every harness and table generator of the library.
//!
//! Scalars and verdicts are written as JSON, tables as CSV (with the run
//! manifest on a leading `#` line). Exit codes: 0 success, 1 a check failed,
//! 2 bad usage, 3 runtime error (with a JSON error object on stdout).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use disfermion::correlators::{CouplingTable, FloatCoupling};
use disfermion::dimers::DimerGraph;
use disfermion::exact::{q_to_f64, Q, QI};
use disfermion::fields::{anticommutator_check, is_null, mode, Chi, LocalField, ModeContext};
use disfermion::grassmann::{FermionAction, Gen};
use disfermion::greens::{self, check_harmonic_conjugacy, check_two_point_green, convergence_report, SquareSequence};
use disfermion::lattice::{Domain, LatticePoint};
use disfermion::monomials::{shared_family, verify_family, FamilySpec, MonomialFamily};
use disfermion::observables::PathOracle;
use disfermion::suite;
use disfermion::virasoro::{commutator_check, Engine};

#[derive(Parser, Serialize)]
#[command(name = "disfermion", version, about = "Kasteleyn fermion correlators, lattice Green functions and mode algebras on Z²")]
struct Cli {
    /// Arithmetic backend.
    #[arg(long, global = true, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Residual tolerance for float verdicts.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    jobs: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Backend {
    Exact,
    Float,
}

#[derive(Args, Serialize, Clone)]
struct DomainArgs {
    /// `rect(x0,y0,x1,y1)`, inline JSON, or a path to a JSON domain file.
    #[arg(long)]
    domain: String,
    /// Sink vertex "x,y" removed from the domain.
    #[arg(long)]
    sink: Option<String>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Cmd {
    /// Number of dimer covers via |det K|.
    Count {
        #[command(flatten)]
        d: DomainArgs,
    },
    /// Edge table: Kasteleyn weights and edge-open probabilities (CSV).
    Edges {
        #[command(flatten)]
        d: DomainArgs,
    },
    /// Expectation of η(w₁)ξ(b₁)⋯ from the path-sum definition.
    Observable {
        #[command(flatten)]
        d: DomainArgs,
        /// Pairs "wx,wy:bx,by" separated by ';'.
        #[arg(long)]
        pairs: String,
        /// Restrict to mutually disjoint path systems.
        #[arg(long)]
        disjoint: bool,
    },
    /// Berezin correlator of generators such as "eta:1,0 xi:0,0".
    Berezin {
        #[command(flatten)]
        d: DomainArgs,
        #[arg(long, allow_hyphen_values = true)]
        insert: String,
    },
    /// E[η(w)ξ(b)] = conj K⁻¹(w, b).
    Twopoint {
        #[command(flatten)]
        d: DomainArgs,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Discrete holomorphicity of the two-point function at every vertex.
    Holocheck {
        #[command(flatten)]
        d: DomainArgs,
    },
    /// Green identity at a white (with --domain) or the full-plane G(z).
    Green {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        sink: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Finite-volume two-point functions against the full-plane limit (CSV).
    Converge {
        #[arg(long, default_value_t = 1)]
        nmin: usize,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Discrete monomial families.
    Monomials {
        #[command(subcommand)]
        action: MonoCmd,
    },
    /// Probe-suite nullity verdict for a local field.
    Nullcheck {
        #[arg(long, allow_hyphen_values = true)]
        field: String,
        /// Minimum exclusion radius of the probes.
        #[arg(long)]
        radius: Option<i64>,
    },
    /// {χ^α_n, χ^β_m} − n δ_{n+m} d^{αβ} applied to a field.
    Anticommute {
        #[arg(long, allow_hyphen_values = true)]
        n: i32,
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        #[arg(long, value_enum, default_value_t = ChiArg::Minus)]
        alpha: ChiArg,
        #[arg(long, value_enum, default_value_t = ChiArg::Plus)]
        beta: ChiArg,
        #[arg(long, allow_hyphen_values = true)]
        field: String,
    },
    /// [L_n, L_m] − (n−m)L_{n+m} − (c/12)(n³−n)δ_{n+m} applied to a field.
    Virasoro {
        #[arg(long, allow_hyphen_values = true)]
        n: i32,
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        #[arg(long, allow_hyphen_values = true)]
        field: String,
        /// Single small probe square instead of the default three.
        #[arg(long)]
        quick: bool,
    },
    /// The acceptance battery; exit code 0 iff every criterion run passes.
    Suite {
        /// Exact small-domain criteria only.
        #[arg(long)]
        quick: bool,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum MonoCmd {
    /// Build a family and save it.
    Build {
        #[arg(long, default_value_t = disfermion::monomials::DEFAULT_R_MAX)]
        rmax: i64,
        #[arg(long, default_value_t = disfermion::monomials::DEFAULT_N_MAX)]
        nmax: i32,
        /// Output file (defaults to the cache directory).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Check the defining properties for |n| ≤ N on contours up to R.
    Verify {
        #[arg(long, default_value_t = 6)]
        n: i32,
        #[arg(long, default_value_t = 32)]
        r: i64,
        /// Load this family instead of building one.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ChiArg {
    Plus,
    Minus,
}

impl From<ChiArg> for Chi {
    fn from(c: ChiArg) -> Self {
        match c {
            ChiArg::Plus => Chi::Plus,
            ChiArg::Minus => Chi::Minus,
        }
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_hash: String,
    backend: Backend,
    tol: f64,
    /// Probe suites are deterministic; kept for format stability.
    seed: u64,
    versions: Value,
}

impl RunManifest {
    fn new(cli: &Cli) -> Self {
        let config = serde_json::to_vec(cli).expect("serializable arguments");
        let command = serde_json::to_value(&cli.cmd)
            .ok()
            .and_then(|v| match v {
                Value::Object(m) => m.keys().next().cloned(),
                Value::String(s) => Some(s),
                _ => None,
            })
            .unwrap_or_default();
        Self {
            command,
            config_hash: hex(&Sha256::digest(&config)),
            backend: cli.backend,
            tol: cli.tol,
            seed: 0,
            versions: json!({ "disfermion": env!("CARGO_PKG_VERSION") }),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// What a subcommand produced.
enum Output {
    Json { body: Value, ok: bool },
    Csv { body: String, ok: bool },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let manifest = RunManifest::new(&cli);
    let result = run(&cli);
    let (text, code) = match result {
        Ok(Output::Json { mut body, ok }) => {
            if let Value::Object(m) = &mut body {
                m.insert("manifest".into(), serde_json::to_value(&manifest).expect("manifest"));
            }
            (format!("{}\n", serde_json::to_string_pretty(&body).expect("json")), if ok { 0 } else { 1 })
        }
        Ok(Output::Csv { body, ok }) => {
            let m = serde_json::to_string(&manifest).expect("manifest");
            (format!("# manifest: {m}\n{body}"), if ok { 0 } else { 1 })
        }
        Err(e) => {
            let body = json!({ "error": format!("{e:#}"), "manifest": manifest });
            (format!("{}\n", serde_json::to_string_pretty(&body).expect("json")), 3)
        }
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Into::into),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(3);
    }
    ExitCode::from(code)
}

fn point(s: &str) -> Result<LatticePoint> {
    LatticePoint::parse(s).map_err(|e| anyhow!("{e}"))
}

fn load_domain(d: &str, sink: Option<&str>) -> Result<Domain> {
    let text = if d.trim_start().starts_with("rect(") || d.trim_start().starts_with('{') {
        d.to_string()
    } else {
        std::fs::read_to_string(d).with_context(|| format!("reading domain file {d}"))?
    };
    let dom = Domain::parse(&text)?;
    Ok(match sink {
        Some(s) => dom.without_sink().with_sink(point(s)?)?,
        None => dom,
    })
}

fn graph(d: &DomainArgs) -> Result<DimerGraph> {
    Ok(DimerGraph::induce(&load_domain(&d.domain, d.sink.as_deref())?)?)
}

fn big_json(n: &BigInt) -> Value {
    n.to_u64().map(Value::from).unwrap_or_else(|| Value::String(n.to_string()))
}

fn q_json(x: &Q) -> Value {
    if let Some(i) = x.is_integer().then(|| x.numer().to_i64()).flatten() {
        Value::from(i)
    } else {
        Value::String(x.to_string())
    }
}

fn qi_json(z: &QI) -> Value {
    json!({ "re": q_json(&z.re), "im": q_json(&z.im), "f64": [q_to_f64(&z.re), q_to_f64(&z.im)] })
}

fn pt_json(p: LatticePoint) -> Value {
    json!([p.x, p.y])
}

fn parse_pairs(s: &str) -> Result<Vec<(LatticePoint, LatticePoint)>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (w, b) = t.split_once(':').ok_or_else(|| anyhow!("pair {t:?} is not w:b"))?;
            Ok((point(w)?, point(b)?))
        })
        .collect()
}

fn run(cli: &Cli) -> Result<Output> {
    let exact = cli.backend == Backend::Exact;
    match &cli.cmd {
        Cmd::Count { d } => {
            let g = graph(d)?;
            Ok(Output::Json { body: json!({ "covers": big_json(&g.count_covers()) }), ok: true })
        }
        Cmd::Edges { d } => edges(&graph(d)?, exact),
        Cmd::Observable { d, pairs, disjoint } => {
            let g = graph(d)?;
            let pairs = parse_pairs(pairs)?;
            let o = PathOracle::new(&g)?;
            let e = if *disjoint { o.expectation_disjoint(&pairs) } else { o.observable(&pairs).expectation() };
            Ok(Output::Json {
                body: json!({ "expectation": qi_json(&e), "form": if *disjoint { "disjoint" } else { "unrestricted" }, "covers": o.n_covers() }),
                ok: true,
            })
        }
        Cmd::Berezin { d, insert } => {
            let g = graph(d)?;
            let a = FermionAction::new(&g)?;
            let gens: Vec<Gen> = insert.split([' ', ';']).filter(|t| !t.is_empty()).map(Gen::parse).collect::<Result<_, _>>()?;
            let v = a.correlator(&gens)?;
            Ok(Output::Json { body: json!({ "correlator": qi_json(&v), "partition_function": qi_json(&a.partition_function()) }), ok: true })
        }
        Cmd::Twopoint { d, w, b } => {
            let g = graph(d)?;
            let (w, b) = (point(w)?, point(b)?);
            let body = if exact {
                let v = CouplingTable::exact(&g)?.two_point(w, b).ok_or_else(|| anyhow!("{w} must be a white and {b} a black of the graph"))?;
                json!({ "value": qi_json(&v) })
            } else {
                let v = FloatCoupling::new(&g)?.two_point(w, b).ok_or_else(|| anyhow!("{w} must be a white and {b} a black of the graph"))?;
                json!({ "value": [v.re, v.im] })
            };
            Ok(Output::Json { body, ok: true })
        }
        Cmd::Holocheck { d } => holocheck(&graph(d)?, exact, cli.tol),
        Cmd::Green { domain, sink, w, z } => green(domain.as_deref(), sink.as_deref(), w.as_deref(), z.as_deref()),
        Cmd::Converge { nmin, nmax, w, z } => converge(*nmin, *nmax, w.as_deref(), z.as_deref()),
        Cmd::Monomials { action } => monomials(action, exact),
        Cmd::Nullcheck { field, radius } => {
            let f = LocalField::parse(field)?;
            let rep = is_null(&f.to_field(), *radius, cli.tol)?;
            Ok(Output::Json { body: json!({ "field": f.to_string(), "report": rep }), ok: true })
        }
        Cmd::Anticommute { n, m, alpha, beta, field } => {
            let f = LocalField::parse(field)?;
            let ctx = ModeContext::shared()?;
            let rep = anticommutator_check(&ctx, mode((*alpha).into(), *n), mode((*beta).into(), *m), &f, cli.tol)?;
            let ok = rep.null.is_null();
            Ok(Output::Json {
                body: json!({ "verdict": rep.null.verdict, "max_probe_residual": rep.null.max_residual, "expected": rep.expected, "contours": rep.contours, "report": rep.null }),
                ok,
            })
        }
        Cmd::Virasoro { n, m, field, quick } => {
            let t = Instant::now();
            let f = LocalField::parse(field)?;
            let ctx = ModeContext::shared()?;
            let engine = Engine::new(&ctx);
            let rep = if *quick {
                let id = (format!("[L_{n}, L_{m}]"), disfermion::virasoro::virasoro_defect(*n, *m, disfermion::virasoro::CENTRAL_CHARGE));
                disfermion::virasoro::check_identities(&engine, &f, &[id], cli.tol, true)?.remove(0)
            } else {
                commutator_check(&engine, *n, *m, &f, cli.tol)?
            };
            let supp = f.support_radius();
            let window = json!({ "n": engine.window(*n, supp)?, "m": engine.window(*m, supp)? });
            let ok = rep.is_null();
            Ok(Output::Json {
                body: json!({
                    "verdict": rep.null.verdict,
                    "max_probe_residual": rep.null.max_residual,
                    "window": window,
                    "terms": rep.terms,
                    "report": rep.null,
                    "runtime_ms": t.elapsed().as_millis() as u64,
                }),
                ok,
            })
        }
        Cmd::Suite { quick, only } => {
            let outcomes: Vec<suite::Outcome> = if only.is_empty() {
                suite::run_all(*quick)
            } else {
                only.iter().map(|&id| suite::run(id)).collect()
            };
            for o in &outcomes {
                eprintln!("{}", o.line());
            }
            let ok = outcomes.iter().all(|o| o.passed != Some(false));
            Ok(Output::Json { body: json!({ "passed": ok, "criteria": outcomes }), ok })
        }
    }
}

fn edges(g: &DimerGraph, exact: bool) -> Result<Output> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["edge", "black_x", "black_y", "white_x", "white_y", "k_re", "k_im", "p_open", "p_open_f64"])?;
    let probs: Vec<(String, f64)> = if exact {
        let t = CouplingTable::exact(g)?;
        (0..g.n_edges()).map(|e| t.edge_probability(e)).map(|p| (p.to_string(), q_to_f64(&p))).collect()
    } else {
        let t = FloatCoupling::new(g)?;
        (0..g.n_edges()).map(|e| t.edge_probability(e)).map(|p| (String::new(), p)).collect()
    };
    for (e, &(bi, wi)) in g.edges().iter().enumerate() {
        let (b, wt) = (g.blacks()[bi], g.whites()[wi]);
        let k = g.edge_weight(e);
        w.write_record([
            e.to_string(),
            b.x.to_string(),
            b.y.to_string(),
            wt.x.to_string(),
            wt.y.to_string(),
            k.x.to_string(),
            k.y.to_string(),
            probs[e].0.clone(),
            format!("{:.17}", probs[e].1),
        ])?;
    }
    Ok(Output::Csv { body: String::from_utf8(w.into_inner()?)?, ok: true })
}

fn holocheck(g: &DimerGraph, exact: bool, tol: f64) -> Result<Output> {
    let n = g.n_whites() + g.n_blacks();
    if exact {
        let t = CouplingTable::exact(g)?;
        let (holds, violation) = match t.verify_holomorphicity() {
            Ok(()) => (true, Value::Null),
            Err(v) => (false, Value::String(format!("{v:?}"))),
        };
        Ok(Output::Json { body: json!({ "holds": holds, "vertices": n, "violation": violation }), ok: holds })
    } else {
        let t = FloatCoupling::new(g)?;
        let worst = (0..g.n_whites()).map(|wi| t.white_identity_residual(wi)).fold(0.0, f64::max);
        let holds = worst < tol;
        Ok(Output::Json { body: json!({ "holds": holds, "whites": g.n_whites(), "max_residual": worst }), ok: holds })
    }
}

fn green(domain: Option<&str>, sink: Option<&str>, w: Option<&str>, z: Option<&str>) -> Result<Output> {
    match (domain, w, z) {
        (Some(d), Some(w), _) => {
            let d = load_domain(d, sink)?;
            let w = point(w)?;
            let rep = check_two_point_green(&d, w)?;
            let conj = check_harmonic_conjugacy(&d, w)?;
            let ok = rep.holds() && conj.holds();
            let show = |v: &[greens::IdentityViolation]| -> Vec<Value> {
                v.iter().take(8).map(|x| json!({ "at": pt_json(x.at), "lhs": format!("{:?}", x.lhs), "rhs": format!("{:?}", x.rhs) })).collect()
            };
            Ok(Output::Json {
                body: json!({
                    "green_identity": { "holds": rep.holds(), "checked": rep.checked, "violations": show(&rep.violations) },
                    "harmonic_conjugacy": { "holds": conj.holds(), "checked": conj.checked, "violations": show(&conj.violations) },
                }),
                ok,
            })
        }
        (None, _, Some(z)) => {
            let z = point(z)?;
            let g = greens::potential_kernel(z);
            Ok(Output::Json {
                body: json!({
                    "z": pt_json(z),
                    "G": { "rational": q_json(&g.rational), "inv_pi": q_json(&g.inv_pi), "f64": g.to_f64() },
                    "C": greens::green_constant(),
                }),
                ok: true,
            })
        }
        _ => bail!("green needs --domain with --w, or --z alone"),
    }
}

fn converge(nmin: usize, nmax: usize, w: Option<&str>, z: Option<&str>) -> Result<Output> {
    let pairs: Vec<(LatticePoint, LatticePoint)> = match (w, z) {
        (Some(w), Some(z)) => vec![(point(w)?, point(z)?)],
        (None, None) => suite::LIMIT_PAIRS.to_vec(),
        _ => bail!("give both --w and --z, or neither"),
    };
    let seq = SquareSequence { n_min: nmin, n_max: nmax, ..Default::default() };
    let rep = convergence_report(&seq, &pairs, (disfermion::lattice::pt(0, 0), disfermion::lattice::pt(1, 0)))?;
    let mut out = csv::Writer::from_writer(Vec::new());
    // Edge rows carry the probability in the re_fin column and 1/4 as limit.
    out.write_record(["series", "wx", "wy", "zx", "zy", "n", "side", "re_fin", "im_fin", "re_lim", "im_lim", "abs_err"])?;
    for ((w, z), rows) in rep.pairs.iter().zip(&rep.tables) {
        for r in rows {
            out.serialize(("two-point", w.x, w.y, z.x, z.y, r.n, r.side, r.re_fin, r.im_fin, r.re_lim, r.im_lim, r.abs_err))?;
        }
    }
    let (a, b) = rep.edge;
    for r in &rep.edge_rows {
        out.serialize(("edge", a.x, a.y, b.x, b.y, r.n, r.side, r.probability, 0.0, 0.25, 0.0, r.abs_err))?;
    }
    Ok(Output::Csv { body: String::from_utf8(out.into_inner()?)?, ok: true })
}

fn monomials(action: &MonoCmd, exact: bool) -> Result<Output> {
    match action {
        MonoCmd::Build { rmax, nmax, file } => {
            let spec = FamilySpec { r_max: *rmax, n_max: *nmax };
            let t = Instant::now();
            let fam = MonomialFamily::build(spec)?;
            let path = match (file, std::env::var_os("DISFERMION_CACHE")) {
                (Some(p), _) => Some(p.clone()),
                (None, Some(dir)) => Some(PathBuf::from(dir).join(format!("monomials-r{rmax}-n{nmax}.bin"))),
                (None, None) => None,
            };
            let manifest = match &path {
                Some(p) => {
                    if let Some(dir) = p.parent() {
                        std::fs::create_dir_all(dir)?;
                    }
                    fam.save(p)?
                }
                None => fam.manifest(),
            };
            Ok(Output::Json {
                body: json!({ "family": manifest, "file": path.map(|p| p.display().to_string()), "build_ms": t.elapsed().as_millis() as u64 }),
                ok: true,
            })
        }
        MonoCmd::Verify { n, r, file } => {
            let fam = match file {
                Some(p) => std::sync::Arc::new(MonomialFamily::load(p)?),
                None => shared_family(FamilySpec { r_max: (r + 12).max(disfermion::fields::FIELD_FAMILY.r_max), n_max: (n + 2).max(disfermion::fields::FIELD_FAMILY.n_max) })?,
            };
            let rep = verify_family(&fam, *n, *r, exact)?;
            let ok = rep.passed(1e-10);
            let body = json!({
                "passed": ok,
                "n_max": rep.n_max,
                "contours": rep.contours,
                "z0_is_one": rep.z0_is_one,
                "covariance": rep.covariance,
                "holomorphic_outside_singular_radius": rep.holomorphic_outside_singular_radius,
                "distributed_delta": rep.distributed_delta,
                "derivative_relation": rep.derivative_relation,
                "null_radius_strictly_increasing": rep.null_radius_strictly_increasing,
                "decay": rep.decay,
                "pairing_exact": if exact { Value::Bool(rep.pairing_exact) } else { Value::Null },
                "max_pairing_residual": rep.max_pairing_residual,
            });
            Ok(Output::Json { body, ok })
        }
    }
}
