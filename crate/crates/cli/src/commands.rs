use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use planarprob::maps::{gibbs_series, nc_partition_moments, on_model_series, wick_oracle, Body, MapOptions, PotentialTerm, TruncatedSeries};
use planarprob::poly::embed_tl;
use planarprob::rmt::{run_ensemble, spectral_histogram, Ensemble, EnsembleConfig, EstimateResult, Mode};
use planarprob::scalar::rational_int;
use planarprob::tangle::{gram_eigenvalues, gram_numeric, tl_basis, trace_tl};
use planarprob::text::{parse_poly, parse_real, parse_tl};

use crate::manifest::RunManifest;
use crate::{RmtArgs, RmtKind, SpectrumArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Tolerance(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Tolerance(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<planarprob::Error> for CliError {
    fn from(e: planarprob::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

type CliResult = Result<(), CliError>;

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_json(value: &Value, out: Option<&Path>) -> CliResult {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn finish(config: Value, seed: Option<u64>, started: chrono::DateTime<Utc>, out: Option<&Path>) -> CliResult {
    if let Some(p) = out {
        let manifest = RunManifest::new(config, seed, started, vec![p.to_path_buf()]);
        manifest.write_beside(p)?;
    }
    Ok(())
}

pub fn tl_dim(k: usize) -> CliResult {
    println!("{}", tl_basis(k)?.len());
    Ok(())
}

pub fn tl_gram(k: usize, delta: &str, out: Option<&Path>) -> CliResult {
    let started = Utc::now();
    let d = parse_real(delta)?;
    let g = gram_numeric(k, d)?;
    let mut ev = gram_eigenvalues(k, d)?;
    ev.sort_by(|a, b| b.total_cmp(a));
    let mut w = csv_writer(out)?;
    w.write_record(["kind", "i", "j", "value"])?;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            w.write_record(["gram", &i.to_string(), &j.to_string(), &g[(i, j)].to_string()])?;
        }
    }
    for (i, v) in ev.iter().enumerate() {
        w.write_record(["eigenvalue", &i.to_string(), "", &v.to_string()])?;
    }
    w.flush()?;
    finish(json!({"command": "tl gram", "k": k, "delta": delta}), None, started, out)
}

pub fn tl_trace(element: &str, delta: Option<&str>) -> CliResult {
    let x = parse_tl(element)?;
    let t = trace_tl(&x)?;
    match delta {
        None => println!("{}", t.value),
        Some(d) => println!("{}", t.value.eval(parse_real(d)?)),
    }
    Ok(())
}

pub fn moments(p: usize, delta: Option<&str>) -> CliResult {
    let d = delta.map(parse_real).transpose()?;
    let mut w = csv_writer(None)?;
    w.write_record(["p", "moment", "value"])?;
    for q in 1..=p {
        let m = nc_partition_moments(q)?;
        let value = d.map(|d| m.eval(d).to_string()).unwrap_or_default();
        w.write_record([q.to_string(), m.to_string(), value])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesTerm {
    pub term: String,
    pub coupling: usize,
}

/// Input of `series`: the law `V = ∪ + Σ_j β_j W_j` and the truncation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub observable: String,
    #[serde(default)]
    pub potential: Vec<SeriesTerm>,
    pub max_order: Vec<usize>,
    /// Number of letters used to realize TL expressions for the oracle.
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub max_half_edges: Option<usize>,
}

fn body(text: &str) -> Result<Body, CliError> {
    if let Ok(x) = parse_tl(text) {
        return Ok(Body::Tl(x));
    }
    Ok(Body::Poly(parse_poly(text)?))
}

fn as_poly(b: &Body, k: Option<u32>) -> Result<planarprob::poly::PolyElement, CliError> {
    match b {
        Body::Poly(p) => Ok(p.clone()),
        Body::Tl(x) => {
            let k = k.ok_or_else(|| CliError::Usage("the oracle needs \"k\" to realize TL expressions".into()))?;
            Ok(embed_tl(k, x)?)
        }
    }
}

pub fn series(config: &Path, oracle: bool, out: Option<&Path>) -> CliResult {
    let started = Utc::now();
    let raw = read_json(config)?;
    let cfg: SeriesConfig = serde_json::from_value(raw.clone())?;
    let mut opts = MapOptions::default();
    if let Some(m) = cfg.max_half_edges {
        opts.max_half_edges = m;
    }
    for t in &cfg.potential {
        if t.coupling >= cfg.max_order.len() {
            return Err(CliError::Usage(format!(
                "term '{}' uses coupling {} but max_order has {} entries",
                t.term,
                t.coupling,
                cfg.max_order.len()
            )));
        }
    }
    let q = body(&cfg.observable)?;
    let potential = cfg
        .potential
        .iter()
        .map(|t| {
            Ok(PotentialTerm {
                body: body(&t.term)?,
                coupling_index: t.coupling,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let s = gibbs_series(&q, &potential, &cfg.max_order, &opts)?;
    let mut doc = json!({
        "observable": cfg.observable,
        "potential": cfg.potential,
        "series": s.to_json(),
    });
    let mut agree = true;
    if oracle {
        let qp = as_poly(&q, cfg.k)?;
        let pp = potential
            .iter()
            .map(|t| Ok(PotentialTerm::poly(as_poly(&t.body, cfg.k)?, t.coupling_index)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let w = wick_oracle(&qp, &pp, &cfg.max_order, &opts)?;
        let lhs = match (&q, cfg.k) {
            (Body::Tl(_), Some(k)) => s.substitute(&rational_int(k as i64))?,
            _ => s.clone(),
        };
        let limit = w.large_n_limit();
        let diff = lhs.diff(&limit)?;
        agree = diff.is_zero();
        doc["oracle"] = w.to_json();
        doc["oracle_limit"] = limit.to_json();
        doc["diff"] = diff.to_json();
        doc["agree"] = json!(agree);
    }
    write_json(&doc, out)?;
    finish(raw, None, started, out)?;
    if agree {
        Ok(())
    } else {
        Err(CliError::Tolerance("enumerator and oracle differ in the N^0 slot".into()))
    }
}

pub fn onmodel(observable: &str, o1: usize, o2: usize, at: &[String], out: Option<&Path>) -> CliResult {
    let started = Utc::now();
    let q = parse_tl(observable)?;
    let s = on_model_series(&q, o1, o2)?;
    let mut evaluations = Vec::new();
    for text in at {
        let d = parse_real(text)?;
        let coefficients: Vec<Value> = s
            .coefficients()
            .map(|(m, c)| json!({"index": m, "value": c.eval(d)}))
            .collect();
        evaluations.push(json!({"delta": text, "value": d, "coefficients": coefficients}));
    }
    let polynomial = s.coefficients().all(|(_, c)| c.is_polynomial());
    let doc = json!({
        "observable": observable,
        "series": s.to_json(),
        "polynomial_in_delta": polynomial,
        "evaluations": evaluations,
    });
    write_json(&doc, out)?;
    finish(
        json!({"command": "onmodel", "observable": observable, "orders": [o1, o2], "at": at}),
        None,
        started,
        out,
    )
}

/// Loads an ensemble config and applies `PLANARPROB_SEED` and `--threads`.
fn load_ensemble(path: &Path, threads: Option<usize>) -> Result<EnsembleConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg: EnsembleConfig = serde_json::from_str(&text)?;
    if let Ok(s) = std::env::var("PLANARPROB_SEED") {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("PLANARPROB_SEED='{s}' is not a 64-bit seed")))?;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn mode_matches(kind: RmtKind, mode: Mode) -> bool {
    match kind {
        RmtKind::Gaussian => mode == Mode::GaussianPoly,
        RmtKind::Graph => mode == Mode::GaussianGraph,
        RmtKind::Gibbs => mode.is_gibbs(),
    }
}

pub fn rmt(args: &RmtArgs) -> CliResult {
    let started = Utc::now();
    let cfg = load_ensemble(&args.config, args.threads)?;
    if !mode_matches(args.kind, cfg.mode) {
        return Err(CliError::Usage(format!(
            "config mode {:?} does not fit this subcommand",
            cfg.mode
        )));
    }
    let results = run_ensemble(&cfg)?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["observable", "N", "trials", "mean", "stderr", "seed", "wall_ms"])?;
    for r in &results {
        w.write_record([
            r.observable.clone(),
            r.n.to_string(),
            r.trials.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            cfg.seed.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    drop(w);
    if let Some(a) = results.first().and_then(|r| r.acceptance) {
        eprintln!("mean acceptance rate {a:.3}");
    }
    finish(serde_json::to_value(&cfg)?, Some(cfg.seed), started, args.out.as_deref())?;
    match &args.check {
        Some(path) => check_against_series(&cfg, &results, path, args.allowance),
        None => Ok(()),
    }
}

/// Compares estimates with a series jet evaluated at the configured
/// couplings: `|mean - jet| ≤ 3·stderr + allowance·|jet|`.
fn check_against_series(cfg: &EnsembleConfig, results: &[EstimateResult], path: &Path, allowance: f64) -> CliResult {
    let doc = read_json(path)?;
    let observable = doc["observable"]
        .as_str()
        .ok_or_else(|| CliError::Usage("series file has no \"observable\"; write it with `series --out`".into()))?;
    let series = TruncatedSeries::from_json(&doc["series"])?;
    let est = results.iter().find(|r| r.observable == observable).ok_or_else(|| {
        let have: Vec<&str> = results.iter().map(|r| r.observable.as_str()).collect();
        CliError::Usage(format!(
            "series observable '{observable}' was not estimated (estimated: {have:?})"
        ))
    })?;
    let terms: Vec<SeriesTerm> = serde_json::from_value(doc["potential"].clone()).unwrap_or_default();
    let mut betas = vec![0.0; series.max_order.len()];
    for t in &terms {
        let c = cfg
            .potential
            .iter()
            .find(|p| p.term == t.term)
            .ok_or_else(|| CliError::Usage(format!("series term '{}' is not in the config potential", t.term)))?;
        if t.coupling >= betas.len() {
            return Err(CliError::Usage(format!("series term '{}' has a bad coupling index", t.term)));
        }
        betas[t.coupling] = c.coupling;
    }
    if let Some(p) = cfg.potential.iter().find(|p| !terms.iter().any(|t| t.term == p.term)) {
        return Err(CliError::Usage(format!(
            "config term '{}' is missing from the series",
            p.term
        )));
    }
    let x = match series.variable.as_str() {
        "d" => Ensemble::new(cfg)?.system.delta,
        "N" => cfg.n as f64,
        v => return Err(CliError::Usage(format!("series variable '{v}' is not d or N"))),
    };
    let jet = series.evaluate(&betas, x)?;
    let tol = 3.0 * est.stderr + allowance * jet.abs();
    let dev = (est.mean - jet).abs();
    eprintln!(
        "{observable}: estimate {} ± {}, series {jet}, |diff| {dev:.3e}, tolerance {tol:.3e}",
        est.mean, est.stderr
    );
    if dev <= tol {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "{observable}: |{} - {jet}| = {dev:.3e} exceeds {tol:.3e}",
            est.mean
        )))
    }
}

fn parse_range(text: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("range '{text}' is not 'lo,hi'")))?;
    let lo = parse_real(lo.trim())?;
    let hi = parse_real(hi.trim())?;
    if hi <= lo {
        return Err(CliError::Usage(format!("empty range '{text}'")));
    }
    Ok((lo, hi))
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult {
    let started = Utc::now();
    let cfg = load_ensemble(&args.config, args.threads)?;
    let range = args.range.as_deref().map(parse_range).transpose()?;
    let h = spectral_histogram(&args.expr, &cfg, args.bins, range)?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["bin_left", "bin_right", "density"])?;
    for (e, d) in h.edges.windows(2).zip(h.density()) {
        w.write_record([e[0].to_string(), e[1].to_string(), d.to_string()])?;
    }
    w.flush()?;
    drop(w);
    let mut summary = json!({
        "expression": args.expr,
        "eigenvalues": h.total,
        "moments": h.moments,
        "integral": h.integral(),
    });
    if let Some(t) = args.above {
        summary["mass_above"] = json!({"threshold": t, "fraction": h.mass_above(t)});
    }
    let text = serde_json::to_string_pretty(&summary)?;
    if args.out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    let mut config = serde_json::to_value(&cfg)?;
    config["spectrum"] = json!({"expr": args.expr, "bins": args.bins, "range": args.range});
    let outputs: Vec<PathBuf> = args.out.iter().cloned().collect();
    if let Some(p) = outputs.first() {
        let manifest = RunManifest::new(config, Some(cfg.seed), started, outputs.clone());
        manifest.write_beside(p)?;
    }
    Ok(())
}
