//! Monte Carlo matrix ensembles: Gaussian and graph-indexed models, Gibbs
//! measures sampled by Langevin chains, trace estimators and spectra.
//!
//! Trial `t` draws from `ChaCha8Rng` seeded with the master seed on stream
//! `t`, so results do not depend on how trials are spread over threads.

pub mod eval;
pub mod mala;
pub mod matrix;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{embed_tl_graph, BipartiteGraph, GraphElement, GraphModel};
use crate::poly::{embed_tl, PolyElement};
use crate::text::{parse_poly, parse_tl};

pub use eval::{cyclic_derivative, LetterSystem, Observable, Potential, Word};
pub use mala::{ChainStats, SamplerConfig};
pub use matrix::ZMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    GaussianPoly,
    GaussianGraph,
    GibbsPoly,
    GibbsGraph,
}

impl Mode {
    pub fn is_gibbs(self) -> bool {
        matches!(self, Mode::GibbsPoly | Mode::GibbsGraph)
    }

    pub fn is_graph(self) -> bool {
        matches!(self, Mode::GaussianGraph | Mode::GibbsGraph)
    }
}

/// `coupling · term`, the term a TL or polynomial expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub coupling: f64,
    pub term: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub mode: Mode,
    #[serde(default)]
    pub k: Option<usize>,
    /// Bundled graph name or path to a graph JSON file.
    #[serde(default)]
    pub graph: Option<String>,
    pub n: usize,
    #[serde(default)]
    pub n_prime: Option<usize>,
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default)]
    pub potential: Vec<PotentialSpec>,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn gaussian_poly(k: usize, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            mode: Mode::GaussianPoly,
            k: Some(k),
            graph: None,
            n,
            n_prime: None,
            observables: Vec::new(),
            potential: Vec::new(),
            cutoff: None,
            sampler: SamplerConfig::default(),
            trials,
            seed,
            threads: None,
        }
    }

    pub fn gaussian_graph(graph: &str, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            mode: Mode::GaussianGraph,
            k: None,
            graph: Some(graph.to_string()),
            ..Self::gaussian_poly(1, n, trials, seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::validation(format!("N = {} is below the minimum 8", self.n)));
        }
        if self.n_prime == Some(0) {
            return Err(Error::validation("N' must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::validation("threads must be positive"));
        }
        if self.mode.is_graph() {
            if self.graph.is_none() {
                return Err(Error::validation("graph modes need a graph"));
            }
        } else if self.k.unwrap_or(0) == 0 {
            return Err(Error::validation("polynomial modes need K ≥ 1"));
        }
        if let Some(t) = self.potential.iter().find(|t| !t.coupling.is_finite()) {
            return Err(Error::validation(format!("coupling of '{}' is not finite", t.term)));
        }
        if self.mode.is_gibbs() {
            match self.cutoff {
                Some(r) if r > 2.0 => {}
                Some(r) => return Err(Error::validation(format!("cutoff R = {r} must exceed 2"))),
                None => return Err(Error::validation("Gibbs modes need a cutoff R")),
            }
            self.sampler.validate()?;
        } else if !self.potential.is_empty() {
            return Err(Error::validation("Gaussian modes take no potential"));
        }
        Ok(())
    }

    fn graph_model(&self) -> Result<GraphModel> {
        let name = self.graph.as_deref().unwrap_or_default();
        let graph = match BipartiteGraph::bundled(name) {
            Ok(g) => g,
            Err(_) => BipartiteGraph::from_json(&std::fs::read_to_string(name)?)?,
        };
        GraphModel::new(graph)
    }
}

/// One observable's Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub observable: String,
    pub mean: f64,
    /// Sample standard deviation over trials divided by `√trials`.
    pub stderr: f64,
    pub trials: usize,
    pub n: usize,
    pub wall_ms: f64,
    /// Mean acceptance rate of the Gibbs chains.
    pub acceptance: Option<f64>,
}

/// A built model: letters, the Gibbs potential and, for graphs, the graph.
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub system: LetterSystem,
    pub model: Option<GraphModel>,
    pub potential: Potential,
}

impl Ensemble {
    pub fn new(cfg: &EnsembleConfig) -> Result<Self> {
        cfg.validate()?;
        let (system, model) = if cfg.mode.is_graph() {
            let model = cfg.graph_model()?;
            (LetterSystem::graph(&model, cfg.n)?, Some(model))
        } else {
            let k = cfg.k.unwrap_or(1);
            (LetterSystem::poly(k, cfg.n, cfg.n_prime.unwrap_or(cfg.n))?, None)
        };
        let mut words = Vec::new();
        for t in &cfg.potential {
            for mut w in potential_words(&t.term, &system, model.as_ref(), cfg)? {
                w.coef *= t.coupling * system.potential_weights[w.base];
                words.push(w);
            }
        }
        let potential = Potential::new(&system, words)?;
        Ok(Self {
            config: cfg.clone(),
            system,
            model,
            potential,
        })
    }

    pub fn parse_observable(&self, text: &str) -> Result<Observable> {
        if let Ok(x) = parse_tl(text) {
            return Ok(Observable::Tl(x));
        }
        if self.model.is_some() {
            return Err(Error::validation(format!(
                "'{text}' is not a TL expression; graph models take TL observables"
            )));
        }
        Ok(Observable::Poly(parse_poly(text)?))
    }

    /// Runs `f` on the letters of every sample of trial `t`; returns the
    /// chain statistics in Gibbs modes.
    fn trial(&self, t: usize, mut f: impl FnMut(&[ZMat])) -> Result<Option<ChainStats>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(t as u64);
        if self.config.mode.is_gibbs() {
            let stats = mala::run_chain(
                &self.system,
                &self.potential,
                self.config.cutoff,
                &self.config.sampler,
                &mut rng,
                f,
            )?;
            Ok(Some(stats))
        } else {
            f(&self.system.sample_gaussian(&mut rng));
            Ok(None)
        }
    }

    fn run_trials<T: Send>(&self, job: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
        let run = || (0..self.config.trials).into_par_iter().map(&job).collect::<Result<Vec<T>>>();
        match self.config.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::validation(format!("thread pool: {e}")))?
                .install(run),
            None => run(),
        }
    }

    /// Estimates every observable. Each trial contributes the average over
    /// its samples (one sample for Gaussian modes).
    pub fn estimate(&self, observables: &[(String, Observable)]) -> Result<Vec<EstimateResult>> {
        let start = Instant::now();
        let per_trial = self.run_trials(|t| {
            let mut sums = vec![0.0; observables.len()];
            let mut count = 0usize;
            let mut err = None;
            let stats = self.trial(t, |mats| {
                count += 1;
                for (s, (_, obs)) in sums.iter_mut().zip(observables) {
                    match obs.value(&self.system, mats) {
                        Ok(v) => *s += v,
                        Err(e) => err = Some(e),
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            let means: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
            Ok((means, stats))
        })?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let acceptance = if self.config.mode.is_gibbs() {
            let rates: Vec<f64> = per_trial
                .iter()
                .filter_map(|(_, s)| s.map(|s| s.acceptance()))
                .collect();
            Some(neumaier_sum(&rates) / rates.len() as f64)
        } else {
            None
        };
        Ok(observables
            .iter()
            .enumerate()
            .map(|(i, (name, _))| {
                let xs: Vec<f64> = per_trial.iter().map(|(m, _)| m[i]).collect();
                let (mean, stderr) = mean_stderr(&xs);
                EstimateResult {
                    observable: name.clone(),
                    mean,
                    stderr,
                    trials: xs.len(),
                    n: self.config.n,
                    wall_ms,
                    acceptance,
                }
            })
            .collect())
    }

    /// Pooled eigenvalues of a self-adjoint observable, rooted at the first
    /// base (the size-`N` block).
    pub fn spectrum(&self, obs: &Observable) -> Result<Vec<f64>> {
        let base = self.system.root_bases[0];
        let per_trial = self.run_trials(|t| {
            let mut out = Vec::new();
            let mut err = None;
            self.trial(t, |mats| match obs.matrix(&self.system, mats, base) {
                Ok(m) => {
                    let scale = m.norm_squared().sqrt().max(1.0);
                    if m.hermitian_defect() > 1e-9 * scale {
                        err = Some(Error::validation("expression is not self-adjoint"));
                    } else {
                        out.extend(m.hermitian_eigenvalues());
                    }
                }
                Err(e) => err = Some(e),
            })?;
            match err {
                Some(e) => Err(e),
                None => Ok(out),
            }
        })?;
        Ok(per_trial.into_iter().flatten().collect())
    }
}

fn potential_words(
    term: &str,
    sys: &LetterSystem,
    model: Option<&GraphModel>,
    cfg: &EnsembleConfig,
) -> Result<Vec<Word>> {
    if let Ok(x) = parse_tl(term) {
        return Ok(match model {
            Some(m) => eval::graph_words(&embed_tl_graph(&m.graph, &m.pf, &x)),
            None => {
                if cfg.n_prime.is_some_and(|np| np != cfg.n) {
                    return Err(Error::validation("TL potentials need N' = N"));
                }
                eval::poly_words(&embed_tl(sys.n_letters() as u32, &x)?)
            }
        });
    }
    if model.is_some() {
        return Err(Error::validation(format!(
            "potential term '{term}' is not a TL expression"
        )));
    }
    let p = parse_poly(term)?;
    if p.max_index() as usize > sys.n_letters() {
        return Err(Error::validation(format!(
            "potential term '{term}' uses more than {} letters",
            sys.n_letters()
        )));
    }
    Ok(eval::poly_words(&p))
}

/// Compensated (Neumaier) sum.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = neumaier_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = neumaier_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One `N × N'` matrix with independent entries, `E|a|² = 1/N`.
pub fn sample_gaussian(n: usize, n_prime: usize, rng: &mut ChaCha8Rng) -> ZMat {
    ZMat::gaussian(n, n_prime, 1.0 / n as f64, rng)
}

/// `(1/N) Tr Q(A, A*)` averaged over Gaussian trials.
pub fn estimate_trace_gaussian(q: &PolyElement, cfg: &EnsembleConfig) -> Result<EstimateResult> {
    if cfg.mode != Mode::GaussianPoly {
        return Err(Error::validation("estimate_trace_gaussian needs gaussian-poly mode"));
    }
    let ens = Ensemble::new(cfg)?;
    let mut out = ens.estimate(&[(q.to_string(), Observable::Poly(q.clone()))])?;
    Ok(out.remove(0))
}

/// `Σ_v μ(v)/N Tr Q_v` over the graph ensemble, normalized so the empty
/// loop has trace one.
pub fn estimate_trace_graph(q: &GraphElement, cfg: &EnsembleConfig) -> Result<EstimateResult> {
    if cfg.mode != Mode::GaussianGraph {
        return Err(Error::validation("estimate_trace_graph needs gaussian-graph mode"));
    }
    let ens = Ensemble::new(cfg)?;
    let mut out = ens.estimate(&[(format!("{q:?}"), Observable::Graph(q.clone()))])?;
    Ok(out.remove(0))
}

/// Estimates the configured observables.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<Vec<EstimateResult>> {
    let ens = Ensemble::new(cfg)?;
    if cfg.observables.is_empty() {
        return Err(Error::validation("no observables configured"));
    }
    let obs = cfg
        .observables
        .iter()
        .map(|s| Ok((s.clone(), ens.parse_observable(s)?)))
        .collect::<Result<Vec<_>>>()?;
    ens.estimate(&obs)
}

/// Runs the configured Gibbs chains, handing every kept sample of trial `t`
/// to `visit(t, letters)`.
pub fn gibbs_sample(
    cfg: &EnsembleConfig,
    mut visit: impl FnMut(usize, &[ZMat]),
) -> Result<Vec<ChainStats>> {
    if !cfg.mode.is_gibbs() {
        return Err(Error::validation("gibbs_sample needs a Gibbs mode"));
    }
    let ens = Ensemble::new(cfg)?;
    (0..cfg.trials)
        .map(|t| Ok(ens.trial(t, |m| visit(t, m))?.unwrap_or_default()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralHistogram {
    pub expression: String,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of pooled eigenvalues.
    pub total: u64,
    /// Empirical moments `m_1..m_4` of the pooled eigenvalues.
    pub moments: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl SpectralHistogram {
    pub fn from_eigenvalues(expression: &str, mut ev: Vec<f64>, bins: usize, range: Option<(f64, f64)>) -> Result<Self> {
        if bins == 0 || ev.is_empty() {
            return Err(Error::validation("histogram needs bins and eigenvalues"));
        }
        ev.sort_by(f64::total_cmp);
        let (lo, hi) = range.unwrap_or((ev[0], ev[ev.len() - 1]));
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in &ev {
            if x >= lo && x <= hi {
                let b = (((x - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        let moments = (1..=4)
            .map(|p| {
                let xs: Vec<f64> = ev.iter().map(|x| x.powi(p)).collect();
                neumaier_sum(&xs) / ev.len() as f64
            })
            .collect();
        Ok(Self {
            expression: expression.to_string(),
            edges,
            counts,
            total: ev.len() as u64,
            moments,
            eigenvalues: ev,
        })
    }

    /// Density per bin, normalized by the total eigenvalue count so that it
    /// integrates to one when the range covers the spectrum.
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (self.total as f64 * (e[1] - e[0])))
            .collect()
    }

    pub fn integral(&self) -> f64 {
        self.density()
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// Fraction of eigenvalues strictly above `t`.
    pub fn mass_above(&self, t: f64) -> f64 {
        let below = self.eigenvalues.partition_point(|&x| x <= t);
        (self.eigenvalues.len() - below) as f64 / self.total as f64
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Histogram of the pooled spectrum of `expr` over the configured trials.
pub fn spectral_histogram(
    expr: &str,
    cfg: &EnsembleConfig,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<SpectralHistogram> {
    let ens = Ensemble::new(cfg)?;
    let obs = ens.parse_observable(expr)?;
    let ev = ens.spectrum(&obs)?;
    SpectralHistogram::from_eigenvalues(expr, ev, bins, range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_variance_at_n10() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<(f64, f64)> = (0..100_000)
            .map(|_| {
                let a = sample_gaussian(10, 10, &mut rng);
                (a.re[(0, 0)].powi(2) + a.im[(0, 0)].powi(2), a.re[(0, 0)])
            })
            .collect();
        let (m, se) = mean_stderr(&draws.iter().map(|d| d.0).collect::<Vec<_>>());
        assert!((m - 0.1).abs() < 3.0 * se, "{m} ± {se}");
        let (m, se) = mean_stderr(&draws.iter().map(|d| d.1).collect::<Vec<_>>());
        assert!(m.abs() < 3.0 * se);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let mut cfg = EnsembleConfig::gaussian_poly(2, 12, 6, 77);
        cfg.observables = vec!["cup^2".into(), "X1 X2* X2 X1*".into()];
        let a = run_ensemble(&cfg).unwrap();
        cfg.threads = Some(1);
        let b = run_ensemble(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sample_gaussian(8, 9, &mut r1), sample_gaussian(8, 9, &mut r2));
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnsembleConfig::gaussian_poly(1, 4, 5, 0);
        assert!(cfg.validate().is_err());
        cfg.n = 8;
        cfg.validate().unwrap();
        cfg.mode = Mode::GibbsPoly;
        assert!(cfg.validate().is_err());
        cfg.cutoff = Some(2.0);
        assert!(cfg.validate().is_err());
        cfg.cutoff = Some(4.0);
        cfg.validate().unwrap();
        cfg.potential = vec![PotentialSpec {
            coupling: f64::NAN,
            term: "cupcup".into(),
        }];
        assert!(cfg.validate().is_err());
        let json = r#"{"mode":"gaussian-graph","graph":"a3","n":16,"trials":3,"observables":["cup"]}"#;
        let cfg = EnsembleConfig::from_json(json).unwrap();
        assert_eq!(cfg.mode, Mode::GaussianGraph);
        assert!(EnsembleConfig::from_json(r#"{"mode":"gaussian-poly","n":16,"trials":3,"bogus":1}"#).is_err());
    }

    #[test]
    fn histogram_mass_and_moments() {
        let mut cfg = EnsembleConfig::gaussian_poly(1, 32, 4, 3);
        cfg.observables.clear();
        let h = spectral_histogram("X1 X1*", &cfg, 40, None).unwrap();
        assert_eq!(h.total, 128);
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert!((h.moments[0] - 1.0).abs() < 0.1);
        assert!(h.mass_above(10.0) == 0.0);
        assert!(spectral_histogram("X1 X1 *", &cfg, 10, None).is_err());
        let cfg = EnsembleConfig::gaussian_poly(2, 16, 1, 3);
        assert!(matches!(
            spectral_histogram("X1 X2*", &cfg, 10, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn null_gibbs_matches_gaussian() {
        let mut cfg = EnsembleConfig::gaussian_poly(1, 16, 200, 8);
        cfg.observables = vec!["X1 X1* X1 X1*".into()];
        let g = run_ensemble(&cfg).unwrap().remove(0);
        cfg.mode = Mode::GibbsPoly;
        cfg.cutoff = Some(100.0);
        cfg.trials = 8;
        cfg.sampler = SamplerConfig {
            step_size: 1.0,
            burn_in: 10,
            thinning: 2,
            steps: 200,
        };
        cfg.potential = vec![PotentialSpec {
            coupling: 0.0,
            term: "X1 X1* X1 X1*".into(),
        }];
        let m = run_ensemble(&cfg).unwrap().remove(0);
        assert_eq!(m.acceptance, Some(1.0));
        let tol = 3.0 * (g.stderr.powi(2) + m.stderr.powi(2)).sqrt();
        assert!((g.mean - m.mean).abs() < tol, "{g:?} vs {m:?}");
    }
}
