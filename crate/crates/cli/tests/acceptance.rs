//! End-to-end checks, one line per criterion:
//!
//! `criterion N: PASS|FAIL  <details>  (<seconds>)`
//!
//! The test fails if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use planarprob::maps::{
    gibbs_series, nc_partition_moments, on_model_series, wick_oracle, Body, MapOptions, PotentialTerm,
};
use planarprob::poly::embed_tl;
use planarprob::rmt::{run_ensemble, spectral_histogram, EnsembleConfig, EstimateResult, Mode, PotentialSpec, SamplerConfig};
use planarprob::scalar::{rational_int, DeltaScalar};
use planarprob::tangle::{boxtimes, eps_trace, gram_eigenvalues, tl_basis, trace_boxtimes, trace_tl, wedge, wedge_power};
use planarprob::text::parse_poly;
use planarprob::{TLDiagram, TLElement};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Runs a criterion, enforcing its time budget, and prints its line.
fn criterion(n: usize, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if took > budget {
        o.pass = false;
        o.detail.push_str(&format!("; over the {budget:?} budget"));
    }
    println!(
        "criterion {n}: {}  {}  ({:.1} s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64()
    );
    o.pass
}

fn catalan(k: usize) -> u64 {
    let mut c = vec![1u64];
    for n in 0..k {
        c.push((0..=n).map(|i| c[i] * c[n - i]).sum());
    }
    c[k]
}

fn c1_tl_dimensions() -> Outcome {
    let mut got = Vec::new();
    for k in 0..=6 {
        let out = Command::new(env!("CARGO_BIN_EXE_planarprob"))
            .args(["tl", "dim", "--k", &k.to_string()])
            .output()
            .expect("binary runs");
        got.push(String::from_utf8_lossy(&out.stdout).trim().parse::<u64>().unwrap_or(0));
    }
    let want: Vec<u64> = (0..=6).map(catalan).collect();
    outcome(got == want, format!("tl dim k=0..6 = {got:?}, Catalan {want:?}"))
}

fn c2_free_poisson() -> Outcome {
    let cup = TLElement::cup();
    for p in 1..=6 {
        let lhs = trace_tl(&wedge_power(&cup, p).unwrap()).unwrap().value;
        let rhs = nc_partition_moments(p).unwrap();
        if lhs != rhs {
            return outcome(false, format!("p={p}: {lhs} vs {rhs}"));
        }
    }
    outcome(true, format!("τ(∪^p) = Σ_NC δ^|π| for p ≤ 6; p=6: {}", nc_partition_moments(6).unwrap()))
}

fn random_element(rng: &mut ChaCha8Rng, min_grade: usize, max_grade: usize) -> TLElement {
    let mut x = TLElement::zero();
    let terms = rng.random_range(1..=3);
    for _ in 0..terms {
        let g = rng.random_range(min_grade..=max_grade);
        let basis = tl_basis(g).unwrap();
        let d: &TLDiagram = &basis[rng.random_range(0..basis.len())];
        let c = rng.random_range(-3i64..=3);
        let mut coef = DeltaScalar::from_int(c.max(1) * if c < 0 { -1 } else { 1 });
        if rng.random_bool(0.3) {
            coef = coef.shift(rng.random_range(-1..=1));
        }
        x.add_term(d.clone(), coef);
    }
    x
}

fn c3_traciality() -> Outcome {
    let mut diagrams = Vec::new();
    for g in 0..=3 {
        diagrams.extend(tl_basis(g).unwrap().iter().cloned());
    }
    let mut pairs = 0;
    for a in &diagrams {
        for b in &diagrams {
            let (a, b) = (TLElement::from_diagram(a.clone()), TLElement::from_diagram(b.clone()));
            let ab = trace_tl(&wedge(0, &a, &b).unwrap()).unwrap().value;
            let ba = trace_tl(&wedge(0, &b, &a).unwrap()).unwrap().value;
            if ab != ba {
                return outcome(false, "τ(a∧_0 b) ≠ τ(b∧_0 a)");
            }
            pairs += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 1..=2 {
        for i in 0..100 {
            let a = random_element(&mut rng, k, 3);
            let b = random_element(&mut rng, k, 3);
            let c = random_element(&mut rng, k, 3);
            let ab = eps_trace(k, &wedge(k, &a, &b).unwrap()).unwrap().value;
            let ba = eps_trace(k, &wedge(k, &b, &a).unwrap()).unwrap().value;
            if ab != ba {
                return outcome(false, format!("k={k} sample {i}: (τ∘ε_k) not tracial"));
            }
            let left = boxtimes(k, &boxtimes(k, &a, &b).unwrap(), &c).unwrap();
            let right = boxtimes(k, &a, &boxtimes(k, &b, &c).unwrap()).unwrap();
            if left != right {
                return outcome(false, format!("k={k} sample {i}: ⊠_k not associative"));
            }
            let tab = trace_boxtimes(k, &boxtimes(k, &a, &b).unwrap()).unwrap().value;
            let tba = trace_boxtimes(k, &boxtimes(k, &b, &a).unwrap()).unwrap().value;
            if tab != tba {
                return outcome(false, format!("k={k} sample {i}: τ⊠_kτ not tracial"));
            }
        }
    }
    outcome(
        true,
        format!("{pairs} diagram pairs for ∧_0; 100 random triples each for k=1,2 (∧_k trace, ⊠_k associativity and trace), exact"),
    )
}

fn c4_positivity() -> Outcome {
    let golden = 2.0 * (std::f64::consts::PI / 5.0).cos();
    let mut worst = f64::INFINITY;
    let mut kernel = Vec::new();
    for &delta in &[golden, 2f64.sqrt(), 2.0, 2.5, 3.0] {
        for k in 0..=4 {
            let ev = gram_eigenvalues(k, delta).unwrap();
            let top = ev.iter().cloned().fold(0.0, f64::max);
            worst = worst.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
            if delta == golden {
                let zero = ev.iter().filter(|v| v.abs() < 1e-9 * top.max(1.0)).count();
                if zero > 0 {
                    kernel.push(format!("k={k}: rank {} of {}", ev.len() - zero, ev.len()));
                }
            }
        }
    }
    outcome(
        worst >= -1e-8 && !kernel.is_empty(),
        format!("min eigenvalue {worst:.3e}; at δ=2cos(π/5) kernel found ({})", kernel.join(", ")),
    )
}

fn finite_n_exact(q: &planarprob::poly::PolyElement, n: f64) -> f64 {
    wick_oracle(q, &[], &[], &MapOptions::default()).unwrap().evaluate(&[], n).unwrap()
}

fn estimates_line(rs: &[EstimateResult], expected: &[f64]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, e) in rs.iter().zip(expected) {
        let ok = (r.mean - e).abs() <= 3.0 * r.stderr;
        pass &= ok;
        parts.push(format!("{}: {:.5} ± {:.5} vs {:.5}", r.observable, r.mean, r.stderr, e));
    }
    (pass, parts.join("; "))
}

fn c5_gue_limit() -> Outcome {
    let n = 128;
    let mut cfg = EnsembleConfig::gaussian_poly(2, n, 200, 5);
    cfg.observables = vec!["cup".into(), "cup^2".into(), "cup^3".into()];
    let rs = run_ensemble(&cfg).unwrap();
    let expected: Vec<f64> = (1..=3)
        .map(|p| finite_n_exact(&embed_tl(2, &wedge_power(&TLElement::cup(), p).unwrap()).unwrap(), n as f64))
        .collect();
    let limits: Vec<f64> = (1..=3).map(|p| nc_partition_moments(p).unwrap().eval(2.0)).collect();
    let (pass, line) = estimates_line(&rs, &expected);
    outcome(pass, format!("K=2 N={n} 200 trials; {line}; limits {limits:?}"))
}

fn c6_graph_ensemble() -> Outcome {
    let n = 256;
    let mut cfg = EnsembleConfig::gaussian_graph("a3", n, 200, 6);
    cfg.observables = vec!["cup".into(), "cup^2".into(), "cup^3".into()];
    let rs = run_ensemble(&cfg).unwrap();
    let expected: Vec<f64> = (1..=3)
        .map(|p| nc_partition_moments(p).unwrap().eval(2f64.sqrt()))
        .collect();
    let (pass, line) = estimates_line(&rs, &expected);
    outcome(pass, format!("A3 (δ=√2) N={n} 200 trials; {line}"))
}

fn c7_arbitration() -> Outcome {
    let quartic = parse_poly("X1 X1* X1 X1*").unwrap();
    let pot = vec![PotentialTerm::poly(quartic, 0)];
    let opts = MapOptions::default();
    let observables = ["X1 X1*", "X1 X1* X1 X1*", "X1 X1* X1 X1* X1 X1*"];
    let mut checked = 0;
    for q in observables {
        let q = parse_poly(q).unwrap();
        let series = gibbs_series(&Body::Poly(q.clone()), &pot, &[3], &opts).unwrap();
        let oracle = wick_oracle(&q, &pot, &[3], &opts).unwrap().large_n_limit();
        let diff = series.diff(&oracle).unwrap();
        if !diff.is_zero() {
            return outcome(false, format!("{q}: enumerator and oracle differ"));
        }
        checked += series.coefficients().count();
    }
    outcome(
        true,
        format!("K=1 quartic, degrees 2, 4, 6 through order 3: {checked} nonzero coefficients equal exactly"),
    )
}

/// Planar moments of `W = AA*` under `exp(-N Tr(W + βW²))`, from the
/// equilibrium measure on `[0, b]` with `3βb² + 2b - 8 = 0`.
fn planar_quartic_moments(beta: f64) -> [f64; 2] {
    let b = (-2.0 + (4.0 + 96.0 * beta).sqrt()) / (6.0 * beta);
    let (q0, q1) = (1.0 + beta * b, 2.0 * beta);
    [
        (q0 * b.powi(2) / 8.0 + q1 * b.powi(3) / 16.0) / 2.0,
        (q0 * b.powi(3) / 16.0 + 5.0 * q1 * b.powi(4) / 128.0) / 2.0,
    ]
}

fn c8_gibbs_vs_series() -> Outcome {
    let beta = 0.05;
    let term = "X1 X1* X1 X1*";
    let mut cfg = EnsembleConfig::gaussian_poly(1, 64, 10, 8);
    cfg.mode = Mode::GibbsPoly;
    cfg.cutoff = Some(4.0);
    cfg.potential = vec![PotentialSpec {
        coupling: beta,
        term: term.into(),
    }];
    cfg.sampler = SamplerConfig {
        step_size: 0.15,
        burn_in: 200,
        thinning: 2,
        steps: 800,
    };
    cfg.observables = vec!["X1 X1*".into(), term.into()];
    let rs = run_ensemble(&cfg).unwrap();
    let pot = vec![PotentialTerm::poly(parse_poly(term).unwrap(), 0)];
    let exact = planar_quartic_moments(beta);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, r) in rs.iter().enumerate() {
        let q = parse_poly(&r.observable).unwrap();
        let jet = gibbs_series(&Body::Poly(q), &pot, &[3], &MapOptions::default())
            .unwrap()
            .evaluate(&[beta], 1.0)
            .unwrap();
        let ok = (r.mean - jet).abs() <= 3.0 * r.stderr + 0.02 * jet.abs();
        pass &= ok;
        parts.push(format!(
            "τ({}) = {:.4} ± {:.4} vs order-3 jet {:.4} (exact planar {:.4})",
            r.observable, r.mean, r.stderr, jet, exact[i]
        ));
    }
    let acc = rs[0].acceptance.unwrap_or(0.0);
    outcome(pass, format!("β={beta} R=4 N=64, acceptance {acc:.2}; {}", parts.join("; ")))
}

fn c9_on_model() -> Outcome {
    let cup = TLElement::cup();
    let s = on_model_series(&cup, 2, 2).unwrap();
    let polynomial = s.coefficients().all(|(_, c)| c.is_polynomial());
    let at2 = s.substitute(&rational_int(2)).unwrap();
    let cupcup = TLElement::from_diagram(TLDiagram::from_pairs(2, &[(0, 1), (2, 3)]).unwrap());
    let nest = TLElement::from_diagram(TLDiagram::nested(2));
    let pot = vec![
        PotentialTerm::poly(embed_tl(2, &cupcup).unwrap(), 0),
        PotentialTerm::poly(embed_tl(2, &nest).unwrap(), 1),
    ];
    let poly = gibbs_series(&Body::Poly(embed_tl(2, &cup).unwrap()), &pot, &[2, 2], &MapOptions::default()).unwrap();
    let equal = at2.diff(&poly).unwrap().is_zero();
    let root2: Vec<String> = s
        .coefficients()
        .map(|(m, c)| format!("{m:?}:{:.4}", c.eval(2f64.sqrt())))
        .collect();
    let finite = s.coefficients().all(|(_, c)| c.eval(2f64.sqrt()).is_finite());
    outcome(
        polynomial && equal && finite,
        format!(
            "coefficients polynomial in δ: {polynomial}; δ=2 equals K=2 series: {equal}; at δ=√2 {}",
            root2.join(" ")
        ),
    )
}

fn c10_marchenko_pastur() -> Outcome {
    let cfg = EnsembleConfig::gaussian_poly(1, 512, 10, 10);
    let h = spectral_histogram("X1 X1*", &cfg, 100, Some((0.0, 5.0))).unwrap();
    let want = [1.0, 2.0, 5.0];
    let moments_ok = h.moments.iter().zip(want).all(|(m, w)| (m - w).abs() <= 0.02 * w);
    let above = h.mass_above(4.1);
    outcome(
        moments_ok && above < 0.01 && (h.integral() - 1.0).abs() < 1e-12,
        format!(
            "K=1 N=512, {} eigenvalues; moments {:.4} {:.4} {:.4} vs 1 2 5; mass above 4.1 = {above:.4}",
            h.total, h.moments[0], h.moments[1], h.moments[2]
        ),
    )
}

#[test]
fn acceptance() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        criterion(1, Duration::from_secs(1), c1_tl_dimensions),
        criterion(2, Duration::from_secs(10), c2_free_poisson),
        criterion(3, min(10), c3_traciality),
        criterion(4, min(5), c4_positivity),
        criterion(5, min(5), c5_gue_limit),
        criterion(6, min(10), c6_graph_ensemble),
        criterion(7, min(2), c7_arbitration),
        criterion(8, min(15), c8_gibbs_vs_series),
        criterion(9, min(10), c9_on_model),
        criterion(10, min(5), c10_marchenko_pastur),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
