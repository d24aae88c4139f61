use planarprob::maps::{gibbs_series, nc_partition_moments, wick_oracle, Body, MapOptions, PotentialTerm};
use planarprob::rmt::{run_ensemble, EnsembleConfig, EstimateResult, Mode, PotentialSpec, SamplerConfig};
use planarprob::text::parse_poly;

fn within(r: &EstimateResult, expected: f64, k: f64) -> bool {
    (r.mean - expected).abs() <= k * r.stderr
}

/// Exact `(1/N) E Tr Q` at finite `N` from the Wick oracle.
fn wick_exact(q: &str, n: f64) -> f64 {
    let q = parse_poly(q).unwrap();
    let s = wick_oracle(&q, &[], &[], &MapOptions::default()).unwrap();
    s.evaluate(&[], n).unwrap()
}

#[test]
fn gaussian_moments_track_exact_finite_n_values() {
    let quartic = "X1 X1* X1 X1*";
    let sextic = "X1 X1* X1 X1* X1 X1*";
    assert_eq!(wick_exact(quartic, 32.0), 2.0);
    assert!((wick_exact(sextic, 32.0) - (5.0 + 1.0 / 1024.0)).abs() < 1e-14);
    for (n, trials) in [(32, 150), (64, 80), (128, 40)] {
        let mut cfg = EnsembleConfig::gaussian_poly(1, n, trials, 1000 + n as u64);
        cfg.observables = vec![quartic.into(), sextic.into()];
        let res = run_ensemble(&cfg).unwrap();
        for (r, q) in res.iter().zip([quartic, sextic]) {
            let exact = wick_exact(q, n as f64);
            assert!(within(r, exact, 3.0), "N={n} {q}: {r:?} vs {exact}");
        }
    }
}

#[test]
fn dipole_graph_matches_two_letter_model() {
    // two parallel edges between single vertices: δ = 2, like K = 2
    let mut poly = EnsembleConfig::gaussian_poly(2, 48, 60, 21);
    poly.observables = vec!["cup".into(), "cup^2".into(), "cup^3".into()];
    let mut graph = EnsembleConfig::gaussian_graph("dipole2", 48, 60, 22);
    graph.observables = poly.observables.clone();
    let a = run_ensemble(&poly).unwrap();
    let b = run_ensemble(&graph).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let tol = 3.0 * (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
        assert!((x.mean - y.mean).abs() < tol, "{x:?} vs {y:?}");
    }
    let limits: Vec<f64> = (1..=3)
        .map(|p| nc_partition_moments(p).unwrap().eval(2.0))
        .collect();
    assert_eq!(limits, vec![2.0, 6.0, 22.0]);
}

#[test]
fn graph_unit_and_cup() {
    for (name, delta) in [("a3", 2f64.sqrt()), ("a4", (1.0 + 5f64.sqrt()) / 2.0)] {
        let mut cfg = EnsembleConfig::gaussian_graph(name, 64, 30, 4);
        cfg.observables = vec!["id".into(), "cup".into()];
        let r = run_ensemble(&cfg).unwrap();
        assert!((r[0].mean - 1.0).abs() < 1e-12);
        assert!(within(&r[1], delta, 4.0) || (r[1].mean - delta).abs() < 0.02, "{name}: {:?}", r[1]);
    }
}

/// Planar moments `m_1, m_2` of `W = AA*` under `exp(-N Tr(W + βW²))`,
/// from the equilibrium measure on `[0, b]` with a hard edge at zero:
/// `G(z) = (V'(z) - (q0 + q1 z)√(1 - b/z)) / 2`.
fn planar_quartic_moments(beta: f64) -> (f64, f64) {
    let b = if beta == 0.0 {
        4.0
    } else {
        (-2.0 + (4.0 + 96.0 * beta).sqrt()) / (6.0 * beta)
    };
    let (q0, q1) = (1.0 + beta * b, 2.0 * beta);
    let m1 = (q0 * b.powi(2) / 8.0 + q1 * b.powi(3) / 16.0) / 2.0;
    let m2 = (q0 * b.powi(3) / 16.0 + 5.0 * q1 * b.powi(4) / 128.0) / 2.0;
    (m1, m2)
}

fn quartic_chain(beta: f64, n: usize, seed: u64) -> Vec<EstimateResult> {
    let mut cfg = EnsembleConfig::gaussian_poly(1, n, 8, seed);
    cfg.mode = Mode::GibbsPoly;
    cfg.cutoff = Some(4.0);
    cfg.potential = vec![PotentialSpec {
        coupling: beta,
        term: "X1 X1* X1 X1*".into(),
    }];
    cfg.sampler = SamplerConfig {
        step_size: 0.5,
        burn_in: 100,
        thinning: 2,
        steps: 300,
    };
    cfg.observables = vec!["X1 X1*".into(), "X1 X1* X1 X1*".into()];
    let r = run_ensemble(&cfg).unwrap();
    let acc = r[0].acceptance.unwrap();
    assert!(acc > 0.2, "acceptance {acc}");
    r
}

#[test]
fn equilibrium_measure_reproduces_the_series() {
    let (m1, m2) = planar_quartic_moments(0.0);
    assert!((m1 - 1.0).abs() < 1e-12 && (m2 - 2.0).abs() < 1e-12);
    let pot = vec![PotentialTerm::poly(parse_poly("X1 X1* X1 X1*").unwrap(), 0)];
    let s = gibbs_series(&Body::Poly(parse_poly("X1 X1*").unwrap()), &pot, &[3], &MapOptions::default()).unwrap();
    let beta = 1e-3;
    let jet = s.evaluate(&[beta], 1.0).unwrap();
    // the β³ term is 4.3e-7 here, the β⁴ remainder about 6e-9
    assert!((jet - planar_quartic_moments(beta).0).abs() < 5e-8);
}

#[test]
fn quartic_chain_matches_planar_law() {
    // finite N = 24 adds O(N⁻²) on top of the statistical error
    let r = quartic_chain(0.05, 24, 99);
    let (m1, m2) = planar_quartic_moments(0.05);
    for (res, exact) in r.iter().zip([m1, m2]) {
        let tol = 3.0 * res.stderr + 0.01 * exact;
        assert!((res.mean - exact).abs() < tol, "{res:?} vs {exact}");
    }
}

#[test]
fn weak_quartic_chain_tracks_the_series() {
    let beta = 0.01;
    let pot = vec![PotentialTerm::poly(parse_poly("X1 X1* X1 X1*").unwrap(), 0)];
    let r = quartic_chain(beta, 24, 98);
    for (res, q) in r.iter().zip(["X1 X1*", "X1 X1* X1 X1*"]) {
        let expected = gibbs_series(&Body::Poly(parse_poly(q).unwrap()), &pot, &[3], &MapOptions::default())
            .unwrap()
            .evaluate(&[beta], 1.0)
            .unwrap();
        let tol = 3.0 * res.stderr + 0.01 * expected;
        assert!((res.mean - expected).abs() < tol, "{res:?} vs {expected}");
    }
}
