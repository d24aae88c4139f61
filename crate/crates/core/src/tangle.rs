//! Planar-algebra operations on Temperley-Lieb elements.
//!
//! Conventions (points numbered clockwise from the first point, 0-based):
//!
//! * `∧_k` joins the last `k` points of the left factor to the first `k`
//!   points of the right factor by nested strings.
//! * `ε_k` caps point `j` with point `2s-1-j` for `j < k` and rescales by `δ^{-k}`.
//! * `τ_TL` closes an element with every diagram of the matching size.
//! * For `⊠_k` an element of size `n ≥ k` is a box with `k` points on its left
//!   side (`0..k`), `n-k` on top, `k` on the right and `n-k` on the bottom.
//!   The right side of the left factor is joined horizontally to the left side
//!   of the right factor.
//! * `include` adds one strand joining a new first point to a new last point.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gluing::{DiskSpec, Endpoint, GluingConfig};
use crate::scalar::DeltaScalar;
use crate::tl::{enumerate_tl, TLDiagram, TLElement};

/// Value of a trace functional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceValue {
    pub value: DeltaScalar,
}

impl std::fmt::Display for TraceValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.value.fmt(f)
    }
}

fn disk(id: u32, k: usize) -> DiskSpec {
    DiskSpec { id, n_points: 2 * k }
}

fn d(id: u32, p: usize) -> Endpoint {
    Endpoint::disk(id, p)
}

/// Resolves a configuration and returns `δ^{loops} · (output diagram)`.
fn glue(config: &GluingConfig, contents: &[&TLDiagram]) -> Result<TLElement> {
    let r = config.resolve_ordered(contents)?;
    Ok(TLElement::from_term(r.diagram()?, DeltaScalar::power(r.loops as i32)))
}

/// Cached basis of `TL_k`.
pub fn tl_basis(k: usize) -> Result<Arc<Vec<TLDiagram>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<TLDiagram>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("basis cache poisoned").get(&k) {
        return Ok(v.clone());
    }
    let basis = Arc::new(enumerate_tl(k)?);
    cache
        .lock()
        .expect("basis cache poisoned")
        .insert(k, basis.clone());
    Ok(basis)
}

fn check_grade(x: &TLElement, k: usize, op: &str) -> Result<()> {
    if let Some(g) = x.min_grade() {
        if g < k {
            return Err(Error::validation(format!(
                "{op}: element has grade {g} below {k}"
            )));
        }
    }
    Ok(())
}

fn wedge_config(k: usize, size_a: usize, size_b: usize) -> Result<GluingConfig> {
    let (na, nb) = (2 * size_a, 2 * size_b);
    let mut strings = Vec::with_capacity(na + nb);
    let mut out = 0;
    for p in 0..na - k {
        strings.push((d(0, p), Endpoint::Open(out)));
        out += 1;
    }
    for j in 0..k {
        strings.push((d(0, na - 1 - j), d(1, j)));
    }
    for q in k..nb {
        strings.push((d(1, q), Endpoint::Open(out)));
        out += 1;
    }
    GluingConfig::new(vec![disk(0, size_a), disk(1, size_b)], out, &strings, 0)
}

/// `a ∧_k b` on diagrams.
pub fn wedge_diagrams(k: usize, a: &TLDiagram, b: &TLDiagram) -> Result<TLElement> {
    if a.size() < k || b.size() < k {
        return Err(Error::validation(format!(
            "wedge_{k}: grades {} and {} must be at least {k}",
            a.size(),
            b.size()
        )));
    }
    glue(&wedge_config(k, a.size(), b.size())?, &[a, b])
}

/// The product `∧_k`, extended bilinearly.
pub fn wedge(k: usize, a: &TLElement, b: &TLElement) -> Result<TLElement> {
    check_grade(a, k, "wedge")?;
    check_grade(b, k, "wedge")?;
    TLElement::bilinear(a, b, |x, y| wedge_diagrams(k, x, y))
}

/// `x ∧_0 x ∧_0 ... ∧_0 x` with `p` factors; `p = 0` gives `∅`.
pub fn wedge_power(x: &TLElement, p: usize) -> Result<TLElement> {
    let mut acc = TLElement::unit();
    for _ in 0..p {
        acc = wedge(0, &acc, x)?;
    }
    Ok(acc)
}

/// `ε_k`: caps the `k` outermost strand pairs and multiplies by `δ^{-k}`.
pub fn eps(k: usize, x: &TLElement) -> Result<TLElement> {
    check_grade(x, k, "eps")?;
    x.map_diagrams(|dg| {
        let s = dg.size();
        let n = 2 * s;
        let mut strings = Vec::with_capacity(n);
        for j in 0..k {
            strings.push((d(0, j), d(0, n - 1 - j)));
        }
        for p in k..n - k {
            strings.push((d(0, p), Endpoint::Open(p - k)));
        }
        let cfg = GluingConfig::new(vec![disk(0, s)], n - 2 * k, &strings, 0)?;
        Ok(glue(&cfg, &[dg])?.scale(&DeltaScalar::power(-(k as i32))))
    })
}

/// Number of loops when `s` is glued against the reflection of `t`.
pub fn pairing_loops(s: &TLDiagram, t: &TLDiagram) -> Result<usize> {
    if s.size() != t.size() {
        return Err(Error::validation("pairing of diagrams of different sizes"));
    }
    let k = s.size();
    let n = 2 * k;
    let strings: Vec<_> = (0..n).map(|p| (d(0, p), d(1, n - 1 - p))).collect();
    let cfg = GluingConfig::new(vec![disk(0, k), disk(1, k)], 0, &strings, 0)?;
    Ok(cfg.resolve_ordered(&[s, &t.reflect()])?.loops)
}

/// `τ_TL` of a single diagram: the sum of `δ^{loops}` over all closures.
pub fn trace_diagram(x: &TLDiagram) -> Result<DeltaScalar> {
    let basis = tl_basis(x.size())?;
    let mut out = DeltaScalar::zero();
    for t in basis.iter() {
        out += DeltaScalar::power(pairing_loops(x, t)? as i32);
    }
    Ok(out)
}

/// The Voiculescu trace `τ_TL`, linear in `x`; mixed grades are summed per grade.
pub fn trace_tl(x: &TLElement) -> Result<TraceValue> {
    let mut value = DeltaScalar::zero();
    for (dg, c) in x.terms() {
        value += &trace_diagram(dg)? * c;
    }
    Ok(TraceValue { value })
}

/// `τ_TL ∘ ε_k`, the trace on `(P, ∧_k)`.
pub fn eps_trace(k: usize, x: &TLElement) -> Result<TraceValue> {
    trace_tl(&eps(k, x)?)
}

/// Gram matrix of `TL_k` with entries `δ^{ℓ(S,T)}`, rows in basis order.
pub fn gram_matrix(k: usize) -> Result<Vec<Vec<DeltaScalar>>> {
    let basis = tl_basis(k)?;
    basis
        .iter()
        .map(|s| {
            basis
                .iter()
                .map(|t| Ok(DeltaScalar::power(pairing_loops(s, t)? as i32)))
                .collect()
        })
        .collect()
}

/// Gram matrix evaluated at a numeric `δ`.
pub fn gram_numeric(k: usize, delta: f64) -> Result<DMatrix<f64>> {
    let g = gram_matrix(k)?;
    let n = g.len();
    Ok(DMatrix::from_fn(n, n, |i, j| g[i][j].eval(delta)))
}

/// Eigenvalues of the numeric Gram matrix, descending.
pub fn gram_eigenvalues(k: usize, delta: f64) -> Result<Vec<f64>> {
    let m = gram_numeric(k, delta)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Reflects every diagram; rational coefficients are their own conjugates.
pub fn adjoint(x: &TLElement) -> TLElement {
    let mut out = TLElement::zero();
    for (dg, c) in x.terms() {
        out.add_term(dg.reflect(), c.clone());
    }
    out
}

fn boxtimes_config(k: usize, na: usize, nb: usize) -> Result<GluingConfig> {
    let n = na + nb - k;
    let mut strings = Vec::with_capacity(2 * n + 2 * k);
    for i in 0..k {
        strings.push((d(0, i), Endpoint::Open(i)));
        strings.push((d(0, na + i), d(1, k - 1 - i)));
        strings.push((d(1, nb + i), Endpoint::Open(n + i)));
    }
    let mut top = k;
    for p in k..na {
        strings.push((d(0, p), Endpoint::Open(top)));
        top += 1;
    }
    for p in k..nb {
        strings.push((d(1, p), Endpoint::Open(top)));
        top += 1;
    }
    let mut bottom = n + k;
    for p in nb + k..2 * nb {
        strings.push((d(1, p), Endpoint::Open(bottom)));
        bottom += 1;
    }
    for p in na + k..2 * na {
        strings.push((d(0, p), Endpoint::Open(bottom)));
        bottom += 1;
    }
    GluingConfig::new(vec![disk(0, na), disk(1, nb)], 2 * n, &strings, 0)
}

pub fn boxtimes_diagrams(k: usize, a: &TLDiagram, b: &TLDiagram) -> Result<TLElement> {
    if a.size() < k || b.size() < k {
        return Err(Error::validation(format!(
            "boxtimes_{k}: grades {} and {} must be at least {k}",
            a.size(),
            b.size()
        )));
    }
    glue(&boxtimes_config(k, a.size(), b.size())?, &[a, b])
}

/// The symmetric-enveloping product `⊠_k`, extended bilinearly.
pub fn boxtimes(k: usize, a: &TLElement, b: &TLElement) -> Result<TLElement> {
    check_grade(a, k, "boxtimes")?;
    check_grade(b, k, "boxtimes")?;
    TLElement::bilinear(a, b, |x, y| boxtimes_diagrams(k, x, y))
}

fn trace_boxtimes_diagram(k: usize, x: &TLDiagram) -> Result<DeltaScalar> {
    let n = x.size();
    let t = n - k;
    if t % 2 != 0 {
        return Ok(DeltaScalar::zero());
    }
    let half = t / 2;
    let mut strings = Vec::with_capacity(2 * n);
    for i in 0..k {
        strings.push((d(0, n + i), d(0, k - 1 - i)));
    }
    for j in 0..t {
        strings.push((d(0, k + j), d(1, t - 1 - j)));
        strings.push((d(0, n + k + j), d(2, t - 1 - j)));
    }
    let cfg = GluingConfig::new(vec![disk(0, n), disk(1, half), disk(2, half)], 0, &strings, 0)?;
    let basis = tl_basis(half)?;
    let mut out = DeltaScalar::zero();
    for top in basis.iter() {
        for bottom in basis.iter() {
            let r = cfg.resolve_ordered(&[x, top, bottom])?;
            out += DeltaScalar::power(r.loops as i32);
        }
    }
    Ok(out)
}

/// `τ ⊠_k τ`: the side strands are closed around the element and the top and
/// bottom boundaries are each closed with every TL diagram.
pub fn trace_boxtimes(k: usize, x: &TLElement) -> Result<TraceValue> {
    check_grade(x, k, "trace_boxtimes")?;
    let mut value = DeltaScalar::zero();
    for (dg, c) in x.terms() {
        value += &trace_boxtimes_diagram(k, dg)? * c;
    }
    Ok(TraceValue { value })
}

/// The inclusion `P_k → P_{k+1}` adding an outer through-strand.
pub fn include(x: &TLElement) -> Result<TLElement> {
    x.map_diagrams(|dg| {
        let n = dg.n_points();
        let mut strings: Vec<_> = (0..n).map(|p| (d(0, p), Endpoint::Open(p + 1))).collect();
        strings.push((Endpoint::Open(0), Endpoint::Open(n + 1)));
        let cfg = GluingConfig::new(vec![disk(0, dg.size())], n + 2, &strings, 0)?;
        glue(&cfg, &[dg])
    })
}
