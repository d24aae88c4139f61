//! Bipartite graphs, Perron-Frobenius data and the graph planar algebra.
//!
//! Vertices are indexed globally: even vertices first, then odd ones. Every
//! edge is stored as (even endpoint, odd endpoint); parallel edges are
//! allowed. A step of a path that runs even to odd reads the edge matrix
//! `X_e`, the reverse step reads `X_e*`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tl::{TLDiagram, TLElement};

/// Largest loop half-length accepted by [`enumerate_loops`].
pub const DEFAULT_MAX_LOOP_K: usize = 8;
/// Upper bound on the number of loops a single enumeration may return.
pub const MAX_LOOPS: usize = 1 << 20;

/// On-disk graph description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub even: Vec<String>,
    pub odd: Vec<String>,
    pub edges: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGraph {
    names: Vec<String>,
    n_even: usize,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let mut names = spec.even.clone();
        names.extend(spec.odd.iter().cloned());
        let n_even = spec.even.len();
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if index.len() != names.len() {
            return Err(Error::validation("duplicate vertex names"));
        }
        if spec.edges.is_empty() {
            return Err(Error::validation("a graph needs at least one edge"));
        }
        let lookup = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| Error::validation(format!("unknown vertex '{n}'")))
        };
        let mut edges = Vec::with_capacity(spec.edges.len());
        for (a, b) in &spec.edges {
            let (a, b) = (lookup(a)?, lookup(b)?);
            let edge = match (a < n_even, b < n_even) {
                (true, false) => (a, b),
                (false, true) => (b, a),
                _ => {
                    return Err(Error::validation(format!(
                        "edge {}-{} does not join an even and an odd vertex",
                        names[a], names[b]
                    )))
                }
            };
            edges.push(edge);
        }
        let mut incident = vec![Vec::new(); names.len()];
        for (e, &(v, w)) in edges.iter().enumerate() {
            incident[v].push(e);
            incident[w].push(e);
        }
        let g = Self {
            names,
            n_even,
            edges,
            incident,
        };
        if !g.is_connected() {
            return Err(Error::validation("graph is not connected"));
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            even: self.names[..self.n_even].to_vec(),
            odd: self.names[self.n_even..].to_vec(),
            edges: self
                .edges
                .iter()
                .map(|&(v, w)| (self.names[v].clone(), self.names[w].clone()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("graph spec serializes")
    }

    /// One of the graphs shipped with the crate: `single_edge`, `a3`, `a4`,
    /// `k1k` (the star `K_{1,2}`) or `dipole2` (two parallel edges).
    pub fn bundled(name: &str) -> Result<Self> {
        let text = match name.trim_end_matches(".json") {
            "single_edge" => include_str!("../graphs/single_edge.json"),
            "a3" => include_str!("../graphs/a3.json"),
            "a4" => include_str!("../graphs/a4.json"),
            "k1k" => include_str!("../graphs/k1k.json"),
            "dipole2" => include_str!("../graphs/dipole2.json"),
            other => return Err(Error::validation(format!("no bundled graph named '{other}'"))),
        };
        Self::from_json(text)
    }

    /// The path `A_n` on `n ≥ 2` vertices.
    pub fn path(n: usize) -> Result<Self> {
        let name = |i: usize| format!("v{i}");
        Self::from_spec(&GraphSpec {
            even: (0..n).step_by(2).map(name).collect(),
            odd: (1..n).step_by(2).map(name).collect(),
            edges: (0..n.saturating_sub(1))
                .map(|i| {
                    let (a, b) = if i % 2 == 0 { (i, i + 1) } else { (i + 1, i) };
                    (name(a), name(b))
                })
                .collect(),
        })
    }

    /// The star `K_{1,k}` with its center on the even side.
    pub fn star(k: usize) -> Result<Self> {
        Self::from_spec(&GraphSpec {
            even: vec!["c".into()],
            odd: (1..=k).map(|i| format!("l{i}")).collect(),
            edges: (1..=k).map(|i| ("c".into(), format!("l{i}"))).collect(),
        })
    }

    /// Two vertices joined by `k` parallel edges.
    pub fn dipole(k: usize) -> Result<Self> {
        Self::from_spec(&GraphSpec {
            even: vec!["a".into()],
            odd: vec!["b".into()],
            edges: (0..k).map(|_| ("a".into(), "b".into())).collect(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn n_even(&self) -> usize {
        self.n_even
    }

    pub fn is_even(&self, v: usize) -> bool {
        v < self.n_even
    }

    pub fn even_vertices(&self) -> std::ops::Range<usize> {
        0..self.n_even
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    /// The far endpoint of edge `e` seen from `v`.
    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if v == a {
            b
        } else {
            a
        }
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &e in &self.incident[v] {
                let w = self.other_end(e, v);
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Symmetric adjacency matrix counting parallel edges.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.names.len();
        let mut a = DMatrix::zeros(n, n);
        for &(v, w) in &self.edges {
            a[(v, w)] += 1.0;
            a[(w, v)] += 1.0;
        }
        a
    }
}

/// Perron-Frobenius data: the graph norm and the positive eigenvector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PFData {
    pub delta: f64,
    /// Normalized so that the smallest entry is 1.
    pub mu: Vec<f64>,
}

impl PFData {
    pub fn residual(&self, g: &BipartiteGraph) -> f64 {
        let a = g.adjacency();
        let mu = nalgebra::DVector::from_column_slice(&self.mu);
        (&a * &mu - &mu * self.delta).amax()
    }
}

const PF_TOL: f64 = 1e-12;

pub fn pf_eigen(g: &BipartiteGraph) -> Result<PFData> {
    if !g.is_connected() {
        return Err(Error::validation("graph is not connected"));
    }
    let a = g.adjacency();
    let n = a.nrows();
    let mut v = if n <= 64 {
        let eig = SymmetricEigen::new(a.clone());
        let top = eig.eigenvalues.imax();
        eig.eigenvectors.column(top).into_owned()
    } else {
        nalgebra::DVector::from_element(n, 1.0)
    };
    // Power iteration on A + I polishes the dense result and is the whole
    // method for large graphs; the shift removes the -δ eigenvalue.
    let shifted = &a + DMatrix::identity(n, n);
    if v.sum() < 0.0 {
        v = -v;
    }
    let mut delta = 0.0;
    for _ in 0..100_000 {
        v /= v.norm();
        let av = &a * &v;
        delta = v.dot(&av);
        // measured in the min-normalized scale the residual check uses
        if (&av - &v * delta).amax() < 0.1 * PF_TOL * v.min().abs() {
            break;
        }
        v = &shifted * &v;
    }
    let min = v.min();
    if min <= 0.0 {
        return Err(Error::validation("Perron-Frobenius vector is not positive"));
    }
    let pf = PFData {
        delta,
        mu: v.iter().map(|x| x / min).collect(),
    };
    let res = pf.residual(g);
    if res >= PF_TOL {
        return Err(Error::validation(format!(
            "Perron-Frobenius residual {res:e} exceeds {PF_TOL:e}"
        )));
    }
    Ok(pf)
}

/// A graph together with its Perron-Frobenius data.
#[derive(Clone, Debug)]
pub struct GraphModel {
    pub graph: BipartiteGraph,
    pub pf: PFData,
}

impl GraphModel {
    pub fn new(graph: BipartiteGraph) -> Result<Self> {
        let pf = pf_eigen(&graph)?;
        Ok(Self { graph, pf })
    }
}

/// A closed path. Step `(e, true)` runs from the odd to the even end of `e`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphLoop {
    pub base: usize,
    pub steps: Vec<(usize, bool)>,
}

impl GraphLoop {
    pub fn empty(base: usize) -> Self {
        Self {
            base,
            steps: Vec::new(),
        }
    }

    /// Checks that consecutive steps share endpoints and the path closes.
    pub fn validate(&self, g: &BipartiteGraph) -> Result<()> {
        let mut at = self.base;
        for &(e, rev) in &self.steps {
            let (v, w) = *g
                .edges
                .get(e)
                .ok_or_else(|| Error::validation(format!("edge {e} out of range")))?;
            let (from, to) = if rev { (w, v) } else { (v, w) };
            if from != at {
                return Err(Error::validation(format!(
                    "step along edge {e} does not start at vertex {}",
                    g.vertex_name(at)
                )));
            }
            at = to;
        }
        if at != self.base {
            return Err(Error::validation("path does not return to its base"));
        }
        Ok(())
    }

    /// Vertex sequence `v_0 = base, v_1, ..., v_len = base`.
    pub fn vertices(&self, g: &BipartiteGraph) -> Vec<usize> {
        let mut out = vec![self.base];
        let mut at = self.base;
        for &(e, _) in &self.steps {
            at = g.other_end(e, at);
            out.push(at);
        }
        out
    }

    pub fn concat(&self, other: &Self) -> Option<Self> {
        (self.base == other.base).then(|| {
            let mut steps = self.steps.clone();
            steps.extend_from_slice(&other.steps);
            Self {
                base: self.base,
                steps,
            }
        })
    }
}

impl fmt::Debug for GraphLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}[", self.base)?;
        for (i, (e, rev)) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "e{e}{}", if *rev { "*" } else { "" })?;
        }
        f.write_str("]")
    }
}

/// All closed paths of length `2k` from `base`, depth first in edge order.
pub fn enumerate_loops(g: &BipartiteGraph, k: usize, base: usize) -> Result<Vec<GraphLoop>> {
    if k > DEFAULT_MAX_LOOP_K {
        return Err(Error::limit("loop half-length", k, DEFAULT_MAX_LOOP_K));
    }
    if base >= g.n_vertices() {
        return Err(Error::validation(format!("vertex {base} out of range")));
    }
    fn rec(
        g: &BipartiteGraph,
        at: usize,
        base: usize,
        left: usize,
        steps: &mut Vec<(usize, bool)>,
        out: &mut Vec<GraphLoop>,
    ) -> Result<()> {
        if left == 0 {
            if at == base {
                if out.len() == MAX_LOOPS {
                    return Err(Error::limit("number of loops", MAX_LOOPS + 1, MAX_LOOPS));
                }
                out.push(GraphLoop {
                    base,
                    steps: steps.clone(),
                });
            }
            return Ok(());
        }
        for &e in g.incident(at) {
            steps.push((e, !g.is_even(at)));
            rec(g, g.other_end(e, at), base, left - 1, steps, out)?;
            steps.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(g, base, base, 2 * k, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// A real linear combination of closed paths.
#[derive(Clone, Default, PartialEq)]
pub struct GraphElement {
    terms: BTreeMap<GraphLoop, f64>,
}

impl GraphElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Sum of the empty loops at the even vertices.
    pub fn unit(g: &BipartiteGraph) -> Self {
        let mut out = Self::zero();
        for v in g.even_vertices() {
            out.add_term(GraphLoop::empty(v), 1.0);
        }
        out
    }

    pub fn add_term(&mut self, l: GraphLoop, c: f64) {
        if c == 0.0 {
            return;
        }
        *self.terms.entry(l).or_insert(0.0) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GraphLoop, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms based at `v`.
    pub fn restrict(&self, v: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(l, _)| l.base == v)
                .map(|(l, c)| (l.clone(), *c))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(l, v)| (l.clone(), v * c)).collect(),
        }
    }

    /// Concatenation product; loops with different bases multiply to zero.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some(ab) = a.concat(b) {
                    out.add_term(ab, ca * cb);
                }
            }
        }
        out
    }

    /// Largest absolute coefficient difference, over the union of supports.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, c) in &self.terms {
            worst = worst.max((c - other.terms.get(l).copied().unwrap_or(0.0)).abs());
        }
        for (l, c) in &other.terms {
            if !self.terms.contains_key(l) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

impl std::ops::AddAssign<&GraphElement> for GraphElement {
    fn add_assign(&mut self, rhs: &GraphElement) {
        for (l, c) in &rhs.terms {
            self.add_term(l.clone(), *c);
        }
    }
}

impl fmt::Debug for GraphElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// `∪ = Σ_e sqrt(μ(v)/μ(w)) X_e X_e*` over edges `e = (v even, w odd)`.
pub fn cup_element(g: &BipartiteGraph, pf: &PFData) -> GraphElement {
    let mut out = GraphElement::zero();
    for (e, &(v, w)) in g.edges().iter().enumerate() {
        out.add_term(
            GraphLoop {
                base: v,
                steps: vec![(e, false), (e, true)],
            },
            (pf.mu[v] / pf.mu[w]).sqrt(),
        );
    }
    out
}

/// Image of a diagram based at the even vertices. Each strand `(a, b)` with
/// `a < b` forces step `b` to retrace step `a` and contributes
/// `sqrt(μ(start of a) / μ(end of a))`.
pub fn embed_diagram_graph(g: &BipartiteGraph, pf: &PFData, d: &TLDiagram) -> GraphElement {
    let n = d.n_points();
    let mut out = GraphElement::zero();
    struct Walk<'a> {
        g: &'a BipartiteGraph,
        pf: &'a PFData,
        d: &'a TLDiagram,
        n: usize,
        steps: Vec<(usize, bool)>,
        verts: Vec<usize>,
    }
    fn rec(w: &mut Walk, coef: f64, out: &mut GraphElement) {
        let p = w.steps.len();
        let at = *w.verts.last().expect("walk has a base");
        if p == w.n {
            out.add_term(
                GraphLoop {
                    base: w.verts[0],
                    steps: w.steps.clone(),
                },
                coef,
            );
            return;
        }
        let partner = w.d.partner(p);
        if partner < p {
            let (e, _) = w.steps[partner];
            w.steps.push((e, !w.g.is_even(at)));
            w.verts.push(w.g.other_end(e, at));
            rec(w, coef, out);
            w.steps.pop();
            w.verts.pop();
        } else {
            for &e in w.g.incident(at) {
                let next = w.g.other_end(e, at);
                let factor = (w.pf.mu[at] / w.pf.mu[next]).sqrt();
                w.steps.push((e, !w.g.is_even(at)));
                w.verts.push(next);
                rec(w, coef * factor, out);
                w.steps.pop();
                w.verts.pop();
            }
        }
    }
    for v in g.even_vertices() {
        let mut walk = Walk {
            g,
            pf,
            d,
            n,
            steps: Vec::with_capacity(n),
            verts: vec![v],
        };
        rec(&mut walk, 1.0, &mut out);
    }
    out
}

/// Image of a TL element with `δ` set to the graph norm.
pub fn embed_tl_graph(g: &BipartiteGraph, pf: &PFData, x: &TLElement) -> GraphElement {
    let mut out = GraphElement::zero();
    for (d, c) in x.terms() {
        out += &embed_diagram_graph(g, pf, d).scale(c.eval(pf.delta));
    }
    out
}

/// One matrix word `coef · Π X_e^{(*)}` based at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramWord {
    pub coef: f64,
    pub base: usize,
    pub letters: Vec<(usize, bool)>,
}

/// Matrix words with block sizes `[N μ(v)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixWordProgram {
    pub n: usize,
    pub dims: Vec<usize>,
    /// `(rows, cols)` of each `X_e`.
    pub edge_dims: Vec<(usize, usize)>,
    pub words: Vec<ProgramWord>,
}

/// Block sizes `[N μ(v)]`; a zero block is an error naming the vertex.
pub fn block_dims(g: &BipartiteGraph, pf: &PFData, n: usize) -> Result<Vec<usize>> {
    (0..g.n_vertices())
        .map(|v| {
            let d = (n as f64 * pf.mu[v]).floor() as usize;
            if d == 0 {
                Err(Error::validation(format!(
                    "block at vertex '{}' has size zero for N = {n}",
                    g.vertex_name(v)
                )))
            } else {
                Ok(d)
            }
        })
        .collect()
}

pub fn compile(g: &BipartiteGraph, e: &GraphElement, n: usize, pf: &PFData) -> Result<MatrixWordProgram> {
    let dims = block_dims(g, pf, n)?;
    let edge_dims = g.edges().iter().map(|&(v, w)| (dims[v], dims[w])).collect();
    let mut words = Vec::with_capacity(e.len());
    for (l, &c) in e.terms() {
        l.validate(g)?;
        words.push(ProgramWord {
            coef: c,
            base: l.base,
            letters: l.steps.clone(),
        });
    }
    Ok(MatrixWordProgram {
        n,
        dims,
        edge_dims,
        words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangle::wedge;
    use crate::tl::enumerate_tl;

    #[test]
    fn pf_examples() {
        let g = BipartiteGraph::bundled("single_edge").unwrap();
        let pf = pf_eigen(&g).unwrap();
        assert!((pf.delta - 1.0).abs() < 1e-14);
        assert_eq!(pf.mu.len(), 2);
        assert!(pf.mu.iter().all(|m| (m - 1.0).abs() < 1e-14));

        let g = BipartiteGraph::bundled("a3").unwrap();
        let pf = pf_eigen(&g).unwrap();
        let s2 = 2f64.sqrt();
        assert!((pf.delta - s2).abs() < 1e-14);
        let v1 = g.vertex_index("v1").unwrap();
        assert!((pf.mu[v1] - s2).abs() < 1e-13);

        let pf = pf_eigen(&BipartiteGraph::bundled("a4").unwrap()).unwrap();
        assert!((pf.delta - 2.0 * (std::f64::consts::PI / 5.0).cos()).abs() < 1e-14);

        let pf = pf_eigen(&BipartiteGraph::star(3).unwrap()).unwrap();
        assert!((pf.delta - 3f64.sqrt()).abs() < 1e-14);
        let pf = pf_eigen(&BipartiteGraph::dipole(3).unwrap()).unwrap();
        assert!((pf.delta - 3.0).abs() < 1e-14);
    }

    #[test]
    fn bundled_graphs_have_small_residuals() {
        for name in ["single_edge", "a3", "a4", "k1k", "dipole2"] {
            let g = BipartiteGraph::bundled(name).unwrap();
            let pf = pf_eigen(&g).unwrap();
            assert!(pf.residual(&g) < 1e-12, "{name}");
            let min = pf.mu.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(min, 1.0);
        }
        // above 64 vertices only power iteration runs
        let big = BipartiteGraph::star(70).unwrap();
        let pf = pf_eigen(&big).unwrap();
        assert!((pf.delta - 70f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let bad = GraphSpec {
            even: vec!["a".into(), "c".into()],
            odd: vec!["b".into(), "d".into()],
            edges: vec![("a".into(), "b".into()), ("c".into(), "d".into())],
        };
        assert!(BipartiteGraph::from_spec(&bad).is_err());
        let same_side = GraphSpec {
            even: vec!["a".into(), "c".into()],
            odd: vec!["b".into()],
            edges: vec![("a".into(), "c".into())],
        };
        assert!(BipartiteGraph::from_spec(&same_side).is_err());
        assert!(BipartiteGraph::bundled("nope").is_err());
        let g = BipartiteGraph::bundled("a4").unwrap();
        assert_eq!(BipartiteGraph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn loop_examples() {
        let g = BipartiteGraph::bundled("single_edge").unwrap();
        let loops = enumerate_loops(&g, 1, 0).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].steps, vec![(0, false), (0, true)]);
        let a3 = BipartiteGraph::bundled("a3").unwrap();
        let mid = a3.vertex_index("v1").unwrap();
        assert_eq!(enumerate_loops(&a3, 1, mid).unwrap().len(), 2);
        assert_eq!(enumerate_loops(&a3, 0, mid).unwrap(), vec![GraphLoop::empty(mid)]);
        assert!(enumerate_loops(&a3, 9, 0).is_err());
    }

    #[test]
    fn loop_counts_match_adjacency_powers() {
        for name in ["a3", "a4", "k1k", "dipole2"] {
            let g = BipartiteGraph::bundled(name).unwrap();
            let a = g.adjacency();
            let mut pw = DMatrix::identity(a.nrows(), a.nrows());
            for k in 0..=4 {
                for v in 0..g.n_vertices() {
                    let loops = enumerate_loops(&g, k, v).unwrap();
                    assert_eq!(loops.len() as f64, pw[(v, v)], "{name} k={k} v={v}");
                    for l in &loops {
                        l.validate(&g).unwrap();
                    }
                }
                pw = &pw * &a * &a;
            }
        }
    }

    #[test]
    fn cup_examples() {
        let g = BipartiteGraph::bundled("a3").unwrap();
        let pf = pf_eigen(&g).unwrap();
        let cup = cup_element(&g, &pf);
        assert_eq!(cup.len(), g.edges().len());
        let v0 = g.vertex_index("v0").unwrap();
        let (_, c) = cup.restrict(v0).terms().next().map(|(l, c)| (l.clone(), *c)).unwrap();
        assert!((c - (1.0 / 2f64.sqrt()).sqrt()).abs() < 1e-14);
        let single = BipartiteGraph::bundled("single_edge").unwrap();
        let cup = cup_element(&single, &pf_eigen(&single).unwrap());
        assert_eq!(cup.terms().next().unwrap().1, &1.0);
    }

    #[test]
    fn tl_embedding_is_multiplicative() {
        for name in ["a3", "a4", "k1k"] {
            let g = BipartiteGraph::bundled(name).unwrap();
            let pf = pf_eigen(&g).unwrap();
            let cup = embed_tl_graph(&g, &pf, &TLElement::cup());
            assert!(cup.max_diff(&cup_element(&g, &pf)) < 1e-14);
            let unit = embed_tl_graph(&g, &pf, &TLElement::unit());
            assert_eq!(unit, GraphElement::unit(&g));
            for ga in 0..=2 {
                for gb in 0..=2 {
                    for a in enumerate_tl(ga).unwrap() {
                        for b in enumerate_tl(gb).unwrap() {
                            let ea = TLElement::from_diagram(a.clone());
                            let eb = TLElement::from_diagram(b.clone());
                            let lhs = embed_tl_graph(&g, &pf, &wedge(0, &ea, &eb).unwrap());
                            let rhs = embed_tl_graph(&g, &pf, &ea).mul(&embed_tl_graph(&g, &pf, &eb));
                            assert!(lhs.max_diff(&rhs) < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn compile_examples() {
        let g = BipartiteGraph::bundled("single_edge").unwrap();
        let pf = pf_eigen(&g).unwrap();
        let prog = compile(&g, &cup_element(&g, &pf), 10, &pf).unwrap();
        assert_eq!(prog.words.len(), 1);
        assert_eq!(prog.edge_dims, vec![(10, 10)]);
        assert_eq!(prog.words[0].letters, vec![(0, false), (0, true)]);

        let a3 = BipartiteGraph::bundled("a3").unwrap();
        let pf = pf_eigen(&a3).unwrap();
        let prog = compile(&a3, &cup_element(&a3, &pf), 10, &pf).unwrap();
        assert_eq!(prog.dims[a3.vertex_index("v1").unwrap()], 14);
        assert_eq!(prog.dims[a3.vertex_index("v0").unwrap()], 10);

        let empty = compile(&a3, &GraphElement::zero(), 10, &pf).unwrap();
        assert!(empty.words.is_empty());
        assert!(matches!(compile(&a3, &GraphElement::zero(), 0, &pf), Err(Error::Validation(m)) if m.contains("v0")));
    }
}
