//! Planar-map expansions of free Gibbs laws.
//!
//! For `V = ∪ + Σ_j β_j W_j` the law `τ_V(Q)` is expanded as a jet in the
//! couplings. The coefficient of `β^m` is `Π_j (-1)^{m_j} / m_j!` times a sum
//! over connected genus-0 gluings of the observable disk with `m_j` labeled
//! copies of each `W_j`. A string may only join an even boundary point to an
//! odd one (an `X` to an `X*`).
//!
//! [`wick_oracle`] evaluates the same finite-`N` Gaussian ratio by brute
//! force over all Wick pairings, with no planarity or connectivity filter.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::poly::PolyElement;
use crate::scalar::{rational_int, Laurent, Rational};
use crate::tl::{TLDiagram, TLElement};

/// Default bound on the number of half-edges in one gluing problem.
pub const DEFAULT_MAX_HALF_EDGES: usize = 24;
/// Largest `p` accepted by [`nc_partition_moments`].
pub const MAX_NC_ORDER: usize = 12;

/// `Σ_{π ∈ NC(p)} δ^{|π|}` by listing the non-crossing partitions of `1..p`.
pub fn nc_partition_moments(p: usize) -> Result<Laurent> {
    if p > MAX_NC_ORDER {
        return Err(Error::limit("partition size", p, MAX_NC_ORDER));
    }
    let mut by_blocks = vec![0u64; p + 1];
    for_each_nc_partition(p, |blocks| by_blocks[blocks.len()] += 1);
    Ok(Laurent::from_terms(
        by_blocks
            .iter()
            .enumerate()
            .map(|(b, &c)| (b as i32, rational_int(c as i64))),
    ))
}

/// Calls `f` with the block list of every non-crossing partition of `0..p`.
pub fn for_each_nc_partition<F: FnMut(&[Vec<usize>])>(p: usize, mut f: F) {
    fn crosses(blocks: &[Vec<usize>], target: usize, i: usize) -> bool {
        // joining i to `target` crosses another block that has points both
        // below and above some element c of the target block, below i
        blocks[target].iter().any(|&c| {
            blocks.iter().enumerate().any(|(bi, other)| {
                bi != target
                    && other.iter().any(|&x| x > c && x < i)
                    && other.iter().any(|&x| x < c)
            })
        })
    }
    fn rec<F: FnMut(&[Vec<usize>])>(i: usize, p: usize, blocks: &mut Vec<Vec<usize>>, f: &mut F) {
        if i == p {
            f(blocks);
            return;
        }
        for b in 0..blocks.len() {
            if !crosses(blocks, b, i) {
                blocks[b].push(i);
                rec(i + 1, p, blocks, f);
                blocks[b].pop();
            }
        }
        blocks.push(vec![i]);
        rec(i + 1, p, blocks, f);
        blocks.pop();
    }
    rec(0, p, &mut Vec::new(), &mut f);
}

/// Observable or potential body.
#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Tl(TLElement),
    Poly(PolyElement),
}

impl Body {
    fn is_tl(&self) -> bool {
        matches!(self, Body::Tl(_))
    }
}

/// `β_j · body` in the potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTerm {
    pub body: Body,
    pub coupling_index: usize,
}

impl PotentialTerm {
    pub fn tl(body: TLElement, coupling_index: usize) -> Self {
        Self {
            body: Body::Tl(body),
            coupling_index,
        }
    }

    pub fn poly(body: PolyElement, coupling_index: usize) -> Self {
        Self {
            body: Body::Poly(body),
            coupling_index,
        }
    }
}

/// A jet in the couplings. Coefficients are Laurent polynomials in
/// `variable`: `"d"` for the loop parameter, `"N"` for finite-size results.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    pub variable: String,
    pub max_order: Vec<usize>,
    coefficients: BTreeMap<Vec<usize>, Laurent>,
}

/// All multi-indices `m` with `m_j ≤ max_order[j]`, in lexicographic order.
pub fn multi_indices(max_order: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &bound in max_order {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=bound).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

fn int_value(b: &BigInt) -> Value {
    match b.to_i64() {
        Some(v) => json!(v),
        None => json!(b.to_string()),
    }
}

fn parse_int(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::validation(format!("expected an integer, got {n}"))),
        Value::String(s) => s
            .parse()
            .map_err(|_| Error::validation(format!("expected an integer, got '{s}'"))),
        other => Err(Error::validation(format!("expected an integer, got {other}"))),
    }
}

impl TruncatedSeries {
    pub fn new(variable: &str, max_order: Vec<usize>) -> Self {
        Self {
            variable: variable.to_string(),
            max_order,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn coeff(&self, index: &[usize]) -> Laurent {
        self.coefficients.get(index).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, index: Vec<usize>, value: Laurent) -> Result<()> {
        if index.len() != self.max_order.len() || index.iter().zip(&self.max_order).any(|(m, b)| m > b) {
            return Err(Error::validation(format!(
                "index {index:?} outside the truncation {:?}",
                self.max_order
            )));
        }
        if value.is_zero() {
            self.coefficients.remove(&index);
        } else {
            self.coefficients.insert(index, value);
        }
        Ok(())
    }

    /// Nonzero coefficients in index order.
    pub fn coefficients(&self) -> impl Iterator<Item = (&Vec<usize>, &Laurent)> {
        self.coefficients.iter()
    }

    /// `Σ_m c_m(x) Π_j β_j^{m_j}`.
    pub fn evaluate(&self, betas: &[f64], x: f64) -> Result<f64> {
        if betas.len() != self.max_order.len() {
            return Err(Error::validation(format!(
                "{} couplings given for a series in {}",
                betas.len(),
                self.max_order.len()
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .map(|(m, c)| {
                c.eval(x)
                    * m.iter()
                        .zip(betas)
                        .map(|(&e, b)| b.powi(e as i32))
                        .product::<f64>()
            })
            .sum())
    }

    /// Restriction to multi-indices of total order at most `t`.
    pub fn truncate_total(&self, t: usize) -> Self {
        Self {
            variable: self.variable.clone(),
            max_order: self.max_order.clone(),
            coefficients: self
                .coefficients
                .iter()
                .filter(|(m, _)| m.iter().sum::<usize>() <= t)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// The `N^0` part of a finite-size series, as a constant series in `d`.
    pub fn large_n_limit(&self) -> Self {
        let mut out = Self::new("d", self.max_order.clone());
        for (m, c) in &self.coefficients {
            let lead = c.coeff(0);
            if !lead.is_zero() {
                out.coefficients.insert(m.clone(), Laurent::constant(lead));
            }
        }
        out
    }

    /// Exact specialization of the variable, e.g. `d = 2`. The result has
    /// constant coefficients and keeps the variable name.
    pub fn substitute(&self, x: &Rational) -> Result<Self> {
        let mut out = Self::new(&self.variable, self.max_order.clone());
        for (m, c) in &self.coefficients {
            out.set(m.clone(), Laurent::constant(c.eval_rational(x)?))?;
        }
        Ok(out)
    }

    /// Coefficient-wise difference; the variables must agree.
    pub fn diff(&self, other: &Self) -> Result<Self> {
        if self.variable != other.variable || self.max_order != other.max_order {
            return Err(Error::validation("series have different shapes"));
        }
        let mut out = self.clone();
        for (m, c) in &other.coefficients {
            let v = out.coeff(m) - c.clone();
            out.set(m.clone(), v)?;
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let coefficients: Vec<Value> = self
            .coefficients
            .iter()
            .map(|(m, c)| {
                let terms: Vec<Value> = c
                    .to_triples()
                    .into_iter()
                    .map(|(e, n, d)| json!([e, int_value(&n), int_value(&d)]))
                    .collect();
                json!({ "index": m, "value": c.display_with(&self.variable), "terms": terms })
            })
            .collect();
        json!({
            "variable": self.variable,
            "max_order": self.max_order,
            "coefficients": coefficients,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::validation(format!("series JSON: {what}"));
        let variable = v["variable"].as_str().ok_or_else(|| bad("missing variable"))?;
        let max_order: Vec<usize> = serde_json::from_value(v["max_order"].clone())?;
        let mut out = Self::new(variable, max_order);
        for entry in v["coefficients"].as_array().ok_or_else(|| bad("missing coefficients"))? {
            let index: Vec<usize> = serde_json::from_value(entry["index"].clone())?;
            let mut triples = Vec::new();
            for t in entry["terms"].as_array().ok_or_else(|| bad("missing terms"))? {
                let t = t.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("terms are triples"))?;
                let e = t[0].as_i64().ok_or_else(|| bad("exponent"))? as i32;
                triples.push((e, parse_int(&t[1])?, parse_int(&t[2])?));
            }
            out.set(index, Laurent::from_triples(triples)?)?;
        }
        Ok(out)
    }
}

/// Options shared by the enumerator and the oracle.
#[derive(Clone, Copy, Debug)]
pub struct MapOptions {
    pub max_half_edges: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            max_half_edges: DEFAULT_MAX_HALF_EDGES,
        }
    }
}

/// Calls `visit` with the global partner array of every connected genus-0
/// gluing of disks with the given numbers of boundary points, where a string
/// joins points of opposite parity. Disk 0 is grown one string at a time;
/// the boundary of the growing component is kept as a list of cycles. A
/// string inside one cycle splits it, a string to an untouched disk merges
/// that disk in, and a string between two cycles would add a handle.
/// Returns the number of gluings visited.
pub fn for_each_planar_gluing<F: FnMut(&[u32])>(sizes: &[usize], mut visit: F) -> u64 {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut total = 0usize;
    for &s in sizes {
        offsets.push(total);
        total += s;
    }
    if sizes.is_empty() {
        return 0;
    }
    let parity: Vec<bool> = sizes
        .iter()
        .flat_map(|&s| (0..s).map(|j| j % 2 == 1))
        .collect();

    struct Ctx<'a, F> {
        sizes: &'a [usize],
        offsets: &'a [usize],
        parity: &'a [bool],
        partner: Vec<u32>,
        pristine: Vec<bool>,
        n_pristine: usize,
        visit: F,
        count: u64,
    }

    fn balanced(parity: &[bool], items: &[u32]) -> bool {
        let odd = items.iter().filter(|&&h| parity[h as usize]).count();
        2 * odd == items.len()
    }

    fn rec<F: FnMut(&[u32])>(ctx: &mut Ctx<F>, cycles: &mut Vec<Vec<u32>>) {
        let Some(cycle) = cycles.pop() else {
            if ctx.n_pristine == 0 {
                ctx.count += 1;
                (ctx.visit)(&ctx.partner);
            }
            return;
        };
        let h = cycle[0];
        let rest = &cycle[1..];
        let ph = ctx.parity[h as usize];
        for (i, &h2) in rest.iter().enumerate() {
            if ctx.parity[h2 as usize] == ph || !balanced(ctx.parity, &rest[..i]) {
                continue;
            }
            ctx.partner[h as usize] = h2;
            ctx.partner[h2 as usize] = h;
            let depth = cycles.len();
            for part in [&rest[i + 1..], &rest[..i]] {
                if !part.is_empty() {
                    cycles.push(part.to_vec());
                }
            }
            rec(ctx, cycles);
            cycles.truncate(depth);
        }
        for d in 1..ctx.sizes.len() {
            if !ctx.pristine[d] {
                continue;
            }
            let (off, s) = (ctx.offsets[d], ctx.sizes[d]);
            ctx.pristine[d] = false;
            ctx.n_pristine -= 1;
            for j in 0..s {
                let h2 = (off + j) as u32;
                if ctx.parity[h2 as usize] == ph {
                    continue;
                }
                ctx.partner[h as usize] = h2;
                ctx.partner[h2 as usize] = h;
                let mut merged = rest.to_vec();
                merged.extend((1..s).map(|t| (off + (j + t) % s) as u32));
                let depth = cycles.len();
                if !merged.is_empty() {
                    cycles.push(merged);
                }
                rec(ctx, cycles);
                cycles.truncate(depth);
            }
            ctx.pristine[d] = true;
            ctx.n_pristine += 1;
        }
        cycles.push(cycle);
    }

    let mut pristine = vec![true; sizes.len()];
    pristine[0] = false;
    let mut ctx = Ctx {
        sizes,
        offsets: &offsets,
        parity: &parity,
        partner: vec![u32::MAX; total],
        pristine,
        n_pristine: sizes.len() - 1,
        visit: &mut visit,
        count: 0,
    };
    let mut cycles = Vec::new();
    if sizes[0] > 0 {
        cycles.push((0..sizes[0] as u32).collect::<Vec<u32>>());
    }
    rec(&mut ctx, &mut cycles);
    ctx.count
}

/// One homogeneous piece of a disk: all terms share the point count.
#[derive(Clone, Debug)]
enum Piece {
    Tl {
        n: usize,
        terms: Vec<(Vec<usize>, Laurent)>,
    },
    Poly {
        n: usize,
        terms: Vec<(Vec<u32>, Rational)>,
    },
}

impl Piece {
    fn n_points(&self) -> usize {
        match self {
            Piece::Tl { n, .. } | Piece::Poly { n, .. } => *n,
        }
    }

    fn n_terms(&self) -> usize {
        match self {
            Piece::Tl { terms, .. } => terms.len(),
            Piece::Poly { terms, .. } => terms.len(),
        }
    }
}

fn pieces(body: &Body) -> Vec<Piece> {
    match body {
        Body::Tl(x) => {
            let mut by_grade: BTreeMap<usize, Vec<(Vec<usize>, Laurent)>> = BTreeMap::new();
            for (d, c) in x.terms() {
                by_grade
                    .entry(d.size())
                    .or_default()
                    .push((d.partners().to_vec(), c.clone()));
            }
            by_grade
                .into_iter()
                .map(|(k, terms)| Piece::Tl { n: 2 * k, terms })
                .collect()
        }
        Body::Poly(p) => {
            let mut by_deg: BTreeMap<usize, Vec<(Vec<u32>, Rational)>> = BTreeMap::new();
            for (m, c) in p.terms() {
                by_deg
                    .entry(m.degree())
                    .or_default()
                    .push((m.letters().iter().map(|l| l.index).collect(), c.clone()));
            }
            by_deg
                .into_iter()
                .map(|(n, terms)| Piece::Poly { n, terms })
                .collect()
        }
    }
}

fn sign_factorial(m: &[usize]) -> Rational {
    let mut r = Rational::one();
    for &mj in m {
        for i in 1..=mj {
            r /= rational_int(i as i64);
        }
        if mj % 2 == 1 {
            r = -r;
        }
    }
    r
}

/// Groups potential pieces by coupling and checks modes and grades.
fn coupling_pieces(q: &Body, potential: &[PotentialTerm], n_couplings: usize) -> Result<Vec<Vec<Piece>>> {
    let mut out = vec![Vec::new(); n_couplings];
    for t in potential {
        if t.coupling_index >= n_couplings {
            return Err(Error::validation(format!(
                "coupling index {} but only {n_couplings} orders given",
                t.coupling_index
            )));
        }
        if t.body.is_tl() != q.is_tl() {
            return Err(Error::validation(
                "observable and potential must both be TL elements or both polynomials",
            ));
        }
        for p in pieces(&t.body) {
            if p.n_points() == 0 {
                return Err(Error::validation("potential terms must have grade at least 1"));
            }
            out[t.coupling_index].push(p);
        }
    }
    Ok(out)
}

/// Every way of giving each labeled copy one piece of its coupling.
fn copy_choices<'a>(couplings: &'a [Vec<Piece>], m: &[usize]) -> Vec<Vec<&'a Piece>> {
    let mut out: Vec<Vec<&Piece>> = vec![Vec::new()];
    for (j, &mj) in m.iter().enumerate() {
        for _ in 0..mj {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    couplings[j].iter().map(move |p| {
                        let mut next = prefix.clone();
                        next.push(p);
                        next
                    })
                })
                .collect();
        }
    }
    out
}

/// Mixed-radix decoding of a term combination.
fn combo_digits(mut code: usize, radices: &[usize], digits: &mut [usize]) {
    for (d, &r) in digits.iter_mut().zip(radices) {
        *d = code % r;
        code /= r;
    }
}

/// Weighted sum over planar gluings of the given disks.
fn evaluate_disks(disks: &[&Piece]) -> Laurent {
    let sizes: Vec<usize> = disks.iter().map(|p| p.n_points()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    let radices: Vec<usize> = disks.iter().map(|p| p.n_terms()).collect();
    let n_combos: usize = radices.iter().product();
    if n_combos == 0 {
        return Laurent::zero();
    }
    let mut digits = vec![0; disks.len()];
    let tl_mode = matches!(disks[0], Piece::Tl { .. });

    if tl_mode {
        // inner[c][h]: partner of h inside its disk under combination c
        let inner: Vec<Vec<u32>> = (0..n_combos)
            .map(|c| {
                combo_digits(c, &radices, &mut digits);
                let mut v = vec![0u32; total];
                for (d, p) in disks.iter().enumerate() {
                    let Piece::Tl { terms, .. } = p else { unreachable!() };
                    for (j, &q) in terms[digits[d]].0.iter().enumerate() {
                        v[offsets[d] + j] = (offsets[d] + q) as u32;
                    }
                }
                v
            })
            .collect();
        let mut hist = vec![vec![0u64; total / 2 + 1]; n_combos];
        let mut seen = vec![false; total];
        for_each_planar_gluing(&sizes, |outer| {
            for (c, inn) in inner.iter().enumerate() {
                seen.iter_mut().for_each(|s| *s = false);
                let mut loops = 0;
                for start in 0..total {
                    if seen[start] {
                        continue;
                    }
                    loops += 1;
                    let mut h = start;
                    loop {
                        seen[h] = true;
                        let o = outer[h] as usize;
                        seen[o] = true;
                        h = inn[o] as usize;
                        if h == start {
                            break;
                        }
                    }
                }
                hist[c][loops] += 1;
            }
        });
        let mut out = Laurent::zero();
        for (c, h) in hist.iter().enumerate() {
            combo_digits(c, &radices, &mut digits);
            let mut coef = Laurent::one();
            for (d, p) in disks.iter().enumerate() {
                let Piece::Tl { terms, .. } = p else { unreachable!() };
                coef *= &terms[digits[d]].1;
            }
            let poly = Laurent::from_terms(
                h.iter()
                    .enumerate()
                    .map(|(l, &n)| (l as i32, rational_int(n as i64))),
            );
            out += &coef * &poly;
        }
        out
    } else {
        let labels: Vec<Vec<u32>> = (0..n_combos)
            .map(|c| {
                combo_digits(c, &radices, &mut digits);
                let mut v = vec![0u32; total];
                for (d, p) in disks.iter().enumerate() {
                    let Piece::Poly { terms, .. } = p else { unreachable!() };
                    for (j, &l) in terms[digits[d]].0.iter().enumerate() {
                        v[offsets[d] + j] = l;
                    }
                }
                v
            })
            .collect();
        let mut counts = vec![0u64; n_combos];
        for_each_planar_gluing(&sizes, |outer| {
            for (c, lab) in labels.iter().enumerate() {
                if (0..total).all(|h| lab[h] == lab[outer[h] as usize]) {
                    counts[c] += 1;
                }
            }
        });
        let mut out = Rational::zero();
        for (c, &n) in counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            combo_digits(c, &radices, &mut digits);
            let mut coef = rational_int(n as i64);
            for (d, p) in disks.iter().enumerate() {
                let Piece::Poly { terms, .. } = p else { unreachable!() };
                coef *= &terms[digits[d]].1;
            }
            out += coef;
        }
        Laurent::constant(out)
    }
}

fn check_half_edges(disks: &[&Piece], opts: &MapOptions) -> Result<()> {
    let total: usize = disks.iter().map(|p| p.n_points()).sum();
    if total > opts.max_half_edges {
        return Err(Error::limit("half-edges", total, opts.max_half_edges));
    }
    Ok(())
}

/// The free Gibbs law jet `τ_V(Q)` for `V = ∪ + Σ_j β_j W_j`. TL bodies give
/// coefficients in `δ`; polynomial bodies give rational constants.
pub fn gibbs_series(
    q: &Body,
    potential: &[PotentialTerm],
    max_order: &[usize],
    opts: &MapOptions,
) -> Result<TruncatedSeries> {
    let couplings = coupling_pieces(q, potential, max_order.len())?;
    let q_pieces = pieces(q);
    let mut series = TruncatedSeries::new("d", max_order.to_vec());
    for m in multi_indices(max_order) {
        let mut total = Laurent::zero();
        for choice in copy_choices(&couplings, &m) {
            for qp in &q_pieces {
                let mut disks = vec![qp];
                disks.extend(choice.iter().copied());
                check_half_edges(&disks, opts)?;
                total += evaluate_disks(&disks);
            }
        }
        let value = total.scale(&sign_factorial(&m));
        series.set(m, value)?;
    }
    Ok(series)
}

/// The O(n) loop model: `V = ∪ + β_1 ∪∪ + β_2 ⋓` with coefficients in `δ`.
pub fn on_model_series(q: &TLElement, beta1_order: usize, beta2_order: usize) -> Result<TruncatedSeries> {
    on_model_series_with(q, beta1_order, beta2_order, &MapOptions::default())
}

pub fn on_model_series_with(
    q: &TLElement,
    beta1_order: usize,
    beta2_order: usize,
    opts: &MapOptions,
) -> Result<TruncatedSeries> {
    let potential = on_model_potential()?;
    gibbs_series(&Body::Tl(q.clone()), &potential, &[beta1_order, beta2_order], opts)
}

/// The two O(n) interaction terms `∪∪` (coupling 0) and `⋓` (coupling 1).
pub fn on_model_potential() -> Result<Vec<PotentialTerm>> {
    let cupcup = TLDiagram::from_pairs(2, &[(0, 1), (2, 3)])?;
    Ok(vec![
        PotentialTerm::tl(TLElement::from_diagram(cupcup), 0),
        PotentialTerm::tl(TLElement::from_diagram(TLDiagram::nested(2)), 1),
    ])
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when two classes were merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// `Σ_{pairings} N^{F - E}` for a product of traces of words: `F` counts
/// free index sums, `E` the pairings. Letters are `(index, starred)`.
fn wick_sum(words: &[&[(u32, bool)]]) -> Laurent {
    let mut letters: Vec<(u32, bool)> = Vec::new();
    let mut next_var: Vec<usize> = Vec::new();
    let mut n_vars = 0;
    for w in words {
        let base = n_vars;
        if w.is_empty() {
            n_vars += 1;
            continue;
        }
        for (p, &l) in w.iter().enumerate() {
            letters.push(l);
            next_var.push(base + (p + 1) % w.len());
        }
        n_vars += w.len();
    }
    // variable of position p is its row index; positions are numbered in
    // the order letters were pushed, which skips empty words
    let mut row_var = Vec::with_capacity(letters.len());
    {
        let mut base = 0;
        for w in words {
            if w.is_empty() {
                base += 1;
                continue;
            }
            for p in 0..w.len() {
                row_var.push(base + p);
            }
            base += w.len();
        }
    }
    let unstarred: Vec<usize> = (0..letters.len()).filter(|&p| !letters[p].1).collect();
    let starred: Vec<usize> = (0..letters.len()).filter(|&p| letters[p].1).collect();
    if unstarred.len() != starred.len() {
        return Laurent::zero();
    }
    let e = unstarred.len() as i32;
    let mut hist: BTreeMap<i32, u64> = BTreeMap::new();
    let mut used = vec![false; starred.len()];
    let mut choice = vec![0usize; unstarred.len()];

    fn rec(
        i: usize,
        unstarred: &[usize],
        starred: &[usize],
        letters: &[(u32, bool)],
        used: &mut [bool],
        choice: &mut [usize],
        leaf: &mut dyn FnMut(&[usize]),
    ) {
        if i == unstarred.len() {
            leaf(choice);
            return;
        }
        let p = unstarred[i];
        for (j, &q) in starred.iter().enumerate() {
            if !used[j] && letters[q].0 == letters[p].0 {
                used[j] = true;
                choice[i] = q;
                rec(i + 1, unstarred, starred, letters, used, choice, leaf);
                used[j] = false;
            }
        }
    }

    let mut leaf = |choice: &[usize]| {
        let mut uf = UnionFind::new(n_vars);
        let mut classes = n_vars as i32;
        for (i, &q) in choice.iter().enumerate() {
            let p = unstarred[i];
            // A_{ab} conj(A_{cd}) pairs a with c and b with d, where
            // (a, b) = (row p, next p) and (c, d) = (next q, row q)
            if uf.union(row_var[p], next_var[q]) {
                classes -= 1;
            }
            if uf.union(next_var[p], row_var[q]) {
                classes -= 1;
            }
        }
        *hist.entry(classes - e).or_insert(0) += 1;
    };
    rec(0, &unstarred, &starred, &letters, &mut used, &mut choice, &mut leaf);
    Laurent::from_terms(hist.into_iter().map(|(x, c)| (x, rational_int(c as i64))))
}

/// Exact finite-`N` jet of `E[(1/N) Tr Q e^{-N Σ β_j Tr W_j}] / E[e^{-N Σ β_j Tr W_j}]`
/// for independent complex Gaussian matrices with `E|a|² = 1/N`. The
/// coefficients are Laurent polynomials in `N`.
pub fn wick_oracle(
    q: &PolyElement,
    potential: &[PotentialTerm],
    max_order: &[usize],
    opts: &MapOptions,
) -> Result<TruncatedSeries> {
    let mut ws: Vec<Vec<(Vec<(u32, bool)>, Rational)>> = vec![Vec::new(); max_order.len()];
    for t in potential {
        let Body::Poly(p) = &t.body else {
            return Err(Error::validation("the Wick oracle needs polynomial potentials"));
        };
        if t.coupling_index >= max_order.len() {
            return Err(Error::validation(format!(
                "coupling index {} but only {} orders given",
                t.coupling_index,
                max_order.len()
            )));
        }
        for (m, c) in p.terms() {
            if m.degree() == 0 {
                return Err(Error::validation("potential terms must have grade at least 1"));
            }
            ws[t.coupling_index].push((m.letters().iter().map(|l| (l.index, l.star)).collect(), c.clone()));
        }
    }
    let q_terms: Vec<(Vec<(u32, bool)>, Rational)> = q
        .terms()
        .map(|(m, c)| (m.letters().iter().map(|l| (l.index, l.star)).collect(), c.clone()))
        .collect();

    let mut numer: BTreeMap<Vec<usize>, Laurent> = BTreeMap::new();
    let mut denom: BTreeMap<Vec<usize>, Laurent> = BTreeMap::new();
    for m in multi_indices(max_order) {
        let copies: usize = m.iter().sum();
        let mut choices: Vec<Vec<&(Vec<(u32, bool)>, Rational)>> = vec![Vec::new()];
        for (j, &mj) in m.iter().enumerate() {
            for _ in 0..mj {
                choices = choices
                    .into_iter()
                    .flat_map(|prefix| {
                        ws[j].iter().map(move |t| {
                            let mut next = prefix.clone();
                            next.push(t);
                            next
                        })
                    })
                    .collect();
            }
        }
        let mut n_sum = Laurent::zero();
        let mut z_sum = Laurent::zero();
        for choice in &choices {
            let mut coef = Rational::one();
            let mut words: Vec<&[(u32, bool)]> = Vec::with_capacity(copies + 1);
            for t in choice {
                coef *= &t.1;
                words.push(&t.0);
            }
            let half_edges: usize = words.iter().map(|w| w.len()).sum();
            let max_q = q_terms.iter().map(|t| t.0.len()).max().unwrap_or(0);
            if half_edges + max_q > opts.max_half_edges {
                return Err(Error::limit("half-edges", half_edges + max_q, opts.max_half_edges));
            }
            z_sum += &wick_sum(&words).scale(&coef);
            for (qw, qc) in &q_terms {
                let mut all = vec![qw.as_slice()];
                all.extend(words.iter().copied());
                n_sum += &wick_sum(&all).shift(-1).scale(&(&coef * qc));
            }
        }
        // each Tr W carries a factor N from the exponent -N β Tr W
        let sf = sign_factorial(&m);
        numer.insert(m.clone(), n_sum.shift(copies as i32).scale(&sf));
        denom.insert(m, z_sum.shift(copies as i32).scale(&sf));
    }

    // divide the jets: r_m = n_m - Σ_{0 < m' ≤ m} z_{m'} r_{m - m'}
    let mut series = TruncatedSeries::new("N", max_order.to_vec());
    let mut ratio: BTreeMap<Vec<usize>, Laurent> = BTreeMap::new();
    for m in multi_indices(max_order) {
        let mut r = numer[&m].clone();
        for (mp, z) in &denom {
            if mp.iter().all(|&x| x == 0) || mp.iter().zip(&m).any(|(a, b)| a > b) {
                continue;
            }
            let rest: Vec<usize> = m.iter().zip(mp).map(|(a, b)| a - b).collect();
            r = r - z * &ratio[&rest];
        }
        ratio.insert(m.clone(), r.clone());
        series.set(m, r)?;
    }
    Ok(series)
}

/// True when every coefficient only involves `N^0, N^-2, N^-4, ...`.
pub fn only_even_inverse_powers(s: &TruncatedSeries) -> bool {
    s.coefficients()
        .all(|(_, c)| c.terms().all(|(e, v)| v.is_zero() || (e <= 0 && e % 2 == 0)))
}

/// Largest absolute value among the numerators, used in diagnostics.
pub fn max_abs_coefficient(s: &TruncatedSeries) -> Rational {
    s.coefficients()
        .flat_map(|(_, c)| c.terms().map(|(_, v)| v.abs()).collect::<Vec<_>>())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::embed_tl;
    use crate::tangle::{trace_tl, wedge, wedge_power};
    use crate::text::parse_poly;
    use crate::tl::enumerate_tl;

    fn poly(s: &str) -> PolyElement {
        parse_poly(s).unwrap()
    }

    fn quartic() -> Vec<PotentialTerm> {
        vec![PotentialTerm::poly(poly("X1 X1* X1 X1*"), 0)]
    }

    /// Brute force: all parity-respecting matchings, filtered by Euler's
    /// formula and connectivity.
    fn brute_planar(sizes: &[usize]) -> Vec<Vec<u32>> {
        let total: usize = sizes.iter().sum();
        let mut disk_of = Vec::new();
        let mut next = Vec::new();
        let mut off = 0;
        for (d, &s) in sizes.iter().enumerate() {
            for j in 0..s {
                disk_of.push(d);
                next.push(off + (j + 1) % s);
            }
            off += s;
        }
        let parity: Vec<bool> = sizes.iter().flat_map(|&s| (0..s).map(|j| j % 2 == 1)).collect();
        let mut out = Vec::new();
        fn rec(partner: &mut Vec<u32>, parity: &[bool], out: &mut Vec<Vec<u32>>) {
            let Some(h) = partner.iter().position(|&p| p == u32::MAX) else {
                out.push(partner.clone());
                return;
            };
            for h2 in h + 1..partner.len() {
                if partner[h2] == u32::MAX && parity[h2] != parity[h] {
                    partner[h] = h2 as u32;
                    partner[h2] = h as u32;
                    rec(partner, parity, out);
                    partner[h] = u32::MAX;
                    partner[h2] = u32::MAX;
                }
            }
        }
        let mut all = Vec::new();
        rec(&mut vec![u32::MAX; total], &parity, &mut all);
        for m in all {
            let mut uf = UnionFind::new(sizes.len());
            let mut comps = sizes.len();
            for h in 0..total {
                if uf.union(disk_of[h], disk_of[m[h] as usize]) {
                    comps -= 1;
                }
            }
            let mut seen = vec![false; total];
            // a disk without points bounds one face on its own
            let mut faces = sizes.iter().filter(|&&s| s == 0).count() as i64;
            for s in 0..total {
                if seen[s] {
                    continue;
                }
                faces += 1;
                let mut h = s;
                while !seen[h] {
                    seen[h] = true;
                    h = next[m[h] as usize];
                }
            }
            let (v, e) = (sizes.len() as i64, (total / 2) as i64);
            if comps == 1 && v - e + faces == 2 {
                out.push(m);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn nc_partition_examples() {
        assert_eq!(nc_partition_moments(1).unwrap(), Laurent::power(1));
        assert_eq!(nc_partition_moments(2).unwrap().to_string(), "d^2 + d");
        assert_eq!(nc_partition_moments(3).unwrap().to_string(), "d^3 + 3*d^2 + d");
        let catalan = [1u64, 1, 2, 5, 14, 42, 132, 429, 1430];
        for p in 1..=8 {
            let total = nc_partition_moments(p).unwrap().eval_rational(&rational_int(1)).unwrap();
            assert_eq!(total, rational_int(catalan[p] as i64));
        }
        assert!(nc_partition_moments(13).is_err());
    }

    #[test]
    fn enumerator_matches_euler_brute_force() {
        let cases: &[&[usize]] = &[&[2], &[4], &[6], &[2, 4], &[4, 4], &[2, 2, 2], &[2, 4, 4], &[6, 4], &[4, 2, 2], &[0, 2], &[0]];
        for sizes in cases {
            let mut fast = Vec::new();
            let n = for_each_planar_gluing(sizes, |p| fast.push(p.to_vec()));
            fast.sort();
            assert_eq!(n as usize, fast.len());
            let mut dedup = fast.clone();
            dedup.dedup();
            assert_eq!(dedup.len(), fast.len(), "duplicates for {sizes:?}");
            assert_eq!(fast, brute_planar(sizes), "sizes {sizes:?}");
        }
    }

    #[test]
    fn order_zero_reduces_to_trace() {
        for k in 0..=3 {
            for d in enumerate_tl(k).unwrap() {
                let x = TLElement::from_diagram(d);
                let s = gibbs_series(&Body::Tl(x.clone()), &[], &[], &MapOptions::default()).unwrap();
                assert_eq!(s.coeff(&[]), trace_tl(&x).unwrap().value);
            }
        }
        let cc = wedge_power(&TLElement::cup(), 2).unwrap();
        let s = gibbs_series(&Body::Tl(cc), &[], &[], &MapOptions::default()).unwrap();
        assert_eq!(s.coeff(&[]), nc_partition_moments(2).unwrap());
    }

    #[test]
    fn wick_examples() {
        let opts = MapOptions::default();
        let s = wick_oracle(&poly("X1 X1*"), &[], &[], &opts).unwrap();
        assert_eq!(s.coeff(&[]), Laurent::one());
        let s = wick_oracle(&poly("X1 X1* X1 X1*"), &[], &[], &opts).unwrap();
        // complex Ginibre: the second moment has no correction, the third does
        assert_eq!(s.coeff(&[]), Laurent::from_int(2));
        let s = wick_oracle(&poly("X1 X1* X1 X1* X1 X1*"), &[], &[], &opts).unwrap();
        assert_eq!(s.coeff(&[]), Laurent::from_terms([(0, rational_int(5)), (-2, rational_int(1))]));
        let catalan = [1i64, 1, 2, 5, 14, 42];
        let mut word = PolyElement::unit();
        for p in 1..=5 {
            word = crate::poly::poly_mul(&word, &poly("X1 X1*"));
            let s = wick_oracle(&word, &[], &[], &opts).unwrap();
            assert_eq!(s.coeff(&[]).coeff(0), rational_int(catalan[p]));
            assert!(only_even_inverse_powers(&s));
        }
    }

    #[test]
    fn arbitration_quartic() {
        let opts = MapOptions::default();
        for q in ["X1 X1*", "X1 X1* X1 X1*"] {
            let q = poly(q);
            let oracle = wick_oracle(&q, &quartic(), &[2], &opts).unwrap();
            assert!(only_even_inverse_powers(&oracle));
            let maps = gibbs_series(&Body::Poly(q), &quartic(), &[2], &opts).unwrap();
            assert_eq!(oracle.large_n_limit(), maps);
        }
        let maps = gibbs_series(&Body::Poly(poly("X1 X1*")), &quartic(), &[1], &opts).unwrap();
        assert!(maps.coeff(&[1]).coeff(0) < Rational::zero());
    }

    #[test]
    fn disconnected_gluings_would_break_arbitration() {
        // keep planar gluings of every component shape, connected or not
        let opts = MapOptions::default();
        let q = poly("X1 X1*");
        let oracle = wick_oracle(&q, &quartic(), &[1], &opts).unwrap().large_n_limit();
        let connected = for_each_planar_gluing(&[2, 4], |_| {}) as i64;
        let disconnected = for_each_planar_gluing(&[2], |_| {}) as i64 * for_each_planar_gluing(&[4], |_| {}) as i64;
        assert_eq!(oracle.coeff(&[1]), Laurent::from_int(-connected));
        assert_ne!(oracle.coeff(&[1]), Laurent::from_int(-(connected + disconnected)));
    }

    #[test]
    fn symmetry_factor() {
        // labeled gluings = m! × orbits under permuting identical copies
        let sizes = [2usize, 4, 4];
        let mut labeled = Vec::new();
        for_each_planar_gluing(&sizes, |p| labeled.push(p.to_vec()));
        let swap = |h: u32| -> u32 {
            match h {
                2..=5 => h + 4,
                6..=9 => h - 4,
                _ => h,
            }
        };
        let mut orbits: Vec<Vec<u32>> = labeled
            .iter()
            .map(|p| {
                let mut q = vec![0u32; p.len()];
                for (h, &o) in p.iter().enumerate() {
                    q[swap(h as u32) as usize] = swap(o);
                }
                std::cmp::min(p.clone(), q)
            })
            .collect();
        orbits.sort();
        orbits.dedup();
        assert_eq!(labeled.len(), 2 * orbits.len());
        let s = gibbs_series(&Body::Poly(poly("X1 X1*")), &quartic(), &[2], &MapOptions::default()).unwrap();
        assert_eq!(s.coeff(&[2]), Laurent::from_int(orbits.len() as i64));
    }

    #[test]
    fn on_model_properties() {
        let s = on_model_series(&TLElement::cup(), 2, 1).unwrap();
        assert_eq!(s.coeff(&[0, 0]), Laurent::power(1));
        for (_, c) in s.coefficients() {
            assert!(c.is_polynomial());
        }
        // δ = K against the K-letter polynomial series
        for k in 1..=2u32 {
            let delta = rational_int(k as i64);
            let pot: Vec<PotentialTerm> = on_model_potential()
                .unwrap()
                .into_iter()
                .map(|t| match t.body {
                    Body::Tl(x) => PotentialTerm::poly(embed_tl(k, &x).unwrap(), t.coupling_index),
                    Body::Poly(_) => unreachable!(),
                })
                .collect();
            let q = embed_tl(k, &TLElement::cup()).unwrap();
            let p = gibbs_series(&Body::Poly(q), &pot, &[2, 1], &MapOptions::default()).unwrap();
            for m in multi_indices(&[2, 1]) {
                assert_eq!(
                    s.coeff(&m).eval_rational(&delta).unwrap(),
                    p.coeff(&m).coeff(0),
                    "K={k} m={m:?}"
                );
            }
        }
        // δ = 1, β_2 = 0 is the one-letter quartic model
        let one = gibbs_series(&Body::Poly(poly("X1 X1*")), &quartic(), &[2], &MapOptions::default()).unwrap();
        for m1 in 0..=2 {
            assert_eq!(
                s.coeff(&[m1, 0]).eval_rational(&rational_int(1)).unwrap(),
                one.coeff(&[m1]).coeff(0)
            );
        }
    }

    #[test]
    fn series_json_roundtrip() {
        let s = on_model_series(&TLElement::cup(), 1, 1).unwrap();
        let back = TruncatedSeries::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(s.diff(&back).unwrap().is_zero());
        let x = s.evaluate(&[0.0, 0.0], 2.0).unwrap();
        assert_eq!(x, 2.0);
    }

    #[test]
    fn limits_and_validation() {
        let cc = wedge(0, &TLElement::cup(), &TLElement::cup()).unwrap();
        let big = MapOptions { max_half_edges: 6 };
        let r = gibbs_series(&Body::Tl(TLElement::cup()), &[PotentialTerm::tl(cc, 0)], &[2], &big);
        assert!(matches!(r, Err(Error::ResourceLimit { .. })));
        let mixed = gibbs_series(
            &Body::Tl(TLElement::cup()),
            &[PotentialTerm::poly(poly("X1 X1*"), 0)],
            &[1],
            &MapOptions::default(),
        );
        assert!(mixed.is_err());
    }
}
