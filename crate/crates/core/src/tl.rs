//! Temperley-Lieb diagrams and formal linear combinations of them.
//!
//! A diagram of size `k` is a non-crossing perfect matching on the boundary
//! points `0..2k`, numbered clockwise from the marked first point. The text
//! encoding `k:[(a,b),...]` is 1-based with sorted pairs.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{DeltaScalar, Rational};

/// Largest `k` accepted by [`enumerate_tl`] unless a caller raises it.
pub const DEFAULT_MAX_K: usize = 8;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TLDiagram {
    k: usize,
    partner: Vec<usize>,
}

/// Checks that `pairs` is a perfect matching of `0..n_points` and returns the
/// partner array.
pub fn partner_array(n_points: usize, pairs: &[(usize, usize)]) -> Result<Vec<usize>> {
    const UNSET: usize = usize::MAX;
    if n_points % 2 != 0 {
        return Err(Error::validation(format!("odd number of points: {n_points}")));
    }
    if pairs.len() * 2 != n_points {
        return Err(Error::validation(format!(
            "{} pairs cannot match {n_points} points",
            pairs.len()
        )));
    }
    let mut partner = vec![UNSET; n_points];
    for &(a, b) in pairs {
        if a == b {
            return Err(Error::validation(format!("point {a} matched to itself")));
        }
        for p in [a, b] {
            if p >= n_points {
                return Err(Error::validation(format!("point {p} out of range 0..{n_points}")));
            }
            if partner[p] != UNSET {
                return Err(Error::validation(format!("point {p} matched twice")));
            }
        }
        partner[a] = b;
        partner[b] = a;
    }
    Ok(partner)
}

/// True iff the perfect matching has no interleaved pairs `a < c < b < d`.
pub fn is_noncrossing(n_points: usize, pairs: &[(usize, usize)]) -> Result<bool> {
    let partner = partner_array(n_points, pairs)?;
    Ok(partner_is_noncrossing(&partner))
}

fn partner_is_noncrossing(partner: &[usize]) -> bool {
    let mut stack = Vec::with_capacity(partner.len() / 2);
    for (i, &j) in partner.iter().enumerate() {
        if j > i {
            stack.push(i);
        } else if stack.pop() != Some(j) {
            return false;
        }
    }
    stack.is_empty()
}

impl TLDiagram {
    /// The empty diagram, unit of `P_0`.
    pub fn empty() -> Self {
        Self {
            k: 0,
            partner: Vec::new(),
        }
    }

    /// Builds a diagram from 0-based pairs on `2k` points.
    pub fn from_pairs(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let partner = partner_array(2 * k, pairs)?;
        Self::from_partner(partner)
    }

    pub fn from_partner(partner: Vec<usize>) -> Result<Self> {
        let n = partner.len();
        if n % 2 != 0 {
            return Err(Error::validation("diagram needs an even number of points"));
        }
        for (i, &j) in partner.iter().enumerate() {
            if j >= n || j == i || partner[j] != i {
                return Err(Error::validation(format!("not a perfect matching at point {i}")));
            }
        }
        if !partner_is_noncrossing(&partner) {
            return Err(Error::validation("matching is crossing"));
        }
        Ok(Self { k: n / 2, partner })
    }

    /// `∪`, the single cup on two points.
    pub fn cup() -> Self {
        Self {
            k: 1,
            partner: vec![1, 0],
        }
    }

    /// Unit of `∧_k`: point `j` joined to `2k-1-j`.
    pub fn nested(k: usize) -> Self {
        let n = 2 * k;
        Self {
            k,
            partner: (0..n).map(|j| n - 1 - j).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn n_points(&self) -> usize {
        2 * self.k
    }

    pub fn partner(&self, point: usize) -> usize {
        self.partner[point]
    }

    pub fn partners(&self) -> &[usize] {
        &self.partner
    }

    /// Sorted 0-based pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|(i, &j)| *i < j)
            .map(|(i, &j)| (i, j))
            .collect()
    }

    /// Reflection fixing the boundary interval before the first point:
    /// point `p` goes to `2k-1-p`.
    pub fn reflect(&self) -> Self {
        let n = self.n_points();
        let mut partner = vec![0; n];
        for (i, &j) in self.partner.iter().enumerate() {
            partner[n - 1 - i] = n - 1 - j;
        }
        Self { k: self.k, partner }
    }

    /// Rotation moving point `p` to `p + r (mod 2k)`.
    pub fn rotate(&self, r: usize) -> Self {
        let n = self.n_points();
        if n == 0 {
            return self.clone();
        }
        let mut partner = vec![0; n];
        for (i, &j) in self.partner.iter().enumerate() {
            partner[(i + r) % n] = (j + r) % n;
        }
        Self { k: self.k, partner }
    }

    /// Canonical text encoding, e.g. `2:[(1,4),(2,3)]`.
    pub fn encode(&self) -> String {
        let body: Vec<String> = self
            .pairs()
            .into_iter()
            .map(|(a, b)| format!("({},{})", a + 1, b + 1))
            .collect();
        format!("{}:[{}]", self.k, body.join(","))
    }

    /// Parses the canonical encoding. Pair order inside the brackets is free.
    pub fn decode(text: &str) -> Result<Self> {
        crate::text::parse_diagram(text)
    }
}

impl fmt::Display for TLDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Debug for TLDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// All non-crossing perfect matchings on `2k` points in lexicographic order.
pub fn enumerate_tl(k: usize) -> Result<Vec<TLDiagram>> {
    enumerate_tl_with_limit(k, DEFAULT_MAX_K)
}

pub fn enumerate_tl_with_limit(k: usize, max_k: usize) -> Result<Vec<TLDiagram>> {
    if k > max_k {
        return Err(Error::limit("TL size k", k, max_k));
    }
    let mut out: Vec<TLDiagram> = interval_matchings(0, 2 * k)
        .into_iter()
        .map(|pairs| {
            let mut partner = vec![0; 2 * k];
            for (a, b) in pairs {
                partner[a] = b;
                partner[b] = a;
            }
            TLDiagram { k, partner }
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Non-crossing perfect matchings of the points `lo..hi`.
fn interval_matchings(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
    if lo >= hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for j in (lo + 1..hi).step_by(2) {
        let inner = interval_matchings(lo + 1, j);
        let outer = interval_matchings(j + 1, hi);
        for a in &inner {
            for b in &outer {
                let mut m = Vec::with_capacity(1 + a.len() + b.len());
                m.push((lo, j));
                m.extend_from_slice(a);
                m.extend_from_slice(b);
                out.push(m);
            }
        }
    }
    out
}

/// A formal `DeltaScalar`-linear combination of diagrams, possibly of mixed size.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct TLElement {
    terms: BTreeMap<TLDiagram, DeltaScalar>,
}

impl TLElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The empty diagram `∅` with coefficient one.
    pub fn unit() -> Self {
        Self::from_diagram(TLDiagram::empty())
    }

    pub fn from_diagram(d: TLDiagram) -> Self {
        Self::from_term(d, DeltaScalar::one())
    }

    pub fn from_term(d: TLDiagram, c: DeltaScalar) -> Self {
        let mut out = Self::zero();
        out.add_term(d, c);
        out
    }

    pub fn cup() -> Self {
        Self::from_diagram(TLDiagram::cup())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, d: TLDiagram, c: DeltaScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&d) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&d);
                }
            }
            None => {
                self.terms.insert(d, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TLDiagram, &DeltaScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, d: &TLDiagram) -> DeltaScalar {
        self.terms.get(d).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Distinct sizes present, ascending.
    pub fn grades(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.terms.keys().map(|d| d.size()).collect();
        g.dedup();
        g
    }

    pub fn min_grade(&self) -> Option<usize> {
        self.terms.keys().map(|d| d.size()).min()
    }

    /// Homogeneous grade, or `None` for zero and mixed elements.
    pub fn homogeneous_grade(&self) -> Option<usize> {
        match self.grades().as_slice() {
            [g] => Some(*g),
            _ => None,
        }
    }

    pub fn scale(&self, c: &DeltaScalar) -> Self {
        let mut out = Self::zero();
        for (d, v) in &self.terms {
            out.add_term(d.clone(), v * c);
        }
        out
    }

    pub fn scale_rational(&self, c: &Rational) -> Self {
        self.scale(&DeltaScalar::constant(c.clone()))
    }

    /// Applies a linear map defined on diagrams.
    pub fn map_diagrams<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&TLDiagram) -> Result<TLElement>,
    {
        let mut out = Self::zero();
        for (d, c) in &self.terms {
            out += &f(d)?.scale(c);
        }
        Ok(out)
    }

    /// Bilinear extension of a map defined on diagram pairs.
    pub fn bilinear<F>(a: &Self, b: &Self, mut f: F) -> Result<Self>
    where
        F: FnMut(&TLDiagram, &TLDiagram) -> Result<TLElement>,
    {
        let mut out = Self::zero();
        for (da, ca) in &a.terms {
            for (db, cb) in &b.terms {
                out += &f(da, db)?.scale(&(ca * cb));
            }
        }
        Ok(out)
    }
}

impl std::ops::AddAssign<&TLElement> for TLElement {
    fn add_assign(&mut self, rhs: &TLElement) {
        for (d, c) in &rhs.terms {
            self.add_term(d.clone(), c.clone());
        }
    }
}

impl std::ops::Add for &TLElement {
    type Output = TLElement;
    fn add(self, rhs: &TLElement) -> TLElement {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl std::ops::Sub for &TLElement {
    type Output = TLElement;
    fn sub(self, rhs: &TLElement) -> TLElement {
        let mut out = self.clone();
        out += &rhs.scale(&-DeltaScalar::one());
        out
    }
}

impl fmt::Display for TLElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(d, c)| {
                if *c == DeltaScalar::one() {
                    d.encode()
                } else {
                    format!("({c})*{}", d.encode())
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for TLElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TLElement({self})")
    }
}
