//! The polynomial planar algebra on `K` letters: alternating monomials
//! `X_{i1} X_{j1}* X_{i2} X_{j2}* ...`, their linear combinations, the image
//! of Temperley-Lieb diagrams and the label-matched Gaussian trace.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{rational_int, Rational};
use crate::tl::{TLDiagram, TLElement};

/// One letter `X_index` or its adjoint. Indices start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub index: u32,
    pub star: bool,
}

impl Letter {
    pub fn new(index: u32, star: bool) -> Self {
        Self { index, star }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}{}", self.index, if self.star { "*" } else { "" })
    }
}

/// A word of even length whose letters alternate unstarred/starred,
/// starting unstarred.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AltMonomial {
    letters: Vec<Letter>,
}

impl AltMonomial {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.len() % 2 != 0 {
            return Err(Error::validation(format!(
                "monomial has odd length {}",
                letters.len()
            )));
        }
        for (pos, l) in letters.iter().enumerate() {
            if l.index == 0 {
                return Err(Error::validation("letter indices start at 1"));
            }
            if l.star != (pos % 2 == 1) {
                return Err(Error::validation(format!(
                    "letter {l} at position {} breaks the alternation",
                    pos + 1
                )));
            }
        }
        Ok(Self { letters })
    }

    /// Builds `X_{i0} X_{i1}* X_{i2} ...` from the index sequence.
    pub fn from_indices(indices: &[u32]) -> Result<Self> {
        Self::new(
            indices
                .iter()
                .enumerate()
                .map(|(p, &i)| Letter::new(i, p % 2 == 1))
                .collect(),
        )
    }

    /// The empty monomial.
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }

    pub fn grade(&self) -> usize {
        self.letters.len() / 2
    }

    pub fn max_index(&self) -> u32 {
        self.letters.iter().map(|l| l.index).max().unwrap_or(0)
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Self { letters }
    }
}

impl fmt::Display for AltMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for AltMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A rational linear combination of alternating monomials.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct PolyElement {
    terms: BTreeMap<AltMonomial, Rational>,
}

impl PolyElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit() -> Self {
        Self::from_monomial(AltMonomial::unit())
    }

    pub fn from_monomial(m: AltMonomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, Rational::one());
        p
    }

    pub fn add_term(&mut self, m: AltMonomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&AltMonomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &AltMonomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> u32 {
        self.terms.keys().map(AltMonomial::max_index).max().unwrap_or(0)
    }

    /// The common grade, if every monomial has the same degree.
    pub fn homogeneous_grade(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(AltMonomial::grade);
        let g = it.next()?;
        it.all(|h| h == g).then_some(g)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }
}

impl std::ops::AddAssign<&PolyElement> for PolyElement {
    fn add_assign(&mut self, rhs: &PolyElement) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl std::ops::Add for &PolyElement {
    type Output = PolyElement;
    fn add(self, rhs: &PolyElement) -> PolyElement {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl std::ops::Sub for &PolyElement {
    type Output = PolyElement;
    fn sub(self, rhs: &PolyElement) -> PolyElement {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl fmt::Display for PolyElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PolyElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Concatenation product, extended bilinearly.
pub fn poly_mul(a: &PolyElement, b: &PolyElement) -> PolyElement {
    let mut out = PolyElement::zero();
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            out.add_term(ma.concat(mb), ca * cb);
        }
    }
    out
}

/// Image of one diagram: every strand carries a label in `1..=K`.
pub fn embed_diagram(k_letters: u32, d: &TLDiagram) -> Result<PolyElement> {
    if k_letters == 0 {
        return Err(Error::validation("the number of letters must be positive"));
    }
    let pairs = d.pairs();
    let n = d.n_points();
    let mut out = PolyElement::zero();
    let mut labels = vec![1u32; pairs.len()];
    let mut indices = vec![0u32; n];
    loop {
        for (s, &(a, b)) in pairs.iter().enumerate() {
            indices[a] = labels[s];
            indices[b] = labels[s];
        }
        out.add_term(AltMonomial::from_indices(&indices)?, Rational::one());
        // odometer over strand labels
        let mut s = 0;
        while s < labels.len() && labels[s] == k_letters {
            labels[s] = 1;
            s += 1;
        }
        if s == labels.len() {
            break;
        }
        labels[s] += 1;
    }
    Ok(out)
}

/// Image of a TL element in the `K`-letter polynomial algebra, with `δ = K`.
pub fn embed_tl(k_letters: u32, x: &TLElement) -> Result<PolyElement> {
    let delta = rational_int(k_letters as i64);
    let mut out = PolyElement::zero();
    for (d, c) in x.terms() {
        let coef = c.eval_rational(&delta)?;
        out += &embed_diagram(k_letters, d)?.scale(&coef);
    }
    Ok(out)
}

/// Number of non-crossing pairings of the letters of `w` that join each
/// `X_i` to an `X_i*` with the same index.
pub fn gaussian_trace_monomial(w: &AltMonomial) -> Rational {
    let letters = w.letters();
    let n = letters.len();
    // count[lo][hi]: pairings of the interval lo..hi (exclusive)
    let mut count = vec![vec![0u64; n + 1]; n + 1];
    for lo in 0..=n {
        count[lo][lo] = 1;
    }
    for len in (2..=n).step_by(2) {
        for lo in 0..=n - len {
            let hi = lo + len;
            let mut total = 0u64;
            for m in (lo + 1..hi).step_by(2) {
                if letters[lo].index == letters[m].index && letters[lo].star != letters[m].star {
                    total += count[lo + 1][m] * count[m + 1][hi];
                }
            }
            count[lo][hi] = total;
        }
    }
    rational_int(count[0][n] as i64)
}

/// `τ` on the `K`-letter algebra: the limit of `(1/N) E Tr` over independent
/// square Gaussian matrices. `K` bounds the admissible letter indices.
pub fn gaussian_trace_poly(w: &AltMonomial, k_letters: u32) -> Result<Rational> {
    if w.max_index() > k_letters {
        return Err(Error::validation(format!(
            "monomial uses letter {} but K = {k_letters}",
            w.max_index()
        )));
    }
    Ok(gaussian_trace_monomial(w))
}

/// Linear extension of [`gaussian_trace_monomial`].
pub fn gaussian_trace(p: &PolyElement) -> Rational {
    p.terms()
        .map(|(m, c)| c * gaussian_trace_monomial(m))
        .fold(Rational::zero(), |a, b| a + b)
}
