//! Matrix models and the evaluation of observables on sampled matrices.
//!
//! A [`LetterSystem`] describes the blocks ("bases") and the letter matrices
//! between them. The polynomial model has two bases, `0` (size `N`) and `1`
//! (size `N'`), with every `X_i` mapping base 1 to base 0. In a graph model
//! the bases are the vertices and the letters are the edges.

use std::collections::HashMap;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::graph::{block_dims, GraphElement, GraphModel};
use crate::poly::PolyElement;
use crate::rmt::matrix::ZMat;
use crate::tl::{TLDiagram, TLElement};

/// One way to close an outer strand at a base.
#[derive(Clone, Debug, PartialEq)]
pub struct Arch {
    pub letter: usize,
    /// `X* M X` instead of `X M X*`.
    pub star_first: bool,
    pub inner_base: usize,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct LetterSystem {
    pub n: usize,
    pub dims: Vec<usize>,
    /// `(row base, column base)` of each letter.
    pub letter_bases: Vec<(usize, usize)>,
    pub arches: Vec<Vec<Arch>>,
    /// Estimator weights; the empty word has trace one.
    pub trace_weights: Vec<f64>,
    /// Factor in front of `Tr(V_base)` in the exponent of the density.
    pub potential_weights: Vec<f64>,
    /// `E|x|²` of the entries of each letter under the Gaussian part.
    pub variance: Vec<f64>,
    /// Numeric loop parameter.
    pub delta: f64,
    /// Bases where TL observables are rooted.
    pub root_bases: Vec<usize>,
}

impl LetterSystem {
    /// `K` square-or-rectangular letters of size `N × N'` with `E|a|² = 1/N`.
    pub fn poly(k: usize, n: usize, n_prime: usize) -> Result<Self> {
        if k == 0 || n == 0 || n_prime == 0 {
            return Err(Error::validation("K, N and N' must be positive"));
        }
        Ok(Self {
            n,
            dims: vec![n, n_prime],
            letter_bases: vec![(0, 1); k],
            arches: vec![
                (0..k)
                    .map(|i| Arch {
                        letter: i,
                        star_first: false,
                        inner_base: 1,
                        weight: 1.0,
                    })
                    .collect(),
                (0..k)
                    .map(|i| Arch {
                        letter: i,
                        star_first: true,
                        inner_base: 0,
                        weight: 1.0,
                    })
                    .collect(),
            ],
            trace_weights: vec![1.0 / n as f64, 0.0],
            potential_weights: vec![n as f64, 0.0],
            variance: vec![1.0 / n as f64; k],
            delta: k as f64 * n_prime as f64 / n as f64,
            root_bases: vec![0],
        })
    }

    /// Edge matrices of size `[Nμ(v)] × [Nμ(w)]` with Gaussian part
    /// `exp(-N Σ_v μ(v) Tr ∪_v)`.
    pub fn graph(model: &GraphModel, n: usize) -> Result<Self> {
        let g = &model.graph;
        let mu = &model.pf.mu;
        let dims = block_dims(g, &model.pf, n)?;
        let nf = n as f64;
        let arches = (0..g.n_vertices())
            .map(|v| {
                g.incident(v)
                    .iter()
                    .map(|&e| {
                        let w = g.other_end(e, v);
                        Arch {
                            letter: e,
                            star_first: !g.is_even(v),
                            inner_base: w,
                            weight: (mu[v] / mu[w]).sqrt(),
                        }
                    })
                    .collect()
            })
            .collect();
        let norm: f64 = g.even_vertices().map(|v| mu[v] * dims[v] as f64 / nf).sum();
        let trace_weights = (0..g.n_vertices())
            .map(|v| if g.is_even(v) { mu[v] / nf / norm } else { 0.0 })
            .collect();
        let potential_weights = (0..g.n_vertices())
            .map(|v| if g.is_even(v) { nf * mu[v] } else { 0.0 })
            .collect();
        let variance = g
            .edges()
            .iter()
            .map(|&(v, w)| 1.0 / (nf * mu[v].powf(1.5) * mu[w].powf(-0.5)))
            .collect();
        Ok(Self {
            n,
            dims,
            letter_bases: g.edges().to_vec(),
            arches,
            trace_weights,
            potential_weights,
            variance,
            delta: model.pf.delta,
            root_bases: g.even_vertices().collect(),
        })
    }

    pub fn n_letters(&self) -> usize {
        self.letter_bases.len()
    }

    /// Independent Gaussian letters from the quadratic part of the density.
    pub fn sample_gaussian<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<ZMat> {
        self.letter_bases
            .iter()
            .zip(&self.variance)
            .map(|(&(r, c), &var)| ZMat::gaussian(self.dims[r], self.dims[c], var, rng))
            .collect()
    }

    /// Letter `l` as read in a word: `X_l` or `X_l*`.
    fn letter_shape(&self, l: usize, star: bool) -> (usize, usize) {
        let (r, c) = self.letter_bases[l];
        if star {
            (c, r)
        } else {
            (r, c)
        }
    }
}

/// `coef · Tr(Π letters)` at `base`; letters are `(letter index, starred)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    pub coef: f64,
    pub base: usize,
    pub letters: Vec<(usize, bool)>,
}

impl Word {
    /// Checks that the dimensions chain and close at `base`.
    pub fn validate(&self, sys: &LetterSystem) -> Result<()> {
        let mut at = self.base;
        for &(l, star) in &self.letters {
            if l >= sys.n_letters() {
                return Err(Error::validation(format!("letter {l} out of range")));
            }
            let (r, c) = sys.letter_shape(l, star);
            if r != at {
                return Err(Error::validation(format!(
                    "letter {l} does not start at base {at}"
                )));
            }
            at = c;
        }
        if at != self.base {
            return Err(Error::validation("word does not close at its base"));
        }
        Ok(())
    }
}

pub fn poly_words(p: &PolyElement) -> Vec<Word> {
    p.terms()
        .map(|(m, c)| Word {
            coef: crate::scalar::rational_to_f64(c),
            base: 0,
            letters: m
                .letters()
                .iter()
                .map(|l| (l.index as usize - 1, l.star))
                .collect(),
        })
        .collect()
}

pub fn graph_words(e: &GraphElement) -> Vec<Word> {
    e.terms()
        .map(|(l, &c)| Word {
            coef: c,
            base: l.base,
            letters: l.steps.clone(),
        })
        .collect()
}

fn letter_matrix<'a>(mats: &'a [ZMat], l: usize, star: bool, scratch: &'a mut Option<ZMat>) -> &'a ZMat {
    if star {
        *scratch = Some(mats[l].adjoint());
        scratch.as_ref().expect("just set")
    } else {
        &mats[l]
    }
}

/// The product of the letters of `w` (identity for the empty word).
pub fn word_matrix(sys: &LetterSystem, mats: &[ZMat], letters: &[(usize, bool)], base: usize) -> ZMat {
    let mut acc: Option<ZMat> = None;
    for &(l, star) in letters {
        let mut scratch = None;
        let m = letter_matrix(mats, l, star, &mut scratch);
        acc = Some(match acc {
            None => m.clone(),
            Some(a) => {
                if star {
                    a.mul_adjoint(&mats[l])
                } else {
                    a.mul(m)
                }
            }
        });
    }
    acc.unwrap_or_else(|| ZMat::identity(sys.dims[base]))
}

/// `Tr` of a word; the last product is folded into the trace.
pub fn word_trace(sys: &LetterSystem, mats: &[ZMat], w: &Word) -> Complex<f64> {
    match w.letters.len() {
        0 => Complex::new(sys.dims[w.base] as f64, 0.0),
        1 => {
            let (l, star) = w.letters[0];
            let t = mats[l].trace();
            if star {
                t.conj()
            } else {
                t
            }
        }
        n => {
            let head = word_matrix(sys, mats, &w.letters[..n - 1], w.base);
            let (l, star) = w.letters[n - 1];
            if star {
                // Tr(H X*) = conj(Tr(X H*)) = Σ h_ij conj(x_ij)
                let x = &mats[l];
                Complex::new(
                    head.re.dot(&x.re) + head.im.dot(&x.im),
                    head.im.dot(&x.re) - head.re.dot(&x.im),
                )
            } else {
                head.trace_mul(&mats[l])
            }
        }
    }
}

/// `Σ coef · Re Tr(word)`.
pub fn words_value(sys: &LetterSystem, mats: &[ZMat], words: &[Word]) -> f64 {
    words.iter().map(|w| w.coef * word_trace(sys, mats, w).re).sum()
}

/// Memoized evaluation of TL diagrams by recursive capping: an outer strand
/// `(a, b)` at base `v` becomes `Σ weight · X M_inner X*` (or `X* M X`).
pub struct TlEvaluator<'a> {
    sys: &'a LetterSystem,
    mats: &'a [ZMat],
    memo: HashMap<(Vec<usize>, usize), ZMat>,
}

impl<'a> TlEvaluator<'a> {
    pub fn new(sys: &'a LetterSystem, mats: &'a [ZMat]) -> Self {
        Self {
            sys,
            mats,
            memo: HashMap::new(),
        }
    }

    /// Matrix of a diagram rooted at `base`.
    pub fn diagram(&mut self, d: &TLDiagram, base: usize) -> ZMat {
        self.segment(d.partners(), base)
    }

    fn segment(&mut self, partners: &[usize], base: usize) -> ZMat {
        let key = (partners.to_vec(), base);
        if let Some(m) = self.memo.get(&key) {
            return m.clone();
        }
        let mut acc: Option<ZMat> = None;
        let mut a = 0;
        while a < partners.len() {
            let b = partners[a];
            let inner: Vec<usize> = partners[a + 1..b].iter().map(|&q| q - a - 1).collect();
            let arch = self.arch(&inner, base);
            acc = Some(match acc {
                None => arch,
                Some(m) => m.mul(&arch),
            });
            a = b + 1;
        }
        let out = acc.unwrap_or_else(|| ZMat::identity(self.sys.dims[base]));
        self.memo.insert(key, out.clone());
        out
    }

    fn arch(&mut self, inner: &[usize], base: usize) -> ZMat {
        let dim = self.sys.dims[base];
        let mut out = ZMat::zeros(dim, dim);
        for k in 0..self.sys.arches[base].len() {
            let arch = self.sys.arches[base][k].clone();
            let x = &self.mats[arch.letter];
            let term = if inner.is_empty() {
                if arch.star_first {
                    x.adjoint_mul(x)
                } else {
                    x.mul_adjoint(x)
                }
            } else {
                let m = self.segment(inner, arch.inner_base);
                if arch.star_first {
                    x.adjoint_mul(&m).mul(x)
                } else {
                    x.mul(&m).mul_adjoint(x)
                }
            };
            out.add_scaled(arch.weight, &term);
        }
        out
    }

    /// `Σ_base w_base Re Tr` of a TL element, with `δ` at its numeric value.
    pub fn trace(&mut self, x: &TLElement) -> f64 {
        let mut total = 0.0;
        for (d, c) in x.terms() {
            let coef = c.eval(self.sys.delta);
            for bi in 0..self.sys.root_bases.len() {
                let b = self.sys.root_bases[bi];
                let w = self.sys.trace_weights[b];
                if w != 0.0 {
                    total += coef * w * self.diagram(d, b).trace().re;
                }
            }
        }
        total
    }
}

/// An observable evaluated by the estimators.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Tl(TLElement),
    Poly(PolyElement),
    Graph(GraphElement),
}

impl Observable {
    pub fn value(&self, sys: &LetterSystem, mats: &[ZMat]) -> Result<f64> {
        match self {
            Observable::Tl(x) => Ok(TlEvaluator::new(sys, mats).trace(x)),
            Observable::Poly(p) => {
                if sys.dims.len() != 2 {
                    return Err(Error::validation("polynomial observables need a polynomial model"));
                }
                if p.max_index() as usize > sys.n_letters() {
                    return Err(Error::validation(format!(
                        "observable uses letter {} but the model has {}",
                        p.max_index(),
                        sys.n_letters()
                    )));
                }
                Ok(sys.trace_weights[0] * words_value(sys, mats, &poly_words(p)))
            }
            Observable::Graph(e) => {
                let words = graph_words(e);
                let mut total = 0.0;
                for w in &words {
                    w.validate(sys)?;
                    total += sys.trace_weights[w.base] * w.coef * word_trace(sys, mats, w).re;
                }
                Ok(total)
            }
        }
    }

    /// The self-adjoint matrix of the observable at its first root base.
    pub fn matrix(&self, sys: &LetterSystem, mats: &[ZMat], base: usize) -> Result<ZMat> {
        let dim = sys.dims[base];
        let mut out = ZMat::zeros(dim, dim);
        match self {
            Observable::Tl(x) => {
                let mut ev = TlEvaluator::new(sys, mats);
                for (d, c) in x.terms() {
                    out.add_scaled(c.eval(sys.delta), &ev.diagram(d, base));
                }
            }
            Observable::Poly(p) => {
                for w in poly_words(p) {
                    out.add_scaled(w.coef, &word_matrix(sys, mats, &w.letters, 0));
                }
            }
            Observable::Graph(e) => {
                for w in graph_words(e).into_iter().filter(|w| w.base == base) {
                    out.add_scaled(w.coef, &word_matrix(sys, mats, &w.letters, base));
                }
            }
        }
        Ok(out)
    }
}

/// Symbolic cyclic derivatives of `Σ coef Tr(word)` in letter `l`: the words
/// `D_l` (rest after each `X_l`) and `D*_l` (rest after each `X_l*`), so that
/// `d/dt Tr V(X_l + tE) = Tr(E D_l) + Tr(E* D*_l)`.
pub fn cyclic_derivative(words: &[Word], l: usize) -> (Vec<Word>, Vec<Word>) {
    let mut d = Vec::new();
    let mut d_star = Vec::new();
    for w in words {
        let n = w.letters.len();
        for (p, &(letter, star)) in w.letters.iter().enumerate() {
            if letter != l {
                continue;
            }
            let rest: Vec<(usize, bool)> = (1..n).map(|t| w.letters[(p + t) % n]).collect();
            let out = Word {
                coef: w.coef,
                base: w.base,
                letters: rest,
            };
            if star {
                d_star.push(out);
            } else {
                d.push(out);
            }
        }
    }
    (d, d_star)
}

/// A potential `Σ coef Re Tr(word)` with its cyclic derivatives precomputed.
#[derive(Clone, Debug)]
pub struct Potential {
    pub words: Vec<Word>,
    derivatives: Vec<(Vec<Word>, Vec<Word>)>,
}

impl Potential {
    pub fn new(sys: &LetterSystem, words: Vec<Word>) -> Result<Self> {
        for w in &words {
            w.validate(sys)?;
        }
        let derivatives = (0..sys.n_letters()).map(|l| cyclic_derivative(&words, l)).collect();
        Ok(Self { words, derivatives })
    }

    pub fn value(&self, sys: &LetterSystem, mats: &[ZMat]) -> f64 {
        words_value(sys, mats, &self.words)
    }

    /// Gradient of the real-valued potential with respect to the real and
    /// imaginary parts of each letter, packed as `re + i·im`:
    /// `G_l = Σ (D_l)* + D*_l`.
    pub fn gradient(&self, sys: &LetterSystem, mats: &[ZMat]) -> Vec<ZMat> {
        self.derivatives
            .iter()
            .enumerate()
            .map(|(l, (d, d_star))| {
                let (r, c) = sys.letter_bases[l];
                let (rows, cols) = (sys.dims[r], sys.dims[c]);
                let mut g = ZMat::zeros(rows, cols);
                for w in d {
                    // the rest word runs from the column base back to the row base
                    let m = word_matrix(sys, mats, &w.letters, c);
                    g.add_scaled(w.coef, &m.adjoint());
                }
                for w in d_star {
                    let m = word_matrix(sys, mats, &w.letters, r);
                    g.add_scaled(w.coef, &m);
                }
                g
            })
            .collect()
    }
}
