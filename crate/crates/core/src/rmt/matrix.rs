//! Complex matrices stored as separate real and imaginary parts, so that
//! products run on the real GEMM kernels.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug, PartialEq)]
pub struct ZMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl ZMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            re: DMatrix::zeros(rows, cols),
            im: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            re: DMatrix::identity(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    pub fn from_complex(m: &DMatrix<Complex<f64>>) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    pub fn to_complex(&self) -> DMatrix<Complex<f64>> {
        self.re.zip_map(&self.im, Complex::new)
    }

    /// Independent entries with `E|a|² = variance`.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> Self {
        let s = (variance / 2.0).sqrt();
        let mut draw = || s * rng.sample::<f64, _>(StandardNormal);
        let re = DMatrix::from_fn(rows, cols, |_, _| draw());
        let im = DMatrix::from_fn(rows, cols, |_, _| draw());
        Self { re, im }
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn mul(&self, o: &ZMat) -> ZMat {
        let mut re = &self.re * &o.re;
        re.gemm(-1.0, &self.im, &o.im, 1.0);
        let mut im = &self.re * &o.im;
        im.gemm(1.0, &self.im, &o.re, 1.0);
        ZMat { re, im }
    }

    /// `self · o*`.
    pub fn mul_adjoint(&self, o: &ZMat) -> ZMat {
        let (ort, oit) = (o.re.transpose(), o.im.transpose());
        let mut re = &self.re * &ort;
        re.gemm(1.0, &self.im, &oit, 1.0);
        let mut im = &self.im * &ort;
        im.gemm(-1.0, &self.re, &oit, 1.0);
        ZMat { re, im }
    }

    /// `self* · o`.
    pub fn adjoint_mul(&self, o: &ZMat) -> ZMat {
        let (srt, sit) = (self.re.transpose(), self.im.transpose());
        let mut re = &srt * &o.re;
        re.gemm(1.0, &sit, &o.im, 1.0);
        let mut im = &srt * &o.im;
        im.gemm(-1.0, &sit, &o.re, 1.0);
        ZMat { re, im }
    }

    pub fn adjoint(&self) -> ZMat {
        ZMat {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    pub fn trace(&self) -> Complex<f64> {
        Complex::new(self.re.trace(), self.im.trace())
    }

    /// `Tr(self · o)` without forming the product.
    pub fn trace_mul(&self, o: &ZMat) -> Complex<f64> {
        // Σ_ij a_ij b_ji
        let re = self.re.dot(&o.re.transpose()) - self.im.dot(&o.im.transpose());
        let im = self.re.dot(&o.im.transpose()) + self.im.dot(&o.re.transpose());
        Complex::new(re, im)
    }

    pub fn add_scaled(&mut self, c: f64, o: &ZMat) {
        self.re.zip_apply(&o.re, |a, b| *a += c * b);
        self.im.zip_apply(&o.im, |a, b| *a += c * b);
    }

    pub fn scale(&self, c: f64) -> ZMat {
        ZMat {
            re: &self.re * c,
            im: &self.im * c,
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.re.norm_squared() + self.im.norm_squared()
    }

    /// Largest deviation from self-adjointness.
    pub fn hermitian_defect(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        (&self.re - self.re.transpose())
            .amax()
            .max((&self.im + self.im.transpose()).amax())
    }

    /// Eigenvalues of a self-adjoint matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.to_complex().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Whether the operator norm is at most `r`. A row-sum bound on `A*A`
    /// settles most cases without an eigensolve.
    pub fn op_norm_at_most(&self, r: f64) -> bool {
        let gram = if self.nrows() >= self.ncols() {
            self.adjoint_mul(self)
        } else {
            self.mul_adjoint(self)
        };
        let n = gram.nrows();
        let row_bound = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| gram.re[(i, j)].hypot(gram.im[(i, j)]))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if row_bound <= r * r {
            return true;
        }
        let top = gram.hermitian_eigenvalues().last().copied().unwrap_or(0.0);
        top <= r * r
    }

    pub fn op_norm(&self) -> f64 {
        let gram = self.adjoint_mul(self);
        gram.hermitian_eigenvalues().last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ZMat, b: &DMatrix<Complex<f64>>) -> bool {
        (a.to_complex() - b).iter().all(|z| z.norm() < 1e-10)
    }

    #[test]
    fn products_match_complex_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ZMat::gaussian(5, 7, 1.0, &mut rng);
        let b = ZMat::gaussian(7, 4, 1.0, &mut rng);
        let c = ZMat::gaussian(6, 7, 1.0, &mut rng);
        let (ac, bc, cc) = (a.to_complex(), b.to_complex(), c.to_complex());
        assert!(close(&a.mul(&b), &(&ac * &bc)));
        assert!(close(&a.mul_adjoint(&c), &(&ac * cc.adjoint())));
        assert!(close(&a.adjoint_mul(&a), &(ac.adjoint() * &ac)));
        assert!(close(&a.adjoint(), &ac.adjoint()));
        let d = ZMat::gaussian(7, 5, 1.0, &mut rng);
        let t = a.trace_mul(&d);
        let full = (&ac * d.to_complex()).trace();
        assert!((t - full).norm() < 1e-10);
    }

    #[test]
    fn norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = ZMat::gaussian(6, 4, 1.0, &mut rng);
        let svd = a.to_complex().singular_values();
        let top = svd.max();
        assert!((a.op_norm() - top).abs() < 1e-10);
        assert!(a.op_norm_at_most(top + 1e-9));
        assert!(!a.op_norm_at_most(top - 1e-6));
        let h = a.mul_adjoint(&a);
        assert!(h.hermitian_defect() < 1e-12);
    }
}
