//! Small dense linear-algebra helpers shared by the other modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Complex matrices are
//! assumed Hermitian wherever an eigendecomposition is taken.

use faer::complex_native::c64;
use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Condition-number threshold above which a matrix is treated as singular.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e8;

// nalgebra's QR-based symmetric eigensolver can stall at ~1e-7 reconstruction
// error on near-degenerate spectra; faer's divide-and-conquer solver does not.

/// Eigendecomposition `A = V diag(λ) V†` of a Hermitian matrix, eigenvalues
/// ascending.
pub fn hermitian_eigen(a: &CMatrix) -> (DVector<f64>, CMatrix) {
    let n = a.nrows();
    let m = faer::Mat::<c64>::from_fn(n, n, |i, j| {
        let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
        c64::new(z.re, z.im)
    });
    let evd = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let values = DVector::from_fn(n, |i, _| s.read(i).re);
    let vectors = CMatrix::from_fn(n, n, |i, j| {
        let z = u.read(i, j);
        C64::new(z.re, z.im)
    });
    (values, vectors)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let evd = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    (
        DVector::from_fn(n, |i, _| s.read(i)),
        DMatrix::from_fn(n, n, |i, j| u.read(i, j)),
    )
}

/// `exp(i·t·A)` for Hermitian `A`, given its eigendecomposition.
pub fn exp_i_from_eigen(values: &DVector<f64>, vectors: &CMatrix, t: f64) -> CMatrix {
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&l| C64::from_polar(1.0, t * l)),
    );
    let mut scaled = vectors.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    scaled * vectors.adjoint()
}

/// `exp(iA)` for Hermitian `A`.
pub fn exp_i_hermitian(a: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    exp_i_from_eigen(&values, &vectors, 1.0)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entrywise modulus of `A - A†`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `φ(z) = (e^z − 1)/z`, with a six-term Taylor series near zero.
pub fn phi(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..=6 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Ratio of extreme singular values; `∞` when the smallest vanishes.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Spectral summary of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymSpectrum {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (values, vectors) = symmetric_eigen(a);
        SymSpectrum { values, vectors }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `λ_max / λ_min`, or `∞` when the matrix is not positive definite.
    pub fn condition(&self) -> f64 {
        let (lo, hi) = (self.min(), self.max());
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Number of eigenvalues above `threshold⁻¹ · λ_max`.
    pub fn rank(&self, threshold: f64) -> usize {
        let cutoff = self.max().abs() / threshold;
        self.values.iter().filter(|&&l| l > cutoff).count()
    }

    /// Moore–Penrose inverse keeping eigenvalues above the rank cutoff.
    pub fn pseudo_inverse(&self, threshold: f64) -> DMatrix<f64> {
        let cutoff = self.max().abs() / threshold;
        let n = self.values.len();
        let mut out = DMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            if l > cutoff {
                let v = self.vectors.column(k);
                out += (v * v.transpose()) / l;
            }
        }
        out
    }
}

/// Round to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_matches_direct_formula_across_branch() {
        for &r in &[1e-5, 5e-5, 9.9e-5, 1.01e-4, 1e-3] {
            let z = C64::new(0.0, r);
            let series = phi(z);
            let direct = (z.exp() - 1.0) / z;
            assert!((series - direct).norm() < 1e-11, "r={r}");
        }
        assert_eq!(phi(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn exp_i_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(-0.25, 0.0),
        ]));
        let u = exp_i_hermitian(&a);
        assert!((u[(0, 0)] - C64::from_polar(1.0, 0.5)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, -0.25)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn round_sig_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1234567890123456, 12), 0.123456789012);
        assert_eq!(round_sig(0.0, 12), 0.0);
        assert!(round_sig(f64::INFINITY, 12).is_infinite());
    }

    #[test]
    fn spectrum_rank_and_pinv() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 0.0]));
        let s = SymSpectrum::new(&a);
        assert_eq!(s.rank(DEFAULT_CONDITION_THRESHOLD), 2);
        assert!(s.condition().is_infinite());
        let p = s.pseudo_inverse(DEFAULT_CONDITION_THRESHOLD);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((p[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(p[(2, 2)].abs() < 1e-14);
    }
}
