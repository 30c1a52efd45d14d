//! The Lie algebra su(n) in its fundamental representation.
//!
//! Generators are the generalized Gell-Mann matrices scaled by ½, so that the
//! inner product `⟨X, Y⟩ = 2·Tr(X†Y)` makes them orthonormal and the su(2)
//! generators coincide with the spin-½ operators `σ/2`.
//!
//! Basis order is frozen, since coefficient vectors depend on it:
//!
//! 1. symmetric off-diagonal pairs `(j, k)`, `j < k`, row-major;
//! 2. antisymmetric off-diagonal pairs in the same order;
//! 3. diagonal generators `l = 1, …, n−1`.
//!
//! For n = 2 this is `(σx, σy, σz)/2`. For n = 3 it is *not* the textbook
//! Gell-Mann order: `λ1, λ4, λ6, λ2, λ5, λ7, λ3, λ8` (all halved).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{commutator, hermitian_deviation, trace, CMatrix, C64, I};

/// Scale of the invariant inner product `⟨X, Y⟩ = SCALE·Tr(X†Y)`.
pub const INNER_PRODUCT_SCALE: f64 = 2.0;

/// Tolerance used when validating algebra elements.
pub const ELEMENT_TOLERANCE: f64 = 1e-10;

/// Ordered orthonormal basis of su(n).
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    n: usize,
    generators: Vec<CMatrix>,
}

/// Which family of Gell-Mann matrix a basis index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Symmetric { row: usize, col: usize },
    Antisymmetric { row: usize, col: usize },
    Diagonal { level: usize },
}

impl GeneratorBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of generators, `n² − 1`.
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn generator(&self, a: usize) -> &CMatrix {
        &self.generators[a]
    }

    /// Family and matrix position of generator `a` in the frozen order.
    pub fn kind(&self, a: usize) -> GeneratorKind {
        let pairs = self.n * (self.n - 1) / 2;
        if a < pairs {
            let (row, col) = pair_at(self.n, a);
            GeneratorKind::Symmetric { row, col }
        } else if a < 2 * pairs {
            let (row, col) = pair_at(self.n, a - pairs);
            GeneratorKind::Antisymmetric { row, col }
        } else {
            GeneratorKind::Diagonal {
                level: a - 2 * pairs + 1,
            }
        }
    }

    /// `Σ_a v_a X_a`.
    pub fn combine(&self, coeffs: &[f64]) -> CMatrix {
        assert_eq!(coeffs.len(), self.dim(), "coefficient vector length");
        let mut out = CMatrix::zeros(self.n, self.n);
        for (c, x) in coeffs.iter().zip(&self.generators) {
            if *c != 0.0 {
                out += x.scale(*c);
            }
        }
        out
    }

    /// Coefficients `𝗁_a = 2·Tr(X_a H)` of a Hermitian traceless matrix.
    pub fn expand(&self, h: &CMatrix) -> Result<DVector<f64>> {
        self.expand_with_tolerance(h, ELEMENT_TOLERANCE)
    }

    pub fn expand_with_tolerance(&self, h: &CMatrix, tol: f64) -> Result<DVector<f64>> {
        if h.nrows() != self.n || h.ncols() != self.n {
            return Err(Error::Shape {
                expected: format!("{0}x{0}", self.n),
                got: format!("{}x{}", h.nrows(), h.ncols()),
            });
        }
        let hermitian_dev = hermitian_deviation(h);
        let trace_dev = trace(h).norm();
        if hermitian_dev > tol || trace_dev > tol {
            return Err(Error::InvalidElement {
                hermitian_dev,
                trace_dev,
            });
        }
        Ok(self.project(h))
    }

    /// Real parts of `2·Tr(X_a M)` without validation; the orthogonal
    /// projection of the Hermitian part of `M` onto su(n).
    pub fn project(&self, m: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.generators
                .iter()
                .map(|x| INNER_PRODUCT_SCALE * frobenius_pair(x, m).re),
        )
    }

    /// Gram matrix of the inner product over the basis (the identity).
    pub fn gram(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        nalgebra::DMatrix::from_fn(d, d, |a, b| {
            inner_product(&self.generators[a], &self.generators[b]).re
        })
    }
}

/// `⟨X, Y⟩ = 2·Tr(X†Y)`.
pub fn inner_product(x: &CMatrix, y: &CMatrix) -> C64 {
    (x.adjoint() * y).trace() * INNER_PRODUCT_SCALE
}

// Tr(X M) for Hermitian X without forming the product.
fn frobenius_pair(x: &CMatrix, m: &CMatrix) -> C64 {
    let n = x.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += x[(i, j)] * m[(j, i)];
        }
    }
    s
}

fn pair_at(n: usize, mut idx: usize) -> (usize, usize) {
    for row in 0..n {
        let len = n - row - 1;
        if idx < len {
            return (row, row + 1 + idx);
        }
        idx -= len;
    }
    unreachable!("pair index out of range")
}

/// Generalized Gell-Mann basis of su(n), scaled by ½.
pub fn gellmann_basis(n: usize) -> Result<GeneratorBasis> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let half = C64::new(0.5, 0.0);
    let mut generators = Vec::with_capacity(n * n - 1);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| ((j + 1)..n).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(n, n);
        m[(j, k)] = half;
        m[(k, j)] = half;
        generators.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(n, n);
        m[(j, k)] = -I * 0.5;
        m[(k, j)] = I * 0.5;
        generators.push(m);
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * 0.5;
        let mut m = CMatrix::zeros(n, n);
        for i in 0..l {
            m[(i, i)] = C64::new(norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        generators.push(m);
    }
    Ok(GeneratorBasis { n, generators })
}

/// Real structure constants `[X_j, X_k] = i Σ_l f_jkl X_l`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        self.data[(j * self.dim + k) * self.dim + l]
    }

    /// `Σ_l f_jkl v_l`, the component of `[X_j, X_k]/i` along `v`.
    pub fn contract(&self, j: usize, k: usize, v: &[f64]) -> f64 {
        let base = (j * self.dim + k) * self.dim;
        self.data[base..base + self.dim]
            .iter()
            .zip(v)
            .map(|(f, x)| f * x)
            .sum()
    }
}

/// `f_jkl = −2i·Tr([X_j, X_k] X_l)`.
pub fn structure_constants(basis: &GeneratorBasis) -> StructureConstants {
    let d = basis.dim();
    let mut data = vec![0.0; d * d * d];
    for j in 0..d {
        for k in (j + 1)..d {
            let c = commutator(basis.generator(j), basis.generator(k));
            for l in 0..d {
                let v = -I * INNER_PRODUCT_SCALE * frobenius_pair(basis.generator(l), &c);
                data[(j * d + k) * d + l] = v.re;
                data[(k * d + j) * d + l] = -v.re;
            }
        }
    }
    StructureConstants { dim: d, data }
}
