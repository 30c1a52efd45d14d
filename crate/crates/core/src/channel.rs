//! Parametrized SU(n) channels and their generator coefficients.
//!
//! Every supported parametrization is a product of exponentials
//! `U(θ) = Π_k exp(i c_k(θ)·X)` with each `c_k` linear in its parameters.
//! The generators `H_j = i U† ∂_j U` are then
//!
//! ```text
//! H_j = Σ_k P_k† G_kj P_k,   G_kj = −∫₀¹ F_k^{−β} (∂_j c_k · X) F_k^{β} dβ,
//! ```
//!
//! with `P_k` the product of the factors to the right of `F_k`. The integral
//! is evaluated either in the eigenbasis of the exponent (closed form) or by
//! Gauss–Legendre quadrature. The two routes are independent and are checked
//! against each other in the tests.
//!
//! Rows of [`GeneratorMatrix::hmat`] are the coefficient vectors `𝗁_j`, so the
//! metric is `g = 𝗛𝗛ᵀ` and the QFIM is `Q = 4𝗛C𝗛ᵀ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{gellmann_basis, GeneratorBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, exp_i_from_eigen, exp_i_hermitian, hermitian_eigen, phi, CMatrix, C64,
    DEFAULT_CONDITION_THRESHOLD, I,
};
use crate::quadrature::gauss_legendre_unit;

/// A map `θ ↦ U(θ) ∈ SU(n)`.
///
/// JSON form: `{"kind": "exponential", "n": 3}`,
/// `{"kind": "euler_su2", "n": 2}` or
/// `{"kind": "product_of_exponentials", "n": 2, "factors": [[0,0,1],[0,1,0]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parametrization {
    /// `U = exp(i θ·X)` on all `n² − 1` parameters.
    Exponential { n: usize },
    /// `U = e^{−iΦJz} e^{−iΘJy} e^{−iΨJz}` with parameters `(Φ, Θ, Ψ)`.
    EulerSu2 {
        #[serde(default = "two")]
        n: usize,
    },
    /// `U = Π_k exp(−i θ_k A_k·X)`, one parameter per axis `A_k`.
    ProductOfExponentials { n: usize, factors: Vec<Vec<f64>> },
}

fn two() -> usize {
    2
}

impl Parametrization {
    pub fn n(&self) -> usize {
        match self {
            Parametrization::Exponential { n }
            | Parametrization::EulerSu2 { n }
            | Parametrization::ProductOfExponentials { n, .. } => *n,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Parametrization::Exponential { n } => n * n - 1,
            Parametrization::EulerSu2 { .. } => 3,
            Parametrization::ProductOfExponentials { factors, .. } => factors.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        match self {
            Parametrization::EulerSu2 { n } if *n != 2 => Err(Error::InvalidParametrization(
                format!("euler_su2 is defined for n = 2, got n = {n}"),
            )),
            Parametrization::ProductOfExponentials { factors, .. } => {
                if factors.is_empty() {
                    return Err(Error::InvalidParametrization(
                        "product_of_exponentials needs at least one factor".into(),
                    ));
                }
                let d = n * n - 1;
                for (k, a) in factors.iter().enumerate() {
                    if a.len() != d {
                        return Err(Error::InvalidParametrization(format!(
                            "factor {k} has {} components, expected {d}",
                            a.len()
                        )));
                    }
                    if a.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidParametrization(format!(
                            "factor {k} has non-finite components"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn factors(&self, theta: &[f64]) -> Vec<Factor> {
        let d = self.n() * self.n() - 1;
        let axis_factor = |j: usize, axis: &[f64]| {
            let c: Vec<f64> = axis.iter().map(|a| -theta[j] * a).collect();
            let dc: Vec<f64> = axis.iter().map(|a| -a).collect();
            (c, vec![(j, dc)])
        };
        match self {
            Parametrization::Exponential { .. } => {
                let derivs = (0..d)
                    .map(|j| {
                        let mut e = vec![0.0; d];
                        e[j] = 1.0;
                        (j, e)
                    })
                    .collect();
                vec![(theta.to_vec(), derivs)]
            }
            Parametrization::EulerSu2 { .. } => {
                let jz = [0.0, 0.0, 1.0];
                let jy = [0.0, 1.0, 0.0];
                vec![
                    axis_factor(0, &jz),
                    axis_factor(1, &jy),
                    axis_factor(2, &jz),
                ]
            }
            Parametrization::ProductOfExponentials { factors, .. } => factors
                .iter()
                .enumerate()
                .map(|(j, a)| axis_factor(j, a))
                .collect(),
        }
    }
}

// (exponent coefficients c_k, [(parameter j, ∂c_k/∂θ_j)])
type Factor = (Vec<f64>, Vec<(usize, Vec<f64>)>);

/// How the generator integral `∫₀¹ F^{−β} Y F^{β} dβ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorIntegral {
    /// Eigenbasis formula with `φ(z) = (e^z − 1)/z`.
    ClosedForm,
    /// Gauss–Legendre rule with the given node count.
    Quadrature(usize),
}

/// Coefficient matrix `𝗛(θ)`; row `j` is `𝗁_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub hmat: DMatrix<f64>,
    pub theta: Vec<f64>,
    pub condition_number: f64,
}

impl GeneratorMatrix {
    fn new(hmat: DMatrix<f64>, theta: Vec<f64>) -> Self {
        let condition_number = if hmat.nrows() > hmat.ncols() {
            f64::INFINITY
        } else {
            condition_number(&hmat)
        };
        GeneratorMatrix {
            hmat,
            theta,
            condition_number,
        }
    }

    /// The matrix of a square `d × d` identity-coordinate system at the
    /// origin, `−𝟙`. Used when no parametrization is supplied.
    pub fn origin(d: usize) -> Self {
        Self::new(-DMatrix::identity(d, d), vec![0.0; d])
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.hmat.row(j).iter().cloned().collect()
    }

    pub fn param_count(&self) -> usize {
        self.hmat.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityReport {
    pub singular: bool,
    pub condition_number: f64,
}

/// A parametrization bound to the su(n) basis it acts through.
#[derive(Debug, Clone)]
pub struct Channel {
    param: Parametrization,
    basis: Arc<GeneratorBasis>,
}

impl Channel {
    pub fn new(param: Parametrization) -> Result<Self> {
        param.validate()?;
        let basis = Arc::new(gellmann_basis(param.n())?);
        Ok(Channel { param, basis })
    }

    pub fn with_basis(param: Parametrization, basis: Arc<GeneratorBasis>) -> Result<Self> {
        param.validate()?;
        if basis.n() != param.n() {
            return Err(Error::Shape {
                expected: format!("su({})", param.n()),
                got: format!("su({})", basis.n()),
            });
        }
        Ok(Channel { param, basis })
    }

    pub fn parametrization(&self) -> &Parametrization {
        &self.param
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn param_count(&self) -> usize {
        self.param.param_count()
    }

    fn check_arity(&self, theta: &[f64]) -> Result<()> {
        let expected = self.param.param_count();
        if theta.len() != expected {
            return Err(Error::Arity {
                expected,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// `U(θ)` in the fundamental representation.
    pub fn unitary_at(&self, theta: &[f64]) -> Result<CMatrix> {
        self.unitary_in(self.basis.generators(), theta)
    }

    /// `U(θ)` with the generators realized by `generators` (any representation).
    pub fn unitary_in(&self, generators: &[CMatrix], theta: &[f64]) -> Result<CMatrix> {
        self.check_arity(theta)?;
        let dim = generators[0].nrows();
        let mut u = CMatrix::identity(dim, dim);
        for (c, _) in self.param.factors(theta) {
            u *= exp_i_hermitian(&combine(generators, &c));
        }
        Ok(u)
    }

    /// Operators `H_j = i U† ∂_j U` realized by `generators`.
    pub fn generator_operators(
        &self,
        generators: &[CMatrix],
        theta: &[f64],
        integral: GeneratorIntegral,
    ) -> Result<Vec<CMatrix>> {
        self.check_arity(theta)?;
        let dim = generators[0].nrows();
        let factors = self.param.factors(theta);
        let exps: Vec<CMatrix> = factors
            .iter()
            .map(|(c, _)| exp_i_hermitian(&combine(generators, c)))
            .collect();
        // downstream[k] = F_{k+1} ⋯ F_last
        let mut downstream = vec![CMatrix::identity(dim, dim); factors.len()];
        for k in (0..factors.len().saturating_sub(1)).rev() {
            downstream[k] = &exps[k + 1] * &downstream[k + 1];
        }
        let mut out = vec![CMatrix::zeros(dim, dim); self.param.param_count()];
        for (k, (c, derivs)) in factors.iter().enumerate() {
            let exponent = combine(generators, c);
            let (values, vectors) = hermitian_eigen(&exponent);
            for (j, dc) in derivs {
                let y = combine(generators, dc);
                let g = match integral {
                    GeneratorIntegral::ClosedForm => {
                        conjugation_integral_closed(&values, &vectors, &y)
                    }
                    GeneratorIntegral::Quadrature(order) => {
                        conjugation_integral_quadrature(&exponent, &y, order)
                    }
                };
                let p = &downstream[k];
                out[*j] -= p.adjoint() * g * p;
            }
        }
        Ok(out)
    }

    fn generators_with(
        &self,
        theta: &[f64],
        integral: GeneratorIntegral,
    ) -> Result<GeneratorMatrix> {
        let ops = self.generator_operators(self.basis.generators(), theta, integral)?;
        let d = self.basis.dim();
        let mut hmat = DMatrix::zeros(ops.len(), d);
        for (j, h) in ops.iter().enumerate() {
            hmat.row_mut(j)
                .copy_from(&self.basis.project(h).transpose());
        }
        Ok(GeneratorMatrix::new(hmat, theta.to_vec()))
    }

    /// `𝗛(θ)` via the eigenbasis formula.
    pub fn generators_closed_form(&self, theta: &[f64]) -> Result<GeneratorMatrix> {
        self.generators_with(theta, GeneratorIntegral::ClosedForm)
    }

    /// `𝗛(θ)` via `order`-point Gauss–Legendre quadrature.
    pub fn generators_quadrature(&self, theta: &[f64], order: usize) -> Result<GeneratorMatrix> {
        if order < 2 {
            return Err(Error::InvalidConfig(format!(
                "quadrature order must be at least 2, got {order}"
            )));
        }
        self.generators_with(theta, GeneratorIntegral::Quadrature(order))
    }

    /// Cartan metric `g = 𝗛𝗛ᵀ`.
    pub fn metric_at(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.generators_closed_form(theta)?;
        Ok(metric_from(&h))
    }

    pub fn singularity_report(
        &self,
        theta: &[f64],
        cond_threshold: f64,
    ) -> Result<SingularityReport> {
        if cond_threshold.is_nan() || cond_threshold <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "condition threshold must exceed 1, got {cond_threshold}"
            )));
        }
        let h = self.generators_closed_form(theta)?;
        Ok(SingularityReport {
            singular: !(h.condition_number <= cond_threshold),
            condition_number: h.condition_number,
        })
    }

    pub fn default_singularity_report(&self, theta: &[f64]) -> Result<SingularityReport> {
        self.singularity_report(theta, DEFAULT_CONDITION_THRESHOLD)
    }
}

pub fn metric_from(h: &GeneratorMatrix) -> DMatrix<f64> {
    &h.hmat * h.hmat.transpose()
}

fn combine(generators: &[CMatrix], coeffs: &[f64]) -> CMatrix {
    let dim = generators[0].nrows();
    let mut m = CMatrix::zeros(dim, dim);
    for (x, &c) in generators.iter().zip(coeffs) {
        if c != 0.0 {
            m += x.scale(c);
        }
    }
    m
}

// ∫₀¹ F^{−β} Y F^{β} dβ with F = V e^{iΛ} V†: entries Ỹ_ab φ(i(λ_b − λ_a)).
fn conjugation_integral_closed(
    values: &nalgebra::DVector<f64>,
    vectors: &CMatrix,
    y: &CMatrix,
) -> CMatrix {
    let mut w = vectors.adjoint() * y * vectors;
    let n = values.len();
    for a in 0..n {
        for b in 0..n {
            w[(a, b)] *= phi(I * (values[b] - values[a]));
        }
    }
    vectors * w * vectors.adjoint()
}

fn conjugation_integral_quadrature(exponent: &CMatrix, y: &CMatrix, order: usize) -> CMatrix {
    let (nodes, weights) = gauss_legendre_unit(order);
    let (values, vectors) = hermitian_eigen(exponent);
    let mut acc = CMatrix::zeros(y.nrows(), y.ncols());
    for (beta, w) in nodes.iter().zip(&weights) {
        let f_beta = exp_i_from_eigen(&values, &vectors, *beta);
        acc += (f_beta.adjoint() * y * &f_beta) * C64::new(*w, 0.0);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euler() -> Channel {
        Channel::new(Parametrization::EulerSu2 { n: 2 }).unwrap()
    }

    fn euler_rows(phi_: f64, theta: f64, psi: f64) -> [[f64; 3]; 3] {
        let _ = phi_;
        [
            [
                -theta.sin() * psi.cos(),
                theta.sin() * psi.sin(),
                theta.cos(),
            ],
            [psi.sin(), psi.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ]
    }

    #[test]
    fn exponential_origin() {
        for n in 2..=4 {
            let ch = Channel::new(Parametrization::Exponential { n }).unwrap();
            let d = n * n - 1;
            let theta = vec![0.0; d];
            let u = ch.unitary_at(&theta).unwrap();
            assert!(max_abs(&(u - CMatrix::identity(n, n))) < 1e-15);
            let h = ch.generators_closed_form(&theta).unwrap();
            let dev = crate::linalg::max_abs_real(&(h.hmat.clone() + DMatrix::identity(d, d)));
            assert!(dev < 1e-14);
            let q = ch.generators_quadrature(&theta, 3).unwrap();
            assert!(crate::linalg::max_abs_real(&(q.hmat + DMatrix::identity(d, d))) < 1e-14);
            let g = ch.metric_at(&theta).unwrap();
            assert!(crate::linalg::max_abs_real(&(g - DMatrix::identity(d, d))) < 1e-14);
            assert!(!ch.default_singularity_report(&theta).unwrap().singular);
        }
    }

    #[test]
    fn euler_single_factor() {
        let ch = euler();
        let psi = 0.83;
        let u = ch.unitary_at(&[0.0, 0.0, psi]).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, -psi / 2.0)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, psi / 2.0)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn euler_generator_rows_and_metric() {
        let ch = euler();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            let h = ch.generators_closed_form(&t).unwrap();
            let rows = euler_rows(t[0], t[1], t[2]);
            for (j, row) in rows.iter().enumerate() {
                for (a, v) in row.iter().enumerate() {
                    assert!((h.hmat[(j, a)] - v).abs() < 1e-12);
                }
            }
            let g = ch.metric_at(&t).unwrap();
            let c = t[1].cos();
            let expected =
                DMatrix::from_row_slice(3, 3, &[1.0, 0.0, c, 0.0, 1.0, 0.0, c, 0.0, 1.0]);
            assert!(crate::linalg::max_abs_real(&(g.clone() - expected)) < 1e-12);
            // rows are 𝗁_j, so the pull-back identity reads 𝗛⁻¹ g 𝗛⁻ᵀ = 𝟙
            let hinv = h.hmat.clone().try_inverse().unwrap();
            let pulled = &hinv * g * hinv.transpose();
            assert!(crate::linalg::max_abs_real(&(pulled - DMatrix::identity(3, 3))) < 1e-10);
        }
    }

    #[test]
    fn euler_singular_at_zero_theta() {
        let ch = euler();
        let r = ch.default_singularity_report(&[0.4, 0.0, -1.0]).unwrap();
        assert!(r.singular);
        assert!(r.condition_number > 1e8);
        let r = ch
            .default_singularity_report(&[0.4, std::f64::consts::FRAC_PI_2, -1.0])
            .unwrap();
        assert!(!r.singular);
        assert!(r.condition_number < 10.0);
        assert!(ch.singularity_report(&[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn arity_and_validation() {
        let ch = euler();
        assert_eq!(
            ch.unitary_at(&[0.0, 1.0]).unwrap_err(),
            Error::Arity {
                expected: 3,
                got: 2
            }
        );
        assert!(Channel::new(Parametrization::EulerSu2 { n: 3 }).is_err());
        assert!(Channel::new(Parametrization::ProductOfExponentials {
            n: 2,
            factors: vec![vec![1.0, 0.0]],
        })
        .is_err());
        assert!(Channel::new(Parametrization::Exponential { n: 1 }).is_err());
        assert!(ch.generators_quadrature(&[0.0; 3], 1).is_err());
    }

    #[test]
    fn euler_equals_product_form() {
        let e = euler();
        let p = Channel::new(Parametrization::ProductOfExponentials {
            n: 2,
            factors: vec![
                vec![0.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        })
        .unwrap();
        let t = [0.3, 1.1, -0.4];
        assert!(max_abs(&(e.unitary_at(&t).unwrap() - p.unitary_at(&t).unwrap())) < 1e-14);
        let b = e.basis();
        let manual = exp_i_hermitian(&b.generator(2).scale(-t[0]))
            * exp_i_hermitian(&b.generator(1).scale(-t[1]))
            * exp_i_hermitian(&b.generator(2).scale(-t[2]));
        assert!(max_abs(&(e.unitary_at(&t).unwrap() - manual)) < 1e-12);
    }

    #[test]
    fn quadrature_converges_with_order() {
        let ch = Channel::new(Parametrization::Exponential { n: 3 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let exact = ch.generators_closed_form(&t).unwrap().hmat;
        let errs: Vec<f64> = [2, 3, 4, 6, 8]
            .iter()
            .map(|&o| {
                crate::linalg::max_abs_real(
                    &(ch.generators_quadrature(&t, o).unwrap().hmat - &exact),
                )
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
        let e64 =
            crate::linalg::max_abs_real(&(ch.generators_quadrature(&t, 64).unwrap().hmat - &exact));
        assert!(e64 < 1e-12);
    }

    #[test]
    fn parametrization_json() {
        let p: Parametrization = serde_json::from_str(r#"{"kind":"euler_su2","n":2}"#).unwrap();
        assert_eq!(p, Parametrization::EulerSu2 { n: 2 });
        let p: Parametrization =
            serde_json::from_str(r#"{"kind":"product_of_exponentials","n":2,"factors":[[0,0,1]]}"#)
                .unwrap();
        assert_eq!(p.param_count(), 1);
        let s = serde_json::to_string(&Parametrization::Exponential { n: 3 }).unwrap();
        assert_eq!(s, r#"{"kind":"exponential","n":3}"#);
    }
}
