//! Generator covariances, the quantum Fisher information matrix, and scalar
//! Cramér–Rao bounds.
//!
//! For a pure probe the QFIM of a unitary channel factorizes as
//! `Q = 4 𝗛 C_ψ(X) 𝗛ᵀ`, separating the parametrization (`𝗛`) from the state
//! (`C_ψ(X)`). Weighting with the metric `g = 𝗛𝗛ᵀ` gives the intrinsic bound
//! `¼ Tr[C_ψ⁻¹(X)]`. Mixed states use the SLD kernel in place of `C_ψ(X)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::channel::{metric_from, Channel, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{
    hermitian_deviation, hermitian_eigen, max_abs_real, round_sig, trace, CMatrix, CVector,
    SymSpectrum, C64, DEFAULT_CONDITION_THRESHOLD,
};
use crate::representation::Representation;

/// Tolerance on state normalization.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Eigenvalue pairs with `λ_a + λ_b` at or below this are dropped from the
/// mixed-state kernel.
pub const SUPPORT_EPSILON: f64 = 1e-12;
/// `‖⟨X⟩‖` below this counts as first-order unpolarized.
pub const FIRST_ORDER_TOLERANCE: f64 = 1e-10;
/// `‖C − (𝒞̃₂/d)𝟙‖_max` below this counts as second-order unpolarized.
pub const SECOND_ORDER_TOLERANCE: f64 = 1e-8;
/// Largest `|⟨[H_j, H_k]⟩|` accepted by the saturation condition.
pub const SATURATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum StateForm {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A probe state on the space of a [`Representation`].
#[derive(Debug, Clone)]
pub struct ProbeState {
    rep: Arc<Representation>,
    form: StateForm,
}

impl ProbeState {
    /// A unit-norm state vector.
    pub fn pure(rep: Arc<Representation>, psi: CVector) -> Result<Self> {
        check_len(&rep, psi.len())?;
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "state norm is {norm}, expected 1"
            )));
        }
        Ok(ProbeState {
            rep,
            form: StateForm::Pure(psi),
        })
    }

    /// Normalizes `psi` first.
    pub fn pure_normalized(rep: Arc<Representation>, psi: CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        Self::pure(rep, psi.unscale(norm))
    }

    /// A density matrix: Hermitian, unit trace, positive semidefinite.
    pub fn mixed(rep: Arc<Representation>, rho: CMatrix) -> Result<Self> {
        check_len(&rep, rho.nrows())?;
        check_len(&rep, rho.ncols())?;
        let herm = hermitian_deviation(&rho);
        if herm > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = trace(&rho);
        if (tr - C64::new(1.0, 0.0)).norm() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "density matrix has trace {tr}"
            )));
        }
        let (values, _) = hermitian_eigen(&rho);
        let min = values.min();
        if min < -1e-10 {
            return Err(Error::InvalidState(format!(
                "density matrix is not positive semidefinite (eigenvalue {min:.3e})"
            )));
        }
        Ok(ProbeState {
            rep,
            form: StateForm::Mixed(rho),
        })
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn shared_rep(&self) -> Arc<Representation> {
        Arc::clone(&self.rep)
    }

    pub fn form(&self) -> &StateForm {
        &self.form
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.form, StateForm::Pure(_))
    }

    pub fn vector(&self) -> Option<&CVector> {
        match &self.form {
            StateForm::Pure(v) => Some(v),
            StateForm::Mixed(_) => None,
        }
    }

    /// `|ψ⟩⟨ψ|` for pure states, the matrix itself otherwise.
    pub fn density_matrix(&self) -> CMatrix {
        match &self.form {
            StateForm::Pure(v) => v * v.adjoint(),
            StateForm::Mixed(m) => m.clone(),
        }
    }

    /// The same state as a density matrix.
    pub fn to_mixed(&self) -> ProbeState {
        ProbeState {
            rep: Arc::clone(&self.rep),
            form: StateForm::Mixed(self.density_matrix()),
        }
    }

    /// `V|ψ⟩` or `VϱV†`.
    pub fn transformed(&self, v: &CMatrix) -> ProbeState {
        let form = match &self.form {
            StateForm::Pure(psi) => StateForm::Pure(v * psi),
            StateForm::Mixed(rho) => StateForm::Mixed(v * rho * v.adjoint()),
        };
        ProbeState {
            rep: Arc::clone(&self.rep),
            form,
        }
    }
}

fn check_len(rep: &Representation, len: usize) -> Result<()> {
    if len != rep.space_dim() {
        return Err(Error::Shape {
            expected: format!("dimension {}", rep.space_dim()),
            got: format!("dimension {len}"),
        });
    }
    Ok(())
}

/// Generator means `⟨X_a⟩` and a `d × d` covariance-type matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

fn pure_moments(rep: &Representation, psi: &CVector) -> Moments {
    let vs = rep.apply_all(psi);
    let d = vs.len();
    let mean = DVector::from_iterator(d, vs.iter().map(|v| psi.dotc(v).re));
    let mut cov = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let c = vs[j].dotc(&vs[k]).re - mean[j] * mean[k];
            cov[(j, k)] = c;
            cov[(k, j)] = c;
        }
    }
    Moments {
        mean,
        covariance: cov,
    }
}

/// `[C]_jk = ½⟨X_jX_k + X_kX_j⟩ − ⟨X_j⟩⟨X_k⟩` for a pure state.
pub fn covariance_pure(state: &ProbeState) -> Result<Moments> {
    match &state.form {
        StateForm::Pure(psi) => Ok(pure_moments(&state.rep, psi)),
        StateForm::Mixed(_) => Err(Error::InvalidState(
            "covariance_pure needs a pure state".into(),
        )),
    }
}

/// Mixed-state replacement of the covariance:
/// `[C]_jk = ½ Σ_ab (λ_a − λ_b)²/(λ_a + λ_b) Re(⟨a|X_j|b⟩⟨b|X_k|a⟩)`.
pub fn covariance_mixed(state: &ProbeState) -> Result<Moments> {
    let rho = state.density_matrix();
    let rep = &state.rep;
    let (lambda, vecs) = hermitian_eigen(&rho);
    if lambda.min() < -1e-10 {
        return Err(Error::InvalidState(
            "density matrix is not positive semidefinite".into(),
        ));
    }
    let dim = lambda.len();
    let mut weights = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let s = lambda[a] + lambda[b];
            if s > SUPPORT_EPSILON {
                let diff = lambda[a] - lambda[b];
                weights[(a, b)] = diff * diff / s;
            }
        }
    }
    let xs = rep.dense_generators();
    let d = xs.len();
    let rotated: Vec<CMatrix> = xs.iter().map(|x| vecs.adjoint() * x * &vecs).collect();
    let mean = DVector::from_iterator(d, xs.iter().map(|x| (&rho * x).trace().re));
    let mut cov = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let mut s = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    let w = weights[(a, b)];
                    if w != 0.0 {
                        s += w * (rotated[j][(a, b)] * rotated[k][(a, b)].conj()).re;
                    }
                }
            }
            cov[(j, k)] = 0.5 * s;
            cov[(k, j)] = 0.5 * s;
        }
    }
    Ok(Moments {
        mean,
        covariance: cov,
    })
}

/// Symmetrized second moments `½Tr(ϱ{X_j, X_k}) − ⟨X_j⟩⟨X_k⟩` for any state.
pub fn moment_covariance(state: &ProbeState) -> Moments {
    match &state.form {
        StateForm::Pure(psi) => pure_moments(&state.rep, psi),
        StateForm::Mixed(rho) => {
            let xs = state.rep.dense_generators();
            let d = xs.len();
            let rx: Vec<CMatrix> = xs.iter().map(|x| rho * x).collect();
            let mean = DVector::from_iterator(d, rx.iter().map(|m| m.trace().re));
            let mut cov = DMatrix::zeros(d, d);
            for j in 0..d {
                for k in j..d {
                    let c = (&rx[j] * &xs[k]).trace().re - mean[j] * mean[k];
                    cov[(j, k)] = c;
                    cov[(k, j)] = c;
                }
            }
            Moments {
                mean,
                covariance: cov,
            }
        }
    }
}

/// The covariance entering the QFIM: pure formula or the mixed kernel.
pub fn information_covariance(state: &ProbeState) -> Result<Moments> {
    match state.form {
        StateForm::Pure(_) => covariance_pure(state),
        StateForm::Mixed(_) => covariance_mixed(state),
    }
}

/// `Q = 4 𝗛 C 𝗛ᵀ`.
pub fn qfim(h: &GeneratorMatrix, covariance: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h.hmat.ncols() != covariance.nrows() || covariance.nrows() != covariance.ncols() {
        return Err(Error::Shape {
            expected: format!("{0}x{0} covariance", h.hmat.ncols()),
            got: format!("{}x{}", covariance.nrows(), covariance.ncols()),
        });
    }
    let q = &h.hmat * covariance * h.hmat.transpose() * 4.0;
    Ok((&q + q.transpose()) * 0.5)
}

/// How singular information matrices are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseMode {
    /// Singular matrices are errors.
    #[default]
    Strict,
    /// Use the Moore–Penrose inverse; reports are flagged.
    PseudoInverse,
}

fn check_spd_weight(w: &DMatrix<f64>) -> Result<()> {
    if !w.is_square() || max_abs_real(&(w - w.transpose())) > 1e-10 * (1.0 + max_abs_real(w)) {
        return Err(Error::InvalidWeight);
    }
    if SymSpectrum::new(w).min() <= 0.0 {
        return Err(Error::InvalidWeight);
    }
    Ok(())
}

/// `Tr[W Q⁻¹]` by Cholesky solves.
pub fn weighted_bound(w: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    weighted_bound_with(w, q, InverseMode::Strict)
}

pub fn weighted_bound_with(w: &DMatrix<f64>, q: &DMatrix<f64>, mode: InverseMode) -> Result<f64> {
    check_spd_weight(w)?;
    if w.shape() != q.shape() {
        return Err(Error::Shape {
            expected: format!("{}x{}", q.nrows(), q.ncols()),
            got: format!("{}x{}", w.nrows(), w.ncols()),
        });
    }
    let spec = SymSpectrum::new(q);
    let condition = spec.condition();
    if !(condition <= DEFAULT_CONDITION_THRESHOLD) {
        return match mode {
            InverseMode::Strict => Err(Error::SingularInformation {
                rank: spec.rank(DEFAULT_CONDITION_THRESHOLD),
                dim: q.nrows(),
                condition,
            }),
            InverseMode::PseudoInverse => {
                Ok((w * spec.pseudo_inverse(DEFAULT_CONDITION_THRESHOLD)).trace())
            }
        };
    }
    let chol = q.clone().cholesky().ok_or(Error::SingularInformation {
        rank: spec.rank(DEFAULT_CONDITION_THRESHOLD),
        dim: q.nrows(),
        condition,
    })?;
    // Tr[W Q⁻¹] = Tr[Q⁻¹ W]
    Ok(chol.solve(w).trace())
}

/// Intrinsic bound `¼ Tr[C⁻¹]`.
pub fn intrinsic_bound(covariance: &DMatrix<f64>) -> Result<f64> {
    intrinsic_bound_with(covariance, InverseMode::Strict)
}

pub fn intrinsic_bound_with(covariance: &DMatrix<f64>, mode: InverseMode) -> Result<f64> {
    Ok(0.25 * trace_inverse_with(covariance, mode)?)
}

/// `Tr[C⁻¹]`, or an error carrying the numerical rank.
pub fn trace_inverse(covariance: &DMatrix<f64>) -> Result<f64> {
    trace_inverse_with(covariance, InverseMode::Strict)
}

fn trace_inverse_with(covariance: &DMatrix<f64>, mode: InverseMode) -> Result<f64> {
    let spec = SymSpectrum::new(covariance);
    let condition = spec.condition();
    let dim = covariance.nrows();
    if !(condition <= DEFAULT_CONDITION_THRESHOLD) {
        return match mode {
            InverseMode::Strict => Err(Error::NotAllEstimable {
                rank: spec.rank(DEFAULT_CONDITION_THRESHOLD),
                dim,
                condition,
            }),
            InverseMode::PseudoInverse => {
                Ok(spec.pseudo_inverse(DEFAULT_CONDITION_THRESHOLD).trace())
            }
        };
    }
    let chol = covariance
        .clone()
        .cholesky()
        .ok_or(Error::NotAllEstimable {
            rank: spec.rank(DEFAULT_CONDITION_THRESHOLD),
            dim,
            condition,
        })?;
    Ok(chol.solve(&DMatrix::identity(dim, dim)).trace())
}

/// Sufficient saturation condition `⟨[H_j, H_k]⟩ = 0` for all `j, k`, with
/// `H_j = Σ_a 𝗁_ja X_a` realized in the state's representation.
pub fn saturation_check(state: &ProbeState, h: &GeneratorMatrix) -> Result<bool> {
    Ok(max_commutator_expectation(state, h)? < SATURATION_TOLERANCE)
}

/// `max_jk |⟨ψ|[H_j, H_k]|ψ⟩|`.
pub fn max_commutator_expectation(state: &ProbeState, h: &GeneratorMatrix) -> Result<f64> {
    let psi = state
        .vector()
        .ok_or_else(|| Error::InvalidState("saturation check needs a pure state".into()))?;
    let rep = &state.rep;
    if h.hmat.ncols() != rep.algebra_dim() {
        return Err(Error::Shape {
            expected: format!("{} generator coefficients", rep.algebra_dim()),
            got: format!("{}", h.hmat.ncols()),
        });
    }
    let vs = rep.apply_all(psi);
    let dim = psi.len();
    let ws: Vec<CVector> = (0..h.hmat.nrows())
        .map(|j| {
            let mut w = CVector::zeros(dim);
            for (a, v) in vs.iter().enumerate() {
                let c = h.hmat[(j, a)];
                if c != 0.0 {
                    w.axpy(C64::new(c, 0.0), v, C64::new(1.0, 0.0));
                }
            }
            w
        })
        .collect();
    let mut worst = 0.0f64;
    for j in 0..ws.len() {
        for k in (j + 1)..ws.len() {
            // ⟨[H_j, H_k]⟩ = 2i·Im⟨H_jψ|H_kψ⟩
            worst = worst.max(2.0 * ws[j].dotc(&ws[k]).im.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnpolarizedReport {
    pub first_order: bool,
    pub second_order: bool,
    #[serde(serialize_with = "ser_f64")]
    pub deviation: f64,
}

impl UnpolarizedReport {
    pub fn order(&self) -> u8 {
        if self.second_order {
            2
        } else if self.first_order {
            1
        } else {
            0
        }
    }
}

/// First- and second-order unpolarization of the generator moments.
pub fn unpolarized_report(state: &ProbeState) -> Result<UnpolarizedReport> {
    let m = moment_covariance(state);
    let c2 = state.rep.casimir()?;
    let d = m.mean.len();
    let first_order = m.mean.norm() < FIRST_ORDER_TOLERANCE;
    let target = DMatrix::identity(d, d) * (c2 / d as f64);
    let deviation = max_abs_real(&(m.covariance - target));
    Ok(UnpolarizedReport {
        first_order,
        second_order: first_order && deviation < SECOND_ORDER_TOLERANCE,
        deviation,
    })
}

/// Weight matrix choice for the scalar bound.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Weight {
    /// The Cartan metric `g(θ)`.
    #[default]
    Intrinsic,
    Identity,
    Matrix(DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundFlags {
    pub covariance_singular: bool,
    pub qfim_singular: bool,
    pub saturable: Option<bool>,
    pub unpolarized_order: u8,
    pub pseudo_inverse: bool,
}

/// Everything known about a probe for one channel and weight choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(serialize_with = "ser_vector")]
    pub mean: DVector<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub covariance: DMatrix<f64>,
    #[serde(serialize_with = "ser_opt_matrix")]
    pub qfim: Option<DMatrix<f64>>,
    #[serde(serialize_with = "ser_opt_matrix")]
    pub metric: Option<DMatrix<f64>>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub intrinsic_bound: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub weighted_bound: Option<f64>,
    pub flags: BoundFlags,
}

/// Assemble a [`BoundReport`]. Singular matrices are reported through the
/// flags (bounds left empty) rather than as errors, unless `mode` asks for
/// pseudo-inverses.
pub fn bound_report(
    state: &ProbeState,
    channel: Option<(&Channel, &[f64])>,
    weight: &Weight,
    mode: InverseMode,
) -> Result<BoundReport> {
    let moments = information_covariance(state)?;
    let cov = &moments.covariance;
    let d = cov.nrows();
    let mut pseudo = false;

    let cov_spec = SymSpectrum::new(cov);
    let covariance_singular = !(cov_spec.condition() <= DEFAULT_CONDITION_THRESHOLD);
    let intrinsic = match intrinsic_bound_with(cov, mode) {
        Ok(v) => {
            pseudo |= covariance_singular;
            Some(v)
        }
        Err(Error::NotAllEstimable { .. }) => None,
        Err(e) => return Err(e),
    };

    let hmat = match channel {
        Some((ch, theta)) => Some(ch.generators_closed_form(theta)?),
        None => None,
    };
    let (qfim_m, metric, weighted, qfim_singular) = match &hmat {
        Some(h) => {
            let q = qfim(h, cov)?;
            let g = metric_from(h);
            let q_singular = !(SymSpectrum::new(&q).condition() <= DEFAULT_CONDITION_THRESHOLD);
            let p = h.param_count();
            let w = match weight {
                Weight::Intrinsic => g.clone(),
                Weight::Identity => DMatrix::identity(p, p),
                Weight::Matrix(m) => m.clone(),
            };
            let wb = match weighted_bound_with(&w, &q, mode) {
                Ok(v) => {
                    pseudo |= q_singular;
                    Some(v)
                }
                Err(Error::SingularInformation { .. }) => None,
                // a metric that is itself singular is not a valid weight
                Err(Error::InvalidWeight) if matches!(weight, Weight::Intrinsic) => None,
                Err(e) => return Err(e),
            };
            (Some(q), Some(g), wb, q_singular)
        }
        None => (None, None, None, false),
    };

    let saturable = if state.is_pure() {
        let h = hmat.clone().unwrap_or_else(|| GeneratorMatrix::origin(d));
        Some(saturation_check(state, &h)?)
    } else {
        None
    };
    let unpolarized = unpolarized_report(state)?;

    Ok(BoundReport {
        mean: moments.mean,
        covariance: moments.covariance,
        qfim: qfim_m,
        metric,
        intrinsic_bound: intrinsic,
        weighted_bound: weighted,
        flags: BoundFlags {
            covariance_singular,
            qfim_singular,
            saturable,
            unpolarized_order: unpolarized.order(),
            pseudo_inverse: pseudo,
        },
    })
}

/// `Tr[C⁻¹]` of many states, evaluated in index order.
pub fn trace_inverse_batch(exec: Execution, states: &[ProbeState]) -> Vec<Result<f64>> {
    exec.map(states.len(), |i| {
        information_covariance(&states[i]).and_then(|m| trace_inverse(&m.covariance))
    })
}

/// Decimal serialization uses 12 significant digits; non-finite becomes null.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub(crate) fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round_sig(*x, SIGNIFICANT_DIGITS))
    } else {
        s.serialize_none()
    }
}

pub(crate) fn ser_opt_f64<S: Serializer>(
    x: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

fn rounded_rows(m: &DMatrix<f64>) -> Vec<Vec<Option<f64>>> {
    m.row_iter()
        .map(|r| {
            r.iter()
                .map(|x| x.is_finite().then(|| round_sig(*x, SIGNIFICANT_DIGITS)))
                .collect()
        })
        .collect()
}

fn ser_vector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let out: Vec<Option<f64>> = v
        .iter()
        .map(|x| x.is_finite().then(|| round_sig(*x, SIGNIFICANT_DIGITS)))
        .collect();
    out.serialize(s)
}

fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    rounded_rows(m).serialize(s)
}

fn ser_opt_matrix<S: Serializer>(
    m: &Option<DMatrix<f64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(m) => rounded_rows(m).serialize(s),
        None => s.serialize_none(),
    }
}
