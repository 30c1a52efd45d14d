//! Search for pure probes minimizing `Tr[C_ψ⁻¹(X)]`.
//!
//! The state is a complex vector kept on the unit sphere. Near the singular
//! set the objective is replaced by a barrier `2d/λ_min(C)`, which dominates
//! `Tr[C⁻¹] ≤ d/λ_min` and keeps the search away from it.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{canonical_phase, random_unit_vector};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{CVector, SymSpectrum, C64, DEFAULT_CONDITION_THRESHOLD};
use crate::metrology::ProbeState;
use crate::representation::Representation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMethod {
    /// Riemannian gradient descent with Barzilai–Borwein steps and Armijo
    /// backtracking.
    #[default]
    GradientDescentOnSphere,
    /// Nelder–Mead on the stacked real/imaginary parts.
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientMode {
    /// Exact derivative of `Tr[C⁻¹]`.
    #[default]
    Analytic,
    /// Central differences over the `2D` real coordinates.
    FiniteDifference { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
    #[serde(default)]
    pub method: OptimizerMethod,
    #[serde(default)]
    pub gradient: GradientMode,
    #[serde(skip)]
    pub execution: Execution,
}

impl OptimizerConfig {
    pub fn new(seed: u64) -> Self {
        OptimizerConfig {
            restarts: 20,
            max_iters: 3000,
            tolerance: 1e-9,
            seed,
            method: OptimizerMethod::default(),
            gradient: GradientMode::default(),
            execution: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if let GradientMode::FiniteDifference { step } = self.gradient {
            if !(step > 0.0) {
                return Err(Error::InvalidConfig(
                    "finite-difference step must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Summary of a single restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub singular: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    /// Best state found, phase-canonicalized.
    pub state: ProbeState,
    /// `¼ Tr[C⁻¹]` of `state`.
    pub bound_achieved: f64,
    /// `d²/(4𝒞̃₂)`.
    pub floor: f64,
    pub converged: bool,
    pub best_restart: usize,
    pub restarts: Vec<RestartOutcome>,
}

/// Evaluation of `Tr[C⁻¹]` at a normalized state.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub value: f64,
    pub singular: bool,
    // X_a ψ, means, and C⁻² (only when nonsingular)
    vs: Vec<CVector>,
    mean: Vec<f64>,
    inv_sq: Option<DMatrix<f64>>,
}

pub(crate) struct Objective<'a> {
    rep: &'a Representation,
}

impl<'a> Objective<'a> {
    pub fn new(rep: &'a Representation) -> Self {
        Objective { rep }
    }

    pub fn evaluate(&self, psi: &CVector) -> Evaluation {
        let vs = self.rep.apply_all(psi);
        let d = vs.len();
        let mean: Vec<f64> = vs.iter().map(|v| psi.dotc(v).re).collect();
        let mut cov = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in j..d {
                let c = vs[j].dotc(&vs[k]).re - mean[j] * mean[k];
                cov[(j, k)] = c;
                cov[(k, j)] = c;
            }
        }
        let spec = SymSpectrum::new(&cov);
        let (lo, hi) = (spec.min(), spec.max());
        if !(spec.condition() <= DEFAULT_CONDITION_THRESHOLD) {
            let floor = (hi.abs() / 1e16).max(1e-300);
            return Evaluation {
                value: 2.0 * d as f64 / lo.max(floor),
                singular: true,
                vs,
                mean,
                inv_sq: None,
            };
        }
        let mut inv = DMatrix::zeros(d, d);
        for (k, &l) in spec.values.iter().enumerate() {
            let v = spec.vectors.column(k);
            inv += (v * v.transpose()) / l;
        }
        Evaluation {
            value: inv.trace(),
            singular: false,
            vs,
            mean,
            inv_sq: Some(&inv * &inv),
        }
    }

    /// Riemannian gradient (tangent to the sphere) as a complex vector whose
    /// real and imaginary parts are the derivatives along `Re ψ` and `Im ψ`.
    pub fn gradient(
        &self,
        psi: &CVector,
        eval: &Evaluation,
        mode: GradientMode,
    ) -> Option<CVector> {
        let raw = match mode {
            GradientMode::Analytic => self.analytic_gradient(eval)?,
            GradientMode::FiniteDifference { step } => self.fd_gradient(psi, step),
        };
        Some(project_tangent(psi, raw))
    }

    // 2 ∂f/∂ψ̄ with f = Tr[C⁻¹] and G = C⁻²:
    // ∂f/∂ψ̄ = −Σ_j X_j(Σ_k G_jk X_kψ) + 2 Σ_j (G m)_j X_jψ
    fn analytic_gradient(&self, eval: &Evaluation) -> Option<CVector> {
        let g = eval.inv_sq.as_ref()?;
        let d = eval.vs.len();
        let dim = eval.vs[0].len();
        let gm: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|k| g[(j, k)] * eval.mean[k]).sum())
            .collect();
        let mut out = CVector::zeros(dim);
        let mut w = CVector::zeros(dim);
        for (j, x) in self.rep.generators().iter().enumerate() {
            w.fill(C64::new(0.0, 0.0));
            for k in 0..d {
                w.axpy(C64::new(g[(j, k)], 0.0), &eval.vs[k], C64::new(1.0, 0.0));
            }
            x.apply_add(C64::new(-2.0, 0.0), w.as_slice(), out.as_mut_slice());
            out.axpy(C64::new(4.0 * gm[j], 0.0), &eval.vs[j], C64::new(1.0, 0.0));
        }
        Some(out)
    }

    fn fd_gradient(&self, psi: &CVector, h: f64) -> CVector {
        let f = |v: &CVector| self.evaluate(&v.unscale(v.norm())).value;
        let mut out = CVector::zeros(psi.len());
        let mut probe = psi.clone();
        for i in 0..psi.len() {
            for (part, unit) in [(0usize, C64::new(h, 0.0)), (1, C64::new(0.0, h))] {
                let orig = probe[i];
                probe[i] = orig + unit;
                let up = f(&probe);
                probe[i] = orig - unit;
                let down = f(&probe);
                probe[i] = orig;
                let dfd = (up - down) / (2.0 * h);
                if part == 0 {
                    out[i].re = dfd;
                } else {
                    out[i].im = dfd;
                }
            }
        }
        out
    }
}

fn project_tangent(psi: &CVector, g: CVector) -> CVector {
    let radial = psi.dotc(&g).re;
    g - psi * C64::new(radial, 0.0)
}

fn real_dot(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).re
}

struct RunResult {
    psi: CVector,
    eval: Evaluation,
    iterations: usize,
    converged: bool,
}

fn gradient_descent(obj: &Objective, start: CVector, cfg: &OptimizerConfig) -> RunResult {
    let mut psi = start;
    let mut eval = obj.evaluate(&psi);
    if eval.singular && matches!(cfg.gradient, GradientMode::Analytic) {
        return RunResult {
            psi,
            eval,
            iterations: 0,
            converged: false,
        };
    }
    let mut grad = match obj.gradient(&psi, &eval, cfg.gradient) {
        Some(g) => g,
        None => {
            return RunResult {
                psi,
                eval,
                iterations: 0,
                converged: false,
            }
        }
    };
    let mut step = 1e-2 / grad.norm().max(1.0);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let gnorm2 = grad.norm_squared();
        if gnorm2.sqrt() <= cfg.tolerance * (1.0 + eval.value) {
            converged = true;
            break;
        }
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &psi - &grad * C64::new(alpha, 0.0);
            let trial = trial.unscale(trial.norm());
            let te = obj.evaluate(&trial);
            if te.value <= eval.value - 1e-4 * alpha * gnorm2 {
                accepted = Some((trial, te));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_eval)) = accepted else {
            // no further decrease resolvable in double precision
            converged = gnorm2.sqrt() <= cfg.tolerance.sqrt() * (1.0 + eval.value);
            break;
        };
        let Some(next_grad) = obj.gradient(&next, &next_eval, cfg.gradient) else {
            psi = next;
            eval = next_eval;
            break;
        };
        let s = &next - &psi;
        let y = &next_grad - &grad;
        let sy = real_dot(&s, &y);
        step = if sy > 0.0 {
            (s.norm_squared() / sy).clamp(1e-12, 1e6)
        } else {
            (alpha * 2.0).min(1e6)
        };
        let rel_change = (eval.value - next_eval.value).abs() / (1.0 + eval.value);
        psi = next;
        eval = next_eval;
        grad = next_grad;
        if rel_change < 1e-16 {
            converged = grad.norm() <= cfg.tolerance.sqrt() * (1.0 + eval.value);
            break;
        }
    }
    RunResult {
        psi,
        eval,
        iterations,
        converged,
    }
}

fn nelder_mead(obj: &Objective, start: CVector, cfg: &OptimizerConfig) -> RunResult {
    let dim = start.len();
    let n = 2 * dim;
    let to_real = |v: &CVector| -> Vec<f64> { v.iter().flat_map(|z| [z.re, z.im]).collect() };
    let to_state = |x: &[f64]| -> CVector {
        let v = CVector::from_fn(dim, |i, _| C64::new(x[2 * i], x[2 * i + 1]));
        let norm = v.norm();
        if norm > 0.0 {
            v.unscale(norm)
        } else {
            v
        }
    };
    let f = |x: &[f64]| obj.evaluate(&to_state(x)).value;

    let x0 = to_real(&start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), f(&x0)));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += 0.1;
        let v = f(&x);
        simplex.push((x, v));
    }
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        iterations = it + 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= cfg.tolerance * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *v = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let psi = to_state(&simplex[0].0);
    let eval = obj.evaluate(&psi);
    RunResult {
        psi,
        eval,
        iterations,
        converged,
    }
}

/// Minimize the intrinsic bound over pure states of `rep`.
///
/// Restarts start from independent uniformly random states (stream `r` of a
/// ChaCha generator seeded with `config.seed`) and may run concurrently; the
/// lowest objective wins, ties going to the lower restart index.
pub fn optimize_probe(
    rep: Arc<Representation>,
    config: &OptimizerConfig,
) -> Result<OptimizeResult> {
    config.validate()?;
    let floor = rep.intrinsic_floor()?;
    let runs: Vec<RunResult> = config.execution.map(config.restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let start = random_unit_vector(rep.space_dim(), &mut rng);
        let obj = Objective::new(&rep);
        match config.method {
            OptimizerMethod::GradientDescentOnSphere => gradient_descent(&obj, start, config),
            OptimizerMethod::Simplex => nelder_mead(&obj, start, config),
        }
    });
    let outcomes: Vec<RestartOutcome> = runs
        .iter()
        .map(|r| RestartOutcome {
            objective: r.eval.value,
            iterations: r.iterations,
            converged: r.converged,
            singular: r.eval.singular,
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.eval.singular)
        .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
            Some((_, v)) if v <= r.eval.value => acc,
            _ => Some((i, r.eval.value)),
        });
    let Some((best_restart, value)) = best else {
        return Err(Error::OptimizationFailed {
            restarts: config.restarts,
            reason: format!(
                "space dimension {} with {} generators",
                rep.space_dim(),
                rep.algebra_dim()
            ),
        });
    };
    let psi = canonical_phase(&runs[best_restart].psi);
    let state = ProbeState::pure_normalized(Arc::clone(&rep), psi)?;
    Ok(OptimizeResult {
        state,
        bound_achieved: 0.25 * value,
        floor,
        converged: runs[best_restart].converged,
        best_restart,
        restarts: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::{make_tetrahedron_j2, rep_for};
    use crate::representation::DEFAULT_DIMENSION_CAP;

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let rep = rep_for(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let obj = Objective::new(&rep);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let psi = random_unit_vector(rep.space_dim(), &mut rng);
            let eval = obj.evaluate(&psi);
            assert!(!eval.singular);
            let a = obj.gradient(&psi, &eval, GradientMode::Analytic).unwrap();
            let f = obj
                .gradient(&psi, &eval, GradientMode::FiniteDifference { step: 1e-6 })
                .unwrap();
            let rel = (&a - &f).norm() / a.norm();
            assert!(rel < 1e-5, "relative gradient mismatch {rel}");
        }
    }

    #[test]
    fn tetrahedron_is_stationary() {
        let s = make_tetrahedron_j2().unwrap();
        let rep = s.shared_rep();
        let obj = Objective::new(&rep);
        let psi = s.vector().unwrap().clone();
        let eval = obj.evaluate(&psi);
        assert!((eval.value - 1.5).abs() < 1e-12);
        let g = obj.gradient(&psi, &eval, GradientMode::Analytic).unwrap();
        assert!(g.norm() < 1e-10);
    }

    #[test]
    fn finds_spin_two_optimum() {
        let rep = rep_for(2, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let mut cfg = OptimizerConfig::new(7);
        cfg.restarts = 8;
        let res = optimize_probe(rep, &cfg).unwrap();
        assert!(
            (res.bound_achieved - 0.375).abs() < 0.375 * 0.01,
            "{}",
            res.bound_achieved
        );
        assert!(res.bound_achieved >= res.floor - 1e-9);
        let first = res
            .state
            .vector()
            .unwrap()
            .iter()
            .find(|z| z.norm() > 1e-12)
            .unwrap();
        assert!(first.im.abs() < 1e-14 && first.re > 0.0);
    }

    #[test]
    fn simplex_on_small_space() {
        let rep = rep_for(2, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let mut cfg = OptimizerConfig::new(1);
        cfg.restarts = 4;
        cfg.max_iters = 20_000;
        cfg.tolerance = 1e-12;
        cfg.method = OptimizerMethod::Simplex;
        let res = optimize_probe(rep, &cfg).unwrap();
        assert!(
            (res.bound_achieved - 0.375).abs() < 0.375 * 0.01,
            "{}",
            res.bound_achieved
        );
    }

    #[test]
    fn methods_agree_on_spin_one() {
        // the spin-1 floor 9/8 is out of reach: Re(vv†) has rank at most 2
        let rep = rep_for(2, 2, DEFAULT_DIMENSION_CAP).unwrap();
        let mut cfg = OptimizerConfig::new(2);
        cfg.restarts = 4;
        let gd = optimize_probe(Arc::clone(&rep), &cfg).unwrap();
        cfg.method = OptimizerMethod::Simplex;
        cfg.max_iters = 20_000;
        cfg.tolerance = 1e-12;
        let nm = optimize_probe(rep, &cfg).unwrap();
        assert!(gd.bound_achieved > gd.floor + 0.5);
        assert!((gd.bound_achieved - nm.bound_achieved).abs() < 1e-4 * gd.bound_achieved);
    }

    #[test]
    fn fundamental_su2_fails() {
        let rep = rep_for(2, 1, DEFAULT_DIMENSION_CAP).unwrap();
        let mut cfg = OptimizerConfig::new(3);
        cfg.restarts = 4;
        assert!(matches!(
            optimize_probe(rep, &cfg),
            Err(Error::OptimizationFailed { restarts: 4, .. })
        ));
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let rep = rep_for(2, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let mut cfg = OptimizerConfig::new(11);
        cfg.restarts = 6;
        cfg.execution = Execution::Sequential;
        let a = optimize_probe(Arc::clone(&rep), &cfg).unwrap();
        cfg.execution = Execution::Parallel;
        let b = optimize_probe(rep, &cfg).unwrap();
        assert_eq!(a.bound_achieved.to_bits(), b.bound_achieved.to_bits());
        assert_eq!(a.best_restart, b.best_restart);
    }

    #[test]
    fn config_validation() {
        let rep = rep_for(2, 2, DEFAULT_DIMENSION_CAP).unwrap();
        let mut cfg = OptimizerConfig::new(0);
        cfg.restarts = 0;
        assert!(matches!(
            optimize_probe(Arc::clone(&rep), &cfg),
            Err(Error::InvalidConfig(_))
        ));
        let mut cfg = OptimizerConfig::new(0);
        cfg.tolerance = 0.0;
        assert!(optimize_probe(rep, &cfg).is_err());
        let cfg: OptimizerConfig = serde_json::from_str(
            r#"{"restarts":5,"max_iters":100,"tolerance":1e-8,"seed":3,"method":"simplex"}"#,
        )
        .unwrap();
        assert_eq!(cfg.method, OptimizerMethod::Simplex);
        assert_eq!(cfg.gradient, GradientMode::Analytic);
    }
}
