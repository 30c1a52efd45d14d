//! Named probe states and the probe optimizer.
//!
//! All states live on symmetric (bosonic) representations; occupation tuples
//! are given mode by mode, e.g. `[k−ℓ, k, k+ℓ]`.

mod optimize;

pub use optimize::{
    optimize_probe, GradientMode, OptimizeResult, OptimizerConfig, OptimizerMethod, RestartOutcome,
};

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::gellmann_basis;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::metrology::ProbeState;
use crate::representation::{
    symmetric_representation_capped, Representation, DEFAULT_DIMENSION_CAP,
};

/// One complex amplitude: either a bare real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> C64 {
        match self {
            Amplitude::Real(r) => C64::new(r, 0.0),
            Amplitude::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// A probe description as read from JSON, e.g. `{"kind": "ghz", "n": 3, "N": 9}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSpec {
    /// `Σ_i |𝒩 e_i⟩ / √n`.
    Ghz {
        n: usize,
        #[serde(rename = "N")]
        particles: usize,
    },
    /// Two-mode GHZ state `(|𝒩,0⟩ + |0,𝒩⟩)/√2`.
    Noon {
        #[serde(rename = "N")]
        particles: usize,
    },
    /// The spin-2 state `(|2,2⟩ + √2|2,−1⟩)/√3`.
    TetrahedronJ2,
    /// `(|k−ℓ,k,k+ℓ⟩ + |k,k+ℓ,k−ℓ⟩ + |k+ℓ,k−ℓ,k⟩)/√3`.
    Su3Cyclic { k: i64, l: i64 },
    /// A single Fock state.
    Fock { n: usize, occupations: Vec<i64> },
    /// Explicit amplitudes in the frozen Fock order; normalized on build.
    Custom {
        n: usize,
        #[serde(rename = "N")]
        particles: usize,
        amplitudes: Vec<Amplitude>,
    },
}

impl ProbeSpec {
    pub fn build(&self) -> Result<ProbeState> {
        self.build_capped(DEFAULT_DIMENSION_CAP)
    }

    pub fn build_capped(&self, cap: usize) -> Result<ProbeState> {
        match self {
            ProbeSpec::Ghz { n, particles } => make_ghz_capped(*n, *particles, cap),
            ProbeSpec::Noon { particles } => make_ghz_capped(2, *particles, cap),
            ProbeSpec::TetrahedronJ2 => make_tetrahedron_j2(),
            ProbeSpec::Su3Cyclic { k, l } => make_su3_cyclic_capped(*k, *l, cap),
            ProbeSpec::Fock { n, occupations } => make_fock_capped(*n, occupations, cap),
            ProbeSpec::Custom {
                n,
                particles,
                amplitudes,
            } => {
                let rep = rep_for(*n, *particles, cap)?;
                if amplitudes.len() != rep.space_dim() {
                    return Err(Error::Shape {
                        expected: format!("{} amplitudes", rep.space_dim()),
                        got: format!("{}", amplitudes.len()),
                    });
                }
                let v =
                    CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|a| a.value()));
                ProbeState::pure_normalized(rep, v)
            }
        }
    }
}

/// Symmetric representation of su(n) on `particles` bosons.
pub fn rep_for(n: usize, particles: usize, cap: usize) -> Result<Arc<Representation>> {
    let basis = Arc::new(gellmann_basis(n)?);
    Ok(Arc::new(symmetric_representation_capped(
        basis, particles, cap,
    )?))
}

fn superposition(rep: Arc<Representation>, terms: &[(Vec<usize>, C64)]) -> Result<ProbeState> {
    let fock = rep
        .fock()
        .ok_or_else(|| Error::InvalidState("Fock states need a symmetric representation".into()))?;
    let mut v = CVector::zeros(rep.space_dim());
    for (occ, amp) in terms {
        let i = fock
            .index_of(occ)
            .ok_or_else(|| Error::InvalidState(format!("{occ:?} is not in the sector")))?;
        v[i] += amp;
    }
    ProbeState::pure_normalized(rep, v)
}

pub fn make_ghz(n: usize, particles: usize) -> Result<ProbeState> {
    make_ghz_capped(n, particles, DEFAULT_DIMENSION_CAP)
}

pub fn make_ghz_capped(n: usize, particles: usize, cap: usize) -> Result<ProbeState> {
    let rep = rep_for(n, particles, cap)?;
    let terms: Vec<(Vec<usize>, C64)> = (0..n)
        .map(|i| {
            let mut occ = vec![0; n];
            occ[i] = particles;
            (occ, C64::new(1.0, 0.0))
        })
        .collect();
    superposition(rep, &terms)
}

pub fn make_noon(particles: usize) -> Result<ProbeState> {
    make_ghz(2, particles)
}

pub fn make_tetrahedron_j2() -> Result<ProbeState> {
    let rep = rep_for(2, 4, DEFAULT_DIMENSION_CAP)?;
    superposition(
        rep,
        &[
            (vec![4, 0], C64::new(1.0, 0.0)),
            (vec![1, 3], C64::new(2f64.sqrt(), 0.0)),
        ],
    )
}

pub fn make_su3_cyclic(k: i64, l: i64) -> Result<ProbeState> {
    make_su3_cyclic_capped(k, l, DEFAULT_DIMENSION_CAP)
}

pub fn make_su3_cyclic_capped(k: i64, l: i64, cap: usize) -> Result<ProbeState> {
    if k == 0 || l == 0 || 4 * l * l != 3 * k * (k + 1) {
        return Err(Error::DiophantineConstraint { k, l });
    }
    let patterns = [[k - l, k, k + l], [k, k + l, k - l], [k + l, k - l, k]];
    if let Some(bad) = patterns.iter().find(|p| p.iter().any(|&x| x < 0)) {
        return Err(Error::NegativeOccupation(bad.to_vec()));
    }
    let rep = rep_for(3, (3 * k) as usize, cap)?;
    let terms: Vec<(Vec<usize>, C64)> = patterns
        .iter()
        .map(|p| (p.iter().map(|&x| x as usize).collect(), C64::new(1.0, 0.0)))
        .collect();
    superposition(rep, &terms)
}

pub fn make_fock(n: usize, occupations: &[i64]) -> Result<ProbeState> {
    make_fock_capped(n, occupations, DEFAULT_DIMENSION_CAP)
}

pub fn make_fock_capped(n: usize, occupations: &[i64], cap: usize) -> Result<ProbeState> {
    if occupations.len() != n {
        return Err(Error::Shape {
            expected: format!("{n} occupations"),
            got: format!("{}", occupations.len()),
        });
    }
    if occupations.iter().any(|&x| x < 0) {
        return Err(Error::NegativeOccupation(occupations.to_vec()));
    }
    let occ: Vec<usize> = occupations.iter().map(|&x| x as usize).collect();
    let particles = occ.iter().sum();
    let rep = rep_for(n, particles, cap)?;
    superposition(rep, &[(occ, C64::new(1.0, 0.0))])
}

/// Uniformly distributed unit vector (normalized complex Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-300 {
            return v.unscale(norm);
        }
    }
}

pub fn random_pure_state<R: Rng + ?Sized>(rep: &Arc<Representation>, rng: &mut R) -> ProbeState {
    let v = random_unit_vector(rep.space_dim(), rng);
    ProbeState::pure(Arc::clone(rep), v).expect("normalized by construction")
}

/// `AA†/Tr(AA†)` with a Gaussian `A` of the given rank.
pub fn random_density_matrix<R: Rng + ?Sized>(
    rep: &Arc<Representation>,
    rank: usize,
    rng: &mut R,
) -> ProbeState {
    let dim = rep.space_dim();
    let a = CMatrix::from_fn(dim, rank.max(1), |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    let rho = rho / tr;
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    ProbeState::mixed(Arc::clone(rep), rho).expect("valid by construction")
}

/// Rotate so the first amplitude with modulus above `1e-12` is real positive.
pub fn canonical_phase(v: &CVector) -> CVector {
    match v.iter().find(|z| z.norm() > 1e-12) {
        Some(z) => v * (z.conj() / z.norm()),
        None => v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::{covariance_pure, intrinsic_bound, unpolarized_report};

    #[test]
    fn ghz_two_modes_is_noon() {
        let a = make_ghz(2, 5).unwrap();
        let b = make_noon(5).unwrap();
        assert_eq!(a.vector(), b.vector());
        let v = a.vector().unwrap();
        let s = 0.5f64.sqrt();
        assert!((v[0].re - s).abs() < 1e-15 && (v[5].re - s).abs() < 1e-15);
    }

    #[test]
    fn ghz_three_modes() {
        let g = make_ghz(3, 9).unwrap();
        let fock = g.rep().fock().unwrap();
        let v = g.vector().unwrap();
        let w = 1.0 / 3f64.sqrt();
        for occ in [[9, 0, 0], [0, 9, 0], [0, 0, 9]] {
            assert!((v[fock.index_of(&occ).unwrap()].re - w).abs() < 1e-15);
        }
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let u = unpolarized_report(&g).unwrap();
        assert!(u.first_order);
        assert!(!u.second_order);
        assert!(u.deviation > 1.0);
    }

    #[test]
    fn ghz_mean_vanishes_from_two_particles() {
        for n in 2..=4 {
            for p in 2..=5 {
                let m = covariance_pure(&make_ghz(n, p).unwrap()).unwrap();
                assert!(m.mean.norm() < 1e-12, "n={n} N={p}");
            }
        }
        // one particle: off-diagonal generators have nonzero mean
        let m = covariance_pure(&make_ghz(2, 1).unwrap()).unwrap();
        assert!((m.mean[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn su3_cyclic_examples() {
        let s = make_su3_cyclic(3, 3).unwrap();
        let fock = s.rep().fock().unwrap();
        assert_eq!(s.rep().space_dim(), 55);
        let v = s.vector().unwrap();
        for occ in [[0, 3, 6], [3, 6, 0], [6, 0, 3]] {
            assert!(v[fock.index_of(&occ).unwrap()].norm() > 0.5);
        }
        let u = unpolarized_report(&s).unwrap();
        assert!(u.first_order && u.second_order, "{u:?}");
        let c = covariance_pure(&s).unwrap().covariance;
        assert!((intrinsic_bound(&c).unwrap() - 4.0 / 9.0).abs() < 1e-10);

        assert_eq!(
            make_su3_cyclic(2, 2).unwrap_err(),
            Error::DiophantineConstraint { k: 2, l: 2 }
        );
        assert!(matches!(
            make_su3_cyclic(3, 0),
            Err(Error::DiophantineConstraint { .. })
        ));
        assert!(matches!(
            make_su3_cyclic(-4, 3),
            Err(Error::NegativeOccupation(_))
        ));
        // ℓ → −ℓ gives the mirrored cycle
        assert!(make_su3_cyclic(3, -3).is_ok());
    }

    #[test]
    fn larger_cyclic_solution() {
        // 4·42² = 3·48·49
        let s = make_su3_cyclic(48, 42).unwrap();
        assert_eq!(s.rep().space_dim(), 10585);
        let u = unpolarized_report(&s).unwrap();
        assert!(u.second_order, "{u:?}");
    }

    #[test]
    fn tetrahedron_spec_json() {
        let spec: ProbeSpec = serde_json::from_str(r#"{"kind":"tetrahedron_j2"}"#).unwrap();
        let s = spec.build().unwrap();
        let v = s.vector().unwrap();
        assert!((v[0].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((v[3].re - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);

        let spec: ProbeSpec = serde_json::from_str(r#"{"kind":"ghz","n":3,"N":9}"#).unwrap();
        assert_eq!(spec, ProbeSpec::Ghz { n: 3, particles: 9 });
        let spec: ProbeSpec = serde_json::from_str(r#"{"kind":"su3_cyclic","k":3,"l":3}"#).unwrap();
        assert!(spec.build().is_ok());
        let spec: ProbeSpec =
            serde_json::from_str(r#"{"kind":"custom","n":2,"N":1,"amplitudes":[1,[0,1]]}"#)
                .unwrap();
        let s = spec.build().unwrap();
        assert!((s.vector().unwrap()[1].im - 0.5f64.sqrt()).abs() < 1e-15);
        let spec: ProbeSpec =
            serde_json::from_str(r#"{"kind":"fock","n":2,"occupations":[4,0]}"#).unwrap();
        assert_eq!(spec.build().unwrap().rep().space_dim(), 5);
        let spec = ProbeSpec::Custom {
            n: 2,
            particles: 1,
            amplitudes: vec![Amplitude::Real(1.0)],
        };
        assert!(spec.build().is_err());
    }

    #[test]
    fn cap_is_respected() {
        let err = make_ghz_capped(3, 30, 100).unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { .. }));
    }

    #[test]
    fn phase_canonicalization() {
        let v = CVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.6),
            C64::new(0.8, 0.0),
        ]);
        let c = canonical_phase(&v);
        assert!((c[1] - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((c[2] - C64::new(0.0, -0.8)).norm() < 1e-15);
    }
}
