//! Concrete Hilbert-space realizations of su(n).
//!
//! The symmetric representation acts on the `𝒩`-boson sector of `n` modes via
//! `X_a ↦ Σ_ij (X_a)_ij a_i† a_j`. Fock states are ordered
//! reverse-lexicographically, so for two modes the sector reads
//! `|𝒩,0⟩, |𝒩−1,1⟩, …, |0,𝒩⟩`, i.e. `J_z` descending.
//!
//! Generators are stored as sparse operators; each has at most `n` nonzeros
//! per column.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::algebra::GeneratorBasis;
use crate::error::{Error, Result};
use crate::linalg::{exp_i_hermitian, CMatrix, CVector, C64};

/// Default upper bound on the Fock-sector dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Ordered occupation-number basis of the `particles`-boson sector.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    particles: usize,
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl FockBasis {
    pub fn new(modes: usize, particles: usize) -> Self {
        let mut states = Vec::with_capacity(sector_dimension(modes, particles));
        let mut current = vec![0; modes];
        fill_states(&mut states, &mut current, 0, particles);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        FockBasis {
            modes,
            particles,
            states,
            index,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn index_of(&self, occupations: &[usize]) -> Option<usize> {
        self.index.get(occupations).copied()
    }
}

// Reverse-lexicographic: the first mode takes its largest value first.
fn fill_states(out: &mut Vec<Vec<usize>>, current: &mut [usize], mode: usize, left: usize) {
    if mode + 1 == current.len() {
        current[mode] = left;
        out.push(current.to_vec());
        return;
    }
    for k in (0..=left).rev() {
        current[mode] = k;
        fill_states(out, current, mode + 1, left - k);
    }
}

/// `binomial(particles + modes − 1, modes − 1)`, saturating on overflow.
pub fn sector_dimension(modes: usize, particles: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..modes {
        acc = acc * (particles + i) as u128 / i as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Compressed sparse column operator on a `dim`-dimensional space.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    col_start: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    fn from_columns(dim: usize, columns: Vec<Vec<(usize, C64)>>) -> Self {
        let mut col_start = Vec::with_capacity(dim + 1);
        let mut rows = Vec::new();
        let mut values = Vec::new();
        col_start.push(0);
        for mut col in columns {
            col.sort_by_key(|(r, _)| *r);
            for (r, v) in col {
                if v != C64::new(0.0, 0.0) {
                    rows.push(r);
                    values.push(v);
                }
            }
            col_start.push(rows.len());
        }
        SparseOperator {
            dim,
            col_start,
            rows,
            values,
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let columns = (0..dim)
            .map(|c| (0..dim).map(|r| (r, m[(r, c)])).collect())
            .collect();
        Self::from_columns(dim, columns)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        let mut y = CVector::zeros(self.dim);
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `y ← A x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        self.apply_add(C64::new(1.0, 0.0), x, y);
    }

    /// `y ← y + α A x`.
    pub fn apply_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (c, &xc) in x.iter().enumerate().take(self.dim) {
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            let s = alpha * xc;
            for k in self.col_start[c]..self.col_start[c + 1] {
                y[self.rows[k]] += self.values[k] * s;
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for c in 0..self.dim {
            for k in self.col_start[c]..self.col_start[c + 1] {
                m[(self.rows[k], c)] = self.values[k];
            }
        }
        m
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut map: HashMap<(usize, usize), C64> = HashMap::with_capacity(self.nnz());
        for c in 0..self.dim {
            for k in self.col_start[c]..self.col_start[c + 1] {
                map.insert((self.rows[k], c), self.values[k]);
            }
        }
        map.iter()
            .map(|(&(r, c), v)| {
                let t = map.get(&(c, r)).copied().unwrap_or_default();
                (v - t.conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Which space a representation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepresentationLabel {
    Fundamental,
    Symmetric { modes: usize, particles: usize },
}

/// The basis generators realized as operators on a concrete space.
#[derive(Debug, Clone)]
pub struct Representation {
    basis: Arc<GeneratorBasis>,
    label: RepresentationLabel,
    fock: Option<FockBasis>,
    generators: Vec<SparseOperator>,
    casimir: OnceLock<Result<f64>>,
}

impl Representation {
    /// The defining `n × n` representation.
    pub fn fundamental(basis: Arc<GeneratorBasis>) -> Self {
        let generators = basis
            .generators()
            .iter()
            .map(SparseOperator::from_dense)
            .collect();
        Representation {
            basis,
            label: RepresentationLabel::Fundamental,
            fock: None,
            generators,
            casimir: OnceLock::new(),
        }
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<GeneratorBasis> {
        Arc::clone(&self.basis)
    }

    pub fn label(&self) -> RepresentationLabel {
        self.label
    }

    pub fn fock(&self) -> Option<&FockBasis> {
        self.fock.as_ref()
    }

    /// Hilbert-space dimension `D`.
    pub fn space_dim(&self) -> usize {
        self.generators.first().map_or(0, SparseOperator::dim)
    }

    /// Number of algebra generators `d = n² − 1`.
    pub fn algebra_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[SparseOperator] {
        &self.generators
    }

    pub fn dense_generators(&self) -> Vec<CMatrix> {
        self.generators
            .iter()
            .map(SparseOperator::to_dense)
            .collect()
    }

    /// `Σ_a h_a X_a^(R)` as a dense matrix.
    pub fn combine_dense(&self, h: &[f64]) -> CMatrix {
        let dim = self.space_dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (x, &c) in self.generators.iter().zip(h) {
            if c != 0.0 {
                m += x.to_dense().scale(c);
            }
        }
        m
    }

    /// [`casimir`], computed once per representation.
    pub fn casimir(&self) -> Result<f64> {
        self.casimir.get_or_init(|| casimir(self)).clone()
    }

    /// Heisenberg floor `d²/(4𝒞̃₂)` of the intrinsic bound.
    pub fn intrinsic_floor(&self) -> Result<f64> {
        let d = self.algebra_dim() as f64;
        Ok(d * d / (4.0 * self.casimir()?))
    }

    /// `X_a^(R) ψ` for every generator.
    pub fn apply_all(&self, psi: &CVector) -> Vec<CVector> {
        self.generators.iter().map(|x| x.apply(psi)).collect()
    }
}

/// The `𝒩`-particle symmetric (bosonic) representation of su(n).
pub fn symmetric_representation(
    basis: Arc<GeneratorBasis>,
    particles: usize,
) -> Result<Representation> {
    symmetric_representation_capped(basis, particles, DEFAULT_DIMENSION_CAP)
}

pub fn symmetric_representation_capped(
    basis: Arc<GeneratorBasis>,
    particles: usize,
    cap: usize,
) -> Result<Representation> {
    let n = basis.n();
    if particles == 0 {
        return Err(Error::InvalidState(
            "symmetric representation needs at least one particle".into(),
        ));
    }
    let dim = sector_dimension(n, particles);
    if dim > cap {
        return Err(Error::DimensionTooLarge { dim, cap });
    }
    let fock = FockBasis::new(n, particles);
    let generators = basis
        .generators()
        .iter()
        .map(|x| second_quantize(x, &fock))
        .collect();
    Ok(Representation {
        basis,
        label: RepresentationLabel::Symmetric {
            modes: n,
            particles,
        },
        fock: Some(fock),
        generators,
        casimir: OnceLock::new(),
    })
}

// Σ_ij x_ij a_i† a_j restricted to the sector.
fn second_quantize(x: &CMatrix, fock: &FockBasis) -> SparseOperator {
    let n = fock.modes();
    let mut columns = Vec::with_capacity(fock.len());
    let mut scratch = vec![0usize; n];
    for state in fock.states() {
        let mut col: Vec<(usize, C64)> = Vec::new();
        let diag: C64 = (0..n).map(|i| x[(i, i)] * state[i] as f64).sum();
        let self_index = fock.index_of(state).expect("state in basis");
        col.push((self_index, diag));
        for j in 0..n {
            if state[j] == 0 {
                continue;
            }
            for i in 0..n {
                if i == j || x[(i, j)] == C64::new(0.0, 0.0) {
                    continue;
                }
                scratch.copy_from_slice(state);
                let amp = ((state[j] * (state[i] + 1)) as f64).sqrt();
                scratch[j] -= 1;
                scratch[i] += 1;
                let target = fock.index_of(&scratch).expect("ladder stays in sector");
                col.push((target, x[(i, j)] * amp));
            }
        }
        columns.push(col);
    }
    SparseOperator::from_columns(fock.len(), columns)
}

/// Quadratic Casimir eigenvalue `c` with `Σ_a (X_a^(R))² = c·𝟙`.
pub fn casimir(rep: &Representation) -> Result<f64> {
    let dim = rep.space_dim();
    let mut diag = Vec::with_capacity(dim);
    let mut off = 0.0f64;
    let mut e = CVector::zeros(dim);
    let mut tmp = vec![C64::new(0.0, 0.0); dim];
    for i in 0..dim {
        e[i] = C64::new(1.0, 0.0);
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        for x in rep.generators() {
            x.apply_into(e.as_slice(), &mut tmp);
            x.apply_add(C64::new(1.0, 0.0), &tmp, &mut acc);
        }
        e[i] = C64::new(0.0, 0.0);
        for (r, v) in acc.iter().enumerate() {
            if r == i {
                diag.push(*v);
            } else {
                off = off.max(v.norm());
            }
        }
    }
    let mean = diag.iter().map(|z| z.re).sum::<f64>() / dim as f64;
    let spread = diag.iter().map(|z| (z - mean).norm()).fold(off, f64::max);
    let deviation = if mean.abs() > 0.0 {
        spread / mean.abs()
    } else {
        spread
    };
    if deviation > 1e-8 {
        return Err(Error::NotIrreducible { deviation });
    }
    Ok(mean)
}

/// Closed-form Casimir of the symmetric representation, `𝒩(𝒩+n)(n−1)/(2n)`.
pub fn symmetric_casimir_formula(modes: usize, particles: usize) -> f64 {
    let (n, p) = (modes as f64, particles as f64);
    p * (p + n) * (n - 1.0) / (2.0 * n)
}

/// `exp(i Σ_a h_a X_a^(R))`.
pub fn lift_unitary(rep: &Representation, h: &[f64]) -> CMatrix {
    exp_i_hermitian(&rep.combine_dense(h))
}
