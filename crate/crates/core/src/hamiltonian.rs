//! Coupling matrices h_Λ: the random-spring Anderson model and user-supplied matrices.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::scalar::Real;

/// Dense symmetric matrix `h` defining `H = pᵀp + xᵀhx` on a lattice.
#[derive(Debug, Clone)]
pub struct CouplingMatrix<T: Real> {
    matrix: DMatrix<T>,
    lattice: Arc<Lattice>,
}

impl<T: Real> CouplingMatrix<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Converts to another scalar type (through f64).
    pub fn cast<U: Real>(&self) -> CouplingMatrix<U> {
        CouplingMatrix { matrix: self.matrix.map(|x| U::lit(x.as_f64())), lattice: self.lattice.clone() }
    }
}

/// On-site springs `k_j ~ U[0, k_max]`, keyed by a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisorderModel {
    pub k_max: f64,
    pub seed: u64,
}

impl DisorderModel {
    pub fn new(k_max: f64, seed: u64) -> Result<Self> {
        if !(k_max > 0.0 && k_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("k_max must be positive, got {k_max}")));
        }
        Ok(DisorderModel { k_max, seed })
    }

    /// Spring constant at one site. The ChaCha stream is the realization index and the
    /// word position is fixed by the site, so every value is addressable on its own.
    pub fn spring(&self, realization: u64, site: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(realization);
        rng.set_word_pos(2 * site as u128);
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.k_max * u
    }
}

/// The springs `k_j` of one disorder realization, one per site.
pub fn sample_springs<T: Real>(model: &DisorderModel, lattice: &Lattice, realization: u64) -> Vec<T> {
    (0..lattice.len()).map(|j| T::lit(model.spring(realization, j))).collect()
}

/// `h_jj = #neighbours(j) + k_j`, `h_jk = -1` for nearest neighbours.
pub fn assemble_anderson<T: Real>(lattice: Arc<Lattice>, springs: &[T]) -> Result<CouplingMatrix<T>> {
    let n = lattice.len();
    if springs.len() != n {
        return Err(Error::DimensionMismatch(format!("{} springs for {n} sites", springs.len())));
    }
    if let Some(j) = springs.iter().position(|&k| !(k >= T::zero())) {
        return Err(Error::InvalidArgument(format!("spring constant at site {j} is negative")));
    }
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let nb = lattice.neighbors(j);
        h[(j, j)] = T::from_usize_lossy(nb.len()) + springs[j];
        for k in nb {
            h[(j, k)] = -T::one();
        }
    }
    Ok(CouplingMatrix { matrix: h, lattice })
}

/// Anderson matrix for realization `realization` of `model`.
pub fn anderson_realization<T: Real>(
    lattice: Arc<Lattice>,
    model: &DisorderModel,
    realization: u64,
) -> Result<CouplingMatrix<T>> {
    let springs = sample_springs::<T>(model, &lattice, realization);
    assemble_anderson(lattice, &springs)
}

/// Accepts a user matrix if it is symmetric to relative `1e-12` and stores its symmetrization.
pub fn assemble_custom<T: Real>(lattice: Arc<Lattice>, entries: &DMatrix<T>) -> Result<CouplingMatrix<T>> {
    let n = lattice.len();
    if !entries.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "coupling matrix is {}x{}, not square",
            entries.nrows(),
            entries.ncols()
        )));
    }
    if entries.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "coupling matrix has size {}, lattice has {n} sites",
            entries.nrows()
        )));
    }
    if entries.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("coupling matrix has non-finite entries".into()));
    }
    let scale = entries.amax().max(T::one());
    let asym = (entries - entries.transpose()).amax();
    let tol = T::tol(1e-12, 10.0) * scale;
    if asym > tol {
        return Err(Error::NotSymmetric { max_asymmetry: asym.as_f64(), tolerance: tol.as_f64() });
    }
    let matrix = (entries + entries.transpose()) * T::lit(0.5);
    Ok(CouplingMatrix { matrix, lattice })
}

/// Outcome of checking positivity and the norm bound `‖h^{1/2}‖ ≤ D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub is_positive_definite: bool,
    pub smallest_eigenvalue: f64,
    pub sqrt_norm: f64,
    pub d_bound: f64,
    pub d_satisfied: bool,
}

/// Positive definiteness requires `λ_min > 1e-10·‖h‖`.
pub fn validate_assumptions<T: Real>(h: &CouplingMatrix<T>, d_bound: T) -> AssumptionReport {
    let sym = (&h.matrix + h.matrix.transpose()) * T::lit(0.5);
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let lo = ev.min();
    let hi = ev.max();
    let norm = ev.amax();
    let is_pd = lo > T::tol(1e-10, 10.0) * norm;
    let sqrt_norm = if hi > T::zero() { hi.sqrt() } else { T::zero() };
    AssumptionReport {
        is_positive_definite: is_pd,
        smallest_eigenvalue: lo.as_f64(),
        sqrt_norm: sqrt_norm.as_f64(),
        d_bound: d_bound.as_f64(),
        d_satisfied: sqrt_norm <= d_bound,
    }
}

/// Default `D` for the Anderson model: `‖h‖ ≤ 4d + k_max`.
pub fn anderson_d_bound(dim: usize, k_max: f64) -> f64 {
    (4.0 * dim as f64 + k_max).sqrt()
}

/// Reads a dense matrix from a headerless CSV file (row-major, comma separated).
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad matrix entry {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Converts nested rows into a matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}
