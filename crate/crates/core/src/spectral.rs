//! Dense linear algebra for the bipartition: eigendecomposition of h, SPD square roots,
//! the blocks of h^{1/2}, the Schur complement and the symplectic spectrum.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingMatrix;
use crate::lattice::Region;
use crate::scalar::Real;

fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Symmetric eigendecomposition with ascending eigenvalues.
///
/// Each eigenvector is flipped so its largest-magnitude entry is positive (first one on ties).
pub fn sorted_sym_eig<T: Real>(m: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let mut best = 0;
        for r in 1..n {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        let sign = if col[best] < T::zero() { -T::one() } else { T::one() };
        vectors.set_column(c, &(col * sign));
    }
    (values, vectors)
}

/// `V diag(f(λ)) Vᵀ`, symmetrized.
pub fn spectral_apply<T: Real>(values: &DVector<T>, vectors: &DMatrix<T>, f: impl Fn(T) -> T) -> DMatrix<T> {
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * f(values[j]));
    symmetrize(&(scaled * vectors.transpose()))
}

fn pd_floor<T: Real>(values: &DVector<T>) -> T {
    T::tol(1e-10, 10.0) * values.amax()
}

/// Square root and inverse square root of a symmetric positive definite matrix.
pub fn spd_sqrt_pair<T: Real>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (vals, vecs) = sorted_sym_eig(m);
    if !vals.is_empty() && vals[0] <= pd_floor(&vals) {
        return Err(Error::Degenerate(format!("matrix is not positive definite (smallest eigenvalue {:e})", vals[0])));
    }
    Ok((spectral_apply(&vals, &vecs, |x| x.sqrt()), spectral_apply(&vals, &vecs, |x| T::one() / x.sqrt())))
}

/// Eigenvalues `γ_j²` (ascending), frequencies `γ_j` and eigenvectors `v_j` of h.
#[derive(Debug, Clone)]
pub struct SpectralData<T: Real> {
    pub eigenvalues: DVector<T>,
    pub gammas: DVector<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Real> SpectralData<T> {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `h^{1/2} = V Γ Vᵀ`.
    pub fn sqrt(&self) -> DMatrix<T> {
        spectral_apply(&self.gammas, &self.vectors, |g| g)
    }

    /// `h^{-1/2} = V Γ⁻¹ Vᵀ`.
    pub fn inv_sqrt(&self) -> DMatrix<T> {
        spectral_apply(&self.gammas, &self.vectors, |g| T::one() / g)
    }

    /// `V Γ² Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        spectral_apply(&self.eigenvalues, &self.vectors, |x| x)
    }
}

/// Eigendecomposition `h = V Γ² Vᵀ`. Fails unless `λ_min > 1e-10·‖h‖`.
pub fn sym_eig<T: Real>(h: &CouplingMatrix<T>) -> Result<SpectralData<T>> {
    let (eigenvalues, vectors) = sorted_sym_eig(h.matrix());
    if !eigenvalues.is_empty() && eigenvalues[0] <= pd_floor(&eigenvalues) {
        return Err(Error::Degenerate(format!(
            "coupling matrix is not positive definite (smallest eigenvalue {:e})",
            eigenvalues[0]
        )));
    }
    let gammas = eigenvalues.map(|x| x.sqrt());
    Ok(SpectralData { eigenvalues, gammas, vectors })
}

pub fn spd_sqrt<T: Real>(h: &CouplingMatrix<T>) -> Result<DMatrix<T>> {
    Ok(sym_eig(h)?.sqrt())
}

pub fn spd_inv_sqrt<T: Real>(h: &CouplingMatrix<T>) -> Result<DMatrix<T>> {
    Ok(sym_eig(h)?.inv_sqrt())
}

/// Blocks `A`, `B`, `C` of h^{1/2} (Λ₀ first) and the Schur complement `S = A - C B⁻¹ Cᵀ`.
#[derive(Debug, Clone)]
pub struct BipartitionBlocks<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub schur: DMatrix<T>,
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
    b_chol: Cholesky<T, Dyn>,
}

impl<T: Real> BipartitionBlocks<T> {
    /// `B⁻¹ x` through the Cholesky factor of `B`.
    pub fn b_solve(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.b_chol.solve(x)
    }

    pub fn b_solve_vec(&self, x: &DVector<T>) -> DVector<T> {
        self.b_chol.solve(x)
    }

    pub fn inside_len(&self) -> usize {
        self.inside.len()
    }
}

fn submatrix<T: Real>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn partition_blocks<T: Real>(hsqrt: &DMatrix<T>, region: &Region) -> Result<BipartitionBlocks<T>> {
    let n = region.lattice().len();
    if hsqrt.nrows() != n || hsqrt.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, lattice has {n} sites",
            hsqrt.nrows(),
            hsqrt.ncols()
        )));
    }
    if region.inside_len() == 0 {
        return Err(Error::InvalidArgument("subregion is empty".into()));
    }
    if region.outside_len() == 0 {
        return Err(Error::InvalidArgument("subregion has an empty complement".into()));
    }
    let inside = region.inside().to_vec();
    let outside = region.outside().to_vec();
    let a = symmetrize(&submatrix(hsqrt, &inside, &inside));
    let b = symmetrize(&submatrix(hsqrt, &outside, &outside));
    let c = submatrix(hsqrt, &inside, &outside);
    let b_chol = Cholesky::new(b.clone())
        .ok_or_else(|| Error::Degenerate("complement block B is not positive definite".into()))?;
    let schur = symmetrize(&(&a - &c * b_chol.solve(&c.transpose())));
    if Cholesky::new(schur.clone()).is_none() {
        return Err(Error::Degenerate("Schur complement is not positive definite".into()));
    }
    Ok(BipartitionBlocks { a, b, c, schur, inside, outside, b_chol })
}

/// Symplectic eigenvalues `μ_j ≥ 1` of the bipartition and the associated change of variables.
#[derive(Debug, Clone)]
pub struct SymplecticSpectrum<T: Real> {
    /// Ascending.
    pub mu: DVector<T>,
    /// Eigenvalues of `Θ = A^{-1/2} C B⁻¹ Cᵀ A^{-1/2}`; `μ² = 1/(1-θ)`.
    pub theta: DVector<T>,
    pub sigma: DVector<T>,
    pub kappa: DVector<T>,
    pub f2: DMatrix<T>,
    pub f: DMatrix<T>,
    pub a_sqrt: DMatrix<T>,
    pub a_inv_sqrt: DMatrix<T>,
}

impl<T: Real> SymplecticSpectrum<T> {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `μ_j² - 1 = θ/(1-θ)`, accurate for weakly coupled modes.
    pub fn mu2_minus_one(&self, j: usize) -> T {
        self.theta[j] / (T::one() - self.theta[j])
    }

    /// `μ_j - 1`, accurate for weakly coupled modes.
    pub fn mu_minus_one(&self, j: usize) -> T {
        self.mu2_minus_one(j) / (self.mu[j] + T::one())
    }

    /// Builds a spectrum from bare symplectic eigenvalues (no geometry attached;
    /// the matrices are identities). Used for formula-level work on synthetic spectra.
    pub fn from_mu(mu: &[T]) -> Result<Self> {
        let mut mu = mu.to_vec();
        if let Some(m) = mu.iter().find(|m| !(**m >= T::one())) {
            return Err(Error::Domain(format!("symplectic eigenvalue {m:e} < 1")));
        }
        mu.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = mu.len();
        let theta = DVector::from_iterator(n, mu.iter().map(|&m| T::one() - T::one() / (m * m)));
        let mu = DVector::from_vec(mu);
        let (sigma, kappa) = sigma_kappa(&theta);
        let id = DMatrix::identity(n, n);
        Ok(SymplecticSpectrum {
            mu,
            theta,
            sigma,
            kappa,
            f2: id.clone(),
            f: id.clone(),
            a_sqrt: id.clone(),
            a_inv_sqrt: id,
        })
    }
}

fn sigma_kappa<T: Real>(theta: &DVector<T>) -> (DVector<T>, DVector<T>) {
    let two = T::lit(2.0);
    let sigma = theta.map(|t| -t / (two - t));
    let kappa = sigma.map(|s| (T::one() - s * s).sqrt());
    (sigma, kappa)
}

/// Clipping window for eigenvalues of Θ below 0 (μ² below 1).
fn clip_tolerance<T: Real>() -> T {
    T::tol(1e-10, 1e3)
}

/// Diagonalizes `A^{1/2} S⁻¹ A^{1/2} = (I - Θ)⁻¹` through Θ.
pub fn symplectic_spectrum<T: Real>(blocks: &BipartitionBlocks<T>) -> Result<SymplecticSpectrum<T>> {
    let (a_sqrt, a_inv_sqrt) = spd_sqrt_pair(&blocks.a)?;
    let cbc = &blocks.c * blocks.b_solve(&blocks.c.transpose());
    let theta_m = &a_inv_sqrt * cbc * &a_inv_sqrt;
    let (mut theta, f2) = sorted_sym_eig(&theta_m);
    let tol = clip_tolerance::<T>();
    for t in theta.iter_mut() {
        if *t < T::zero() {
            if *t >= -tol {
                *t = T::zero();
            } else {
                return Err(Error::Domain(format!(
                    "symplectic eigenvalue squared {:e} is below 1",
                    T::one() / (T::one() - *t)
                )));
            }
        }
        if *t >= T::one() {
            return Err(Error::Degenerate("Θ has an eigenvalue >= 1; Schur complement singular".into()));
        }
    }
    let mu = theta.map(|t| (T::one() / (T::one() - t)).sqrt());
    let (sigma, kappa) = sigma_kappa(&theta);
    let n = mu.len();
    let scale = DVector::from_fn(n, |j, _| {
        let m2 = mu[j] * mu[j];
        (T::lit(2.0) * m2 / (T::one() + m2)).sqrt()
    });
    let f = &a_inv_sqrt * &f2 * DMatrix::from_diagonal(&scale);
    Ok(SymplecticSpectrum { mu, theta, sigma, kappa, f2, f, a_sqrt, a_inv_sqrt })
}

/// `Θ = A^{-1/2} C B⁻¹ Cᵀ A^{-1/2}`.
pub fn theta_matrix<T: Real>(blocks: &BipartitionBlocks<T>) -> Result<DMatrix<T>> {
    let (_, a_inv_sqrt) = spd_sqrt_pair(&blocks.a)?;
    let cbc = &blocks.c * blocks.b_solve(&blocks.c.transpose());
    Ok(symmetrize(&(&a_inv_sqrt * cbc * &a_inv_sqrt)))
}

/// Covariance matrix `Γ = diag(S⁻¹, A)` of the reduced ground state.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix<T: Real> {
    pub matrix: DMatrix<T>,
}

pub fn covariance_matrix<T: Real>(blocks: &BipartitionBlocks<T>) -> Result<CovarianceMatrix<T>> {
    let n = blocks.inside_len();
    let chol = Cholesky::new(blocks.schur.clone())
        .ok_or_else(|| Error::Degenerate("Schur complement is not positive definite".into()))?;
    let s_inv = symmetrize(&chol.inverse());
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&s_inv);
    g.view_mut((n, n), (n, n)).copy_from(&blocks.a);
    Ok(CovarianceMatrix { matrix: g })
}

impl<T: Real> CovarianceMatrix<T> {
    /// Symplectic eigenvalues (ascending): moduli of the eigenvalues of `iJΓ`,
    /// computed from the singular values of `Γ^{1/2} J Γ^{1/2}`.
    pub fn symplectic_eigenvalues(&self) -> Result<DVector<T>> {
        let two_n = self.matrix.nrows();
        let n = two_n / 2;
        let (g_half, _) = spd_sqrt_pair(&self.matrix)?;
        let mut j = DMatrix::zeros(two_n, two_n);
        for i in 0..n {
            j[(i, n + i)] = T::one();
            j[(n + i, i)] = -T::one();
        }
        let k = &g_half * j * &g_half;
        let (vals, _) = sorted_sym_eig(&(k.transpose() * &k));
        Ok(DVector::from_fn(n, |i, _| ((vals[2 * i] + vals[2 * i + 1]) * T::lit(0.5)).max(T::zero()).sqrt()))
    }
}

/// Everything the entropy formulas need for one coupling matrix and one bipartition.
#[derive(Debug, Clone)]
pub struct BipartiteSystem<T: Real> {
    pub spectral: SpectralData<T>,
    pub hsqrt: DMatrix<T>,
    pub blocks: BipartitionBlocks<T>,
    pub symplectic: SymplecticSpectrum<T>,
}

impl<T: Real> BipartiteSystem<T> {
    pub fn new(h: &CouplingMatrix<T>, region: &Region) -> Result<Self> {
        let spectral = sym_eig(h)?;
        let hsqrt = spectral.sqrt();
        Self::from_parts(spectral, hsqrt, region)
    }

    /// Reuses an existing eigendecomposition and `h^{1/2}` for another region.
    pub fn from_parts(spectral: SpectralData<T>, hsqrt: DMatrix<T>, region: &Region) -> Result<Self> {
        let blocks = partition_blocks(&hsqrt, region)?;
        let symplectic = symplectic_spectrum(&blocks)?;
        Ok(BipartiteSystem { spectral, hsqrt, blocks, symplectic })
    }
}
