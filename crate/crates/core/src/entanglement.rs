//! Ground-state Rényi entropies and the single-excitation bounds.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{BipartiteSystem, BipartitionBlocks, SpectralData, SymplecticSpectrum};

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() && eps <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")))
    }
}

/// `f_ε(x) = (((x+1)/2)^ε - ((x-1)/2)^ε)⁻¹` for `x ≥ 1`, `0 < ε < 1`.
pub fn f_eps<T: Real>(x: T, eps: T) -> Result<T> {
    if !(x >= T::one()) {
        return Err(Error::Domain(format!("f_eps needs x >= 1, got {x}")));
    }
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidArgument(format!("f_eps needs 0 < eps < 1, got {eps}")));
    }
    Ok(T::one() / f_denominator(x, x - T::one(), eps))
}

fn f_denominator<T: Real>(mu: T, mu_minus_one: T, eps: T) -> T {
    let half = T::lit(0.5);
    let a = ((mu + T::one()) * half).powf(eps);
    let b = if mu_minus_one > T::zero() { (mu_minus_one * half).powf(eps) } else { T::zero() };
    a - b
}

/// `f_{1/2}(x)` written as `(√(x+1) + √(x-1))/√2`.
pub fn f_half_alt<T: Real>(x: T) -> Result<T> {
    if !(x >= T::one()) {
        return Err(Error::Domain(format!("f_half needs x >= 1, got {x}")));
    }
    Ok(((x + T::one()).sqrt() + (x - T::one()).sqrt()) / T::lit(2.0).sqrt())
}

/// `log f_ε(μ_j)` using the accurate `μ_j - 1`.
fn log_f<T: Real>(sp: &SymplecticSpectrum<T>, j: usize, eps: T) -> T {
    -f_denominator(sp.mu[j], sp.mu_minus_one(j), eps).ln()
}

/// `x log x` with `0 log 0 = 0`.
fn xlogx<T: Real>(x: T) -> T {
    if x > T::zero() {
        x * x.ln()
    } else {
        T::zero()
    }
}

/// Exact ε-Rényi entanglement entropy of the ground state; `ε = 1` is von Neumann.
pub fn ground_renyi<T: Real>(sp: &SymplecticSpectrum<T>, eps: T) -> Result<T> {
    check_eps(eps)?;
    let half = T::lit(0.5);
    if eps == T::one() {
        let mut s = T::zero();
        for j in 0..sp.len() {
            s += xlogx((sp.mu[j] + T::one()) * half) - xlogx(sp.mu_minus_one(j) * half);
        }
        return Ok(s);
    }
    let mut s = T::zero();
    for j in 0..sp.len() {
        s += log_f(sp, j, eps);
    }
    Ok(s / (T::one() - eps))
}

pub fn von_neumann<T: Real>(sp: &SymplecticSpectrum<T>) -> T {
    ground_renyi(sp, T::one()).expect("eps = 1 is valid")
}

/// Logarithmic negativity `N = E_{1/2} = Σ_j log(μ_j + √(μ_j² - 1))`.
pub fn log_negativity<T: Real>(sp: &SymplecticSpectrum<T>) -> T {
    let mut s = T::zero();
    for j in 0..sp.len() {
        s += sp.mu2_minus_one(j).sqrt().asinh();
    }
    s
}

/// Eigenvalue `⟨ρ̂₀⟩_n = Π_j (2/(1+μ_j)) r_j^{n_j}`, `r_j = (μ_j-1)/(μ_j+1)`.
pub fn ground_eigenvalue<T: Real>(sp: &SymplecticSpectrum<T>, n: &[usize]) -> Result<T> {
    check_occupation(sp, n)?;
    Ok((0..sp.len()).fold(T::one(), |acc, j| acc * mode_weight(sp, j, n[j])))
}

fn ratio<T: Real>(sp: &SymplecticSpectrum<T>, j: usize) -> T {
    sp.mu_minus_one(j) / (sp.mu[j] + T::one())
}

fn mode_weight<T: Real>(sp: &SymplecticSpectrum<T>, j: usize, n: usize) -> T {
    T::lit(2.0) / (sp.mu[j] + T::one()) * powu(ratio(sp, j), n)
}

fn powu<T: Real>(x: T, n: usize) -> T {
    match i32::try_from(n) {
        Ok(k) => x.powi(k),
        Err(_) => x.powf(T::from_usize_lossy(n)),
    }
}

fn check_occupation<T: Real>(sp: &SymplecticSpectrum<T>, n: &[usize]) -> Result<()> {
    if n.len() != sp.len() {
        return Err(Error::DimensionMismatch(format!(
            "occupation vector has {} entries, region has {} modes",
            n.len(),
            sp.len()
        )));
    }
    Ok(())
}

/// Data of the single-excitation eigenstate `e_k` relative to the bipartition.
#[derive(Debug, Clone)]
pub struct ExcitationProfile<T: Real> {
    /// 0-based excitation index (ascending frequency order).
    pub k: usize,
    pub gamma: T,
    pub v_in: DVector<T>,
    pub v_out: DVector<T>,
    /// `ν_k = γ_k⁻¹ S (v_k)_{Λ₀}`.
    pub nu: DVector<T>,
    /// `γ_k (v_k)_{Λ₀ᶜ}ᵀ B⁻¹ (v_k)_{Λ₀ᶜ}`.
    pub complement_term: T,
    /// `Q_{k,j}`, one per symplectic mode.
    pub q: DVector<T>,
}

impl<T: Real> ExcitationProfile<T> {
    pub fn q_sum(&self) -> T {
        self.q.sum()
    }
}

/// `G = F₂ᵀ A^{-1/2}`.
fn g_matrix<T: Real>(sp: &SymplecticSpectrum<T>) -> DMatrix<T> {
    sp.f2.transpose() * &sp.a_inv_sqrt
}

pub fn excitation_profile<T: Real>(
    sd: &SpectralData<T>,
    blocks: &BipartitionBlocks<T>,
    sp: &SymplecticSpectrum<T>,
    k: usize,
) -> Result<ExcitationProfile<T>> {
    let size = sd.len();
    if k >= size {
        return Err(Error::IndexOutOfRange { index: k, size });
    }
    let gamma = sd.gammas[k];
    let v = sd.vectors.column(k);
    let v_in = DVector::from_iterator(blocks.inside.len(), blocks.inside.iter().map(|&i| v[i]));
    let v_out = DVector::from_iterator(blocks.outside.len(), blocks.outside.iter().map(|&i| v[i]));
    let nu = &blocks.schur * &v_in / gamma;
    let complement_term = gamma * v_out.dot(&blocks.b_solve_vec(&v_out));
    let g = g_matrix(sp);
    let gn = &g * &nu;
    let gv = &g * &v_in;
    let q = DVector::from_fn(sp.len(), |j, _| gamma * (sp.mu[j] * sp.mu[j] * gn[j] * gn[j] + gv[j] * gv[j]));
    Ok(ExcitationProfile { k, gamma, v_in, v_out, nu, complement_term, q })
}

/// All `Q_{k,j}` at once: row `k`, column `j`.
pub fn q_matrix<T: Real>(sys: &BipartiteSystem<T>) -> DMatrix<T> {
    let sd = &sys.spectral;
    let sp = &sys.symplectic;
    let blocks = &sys.blocks;
    let n = sd.len();
    let v_in = DMatrix::from_fn(blocks.inside.len(), n, |i, k| sd.vectors[(blocks.inside[i], k)]);
    let g = g_matrix(sp);
    let p = &g * &v_in;
    let inv_gamma = DMatrix::from_diagonal(&sd.gammas.map(|g| T::one() / g));
    let nn = &g * &blocks.schur * &v_in * inv_gamma;
    DMatrix::from_fn(n, sp.len(), |k, j| {
        sd.gammas[k] * (sp.mu[j] * sp.mu[j] * nn[(j, k)] * nn[(j, k)] + p[(j, k)] * p[(j, k)])
    })
}

fn clamp_probability<T: Real>(x: T) -> Result<T> {
    if x >= T::zero() {
        Ok(x)
    } else if x >= -T::tol(1e-12, 100.0) {
        Ok(T::zero())
    } else {
        Err(Error::Domain(format!("diagonal entry {x:e} is negative beyond rounding")))
    }
}

/// Weight of mode `j` carrying the `n_j ≥ 1` excitation term:
/// `(2/(μ+1)) (μ-1)^{n-1} / (μ+1)^{n+1} · 2μ n`, finite at `μ = 1`.
fn excited_mode_weight<T: Real>(sp: &SymplecticSpectrum<T>, j: usize, n: usize) -> T {
    let mu = sp.mu[j];
    let p1 = mu + T::one();
    let two = T::lit(2.0);
    two / p1 * powu(sp.mu_minus_one(j), n - 1) / powu(p1, n + 1) * two * mu * T::from_usize_lossy(n)
}

/// Diagonal entry `⟨Ψ_n, ρ̂_{e_k} Ψ_n⟩` of the reduced single-excitation state.
pub fn excited_diagonal<T: Real>(profile: &ExcitationProfile<T>, sp: &SymplecticSpectrum<T>, n: &[usize]) -> Result<T> {
    check_occupation(sp, n)?;
    let m = sp.len();
    let weights: Vec<T> = (0..m).map(|j| mode_weight(sp, j, n[j])).collect();
    let mut base = T::one();
    for j in 0..m {
        base -= sp.mu[j] * profile.q[j] / (sp.mu[j] + T::one());
    }
    let mut total = weights.iter().fold(T::one(), |a, &w| a * w) * base;
    for j in 0..m {
        if n[j] == 0 {
            continue;
        }
        let others = (0..m).filter(|&l| l != j).fold(T::one(), |a, l| a * weights[l]);
        total += others * excited_mode_weight(sp, j, n[j]) * profile.q[j];
    }
    clamp_probability(total)
}

/// Per-mode cutoffs `N_j ≥ 2`: smallest `N` with `r_j^N < 1e-12` whose excited tail
/// `Σ_{n≥N} n r^{n-1} = r^{N-1}(N - (N-1)r)/(1-r)²` is also below `1e-12`.
pub fn occupation_cutoffs<T: Real>(sp: &SymplecticSpectrum<T>) -> Vec<usize> {
    let target = 1e-12f64;
    (0..sp.len())
        .map(|j| {
            let r = ratio(sp, j).as_f64();
            if r <= 0.0 {
                return 2;
            }
            let ok = |n: usize| {
                let nf = n as f64;
                let tail = r.powf(nf - 1.0) * (nf - (nf - 1.0) * r) / ((1.0 - r) * (1.0 - r));
                r.powf(nf) < target && tail < target
            };
            let mut nc = (target.ln() / r.ln()).ceil().clamp(2.0, 1e8) as usize;
            while !ok(nc) && nc < 100_000_000 {
                nc += 1 + nc / 64;
            }
            while nc > 2 && ok(nc - 1) {
                nc -= 1;
            }
            nc
        })
        .collect()
}

/// Sum of the diagonal over the truncation box `0 ≤ n_j < N_j`, in factorized form.
pub fn excited_trace<T: Real>(profile: &ExcitationProfile<T>, sp: &SymplecticSpectrum<T>) -> T {
    let cut = occupation_cutoffs(sp);
    let m = sp.len();
    let t: Vec<T> = (0..m).map(|j| T::one() - powu(ratio(sp, j), cut[j])).collect();
    let mm: Vec<T> = (0..m).map(|j| (1..cut[j]).fold(T::zero(), |a, n| a + excited_mode_weight(sp, j, n))).collect();
    let mut base = T::one();
    for j in 0..m {
        base -= sp.mu[j] * profile.q[j] / (sp.mu[j] + T::one());
    }
    let mut total = t.iter().fold(T::one(), |a, &x| a * x) * base;
    for j in 0..m {
        let others = (0..m).filter(|&l| l != j).fold(T::one(), |a, l| a * t[l]);
        total += profile.q[j] * mm[j] * others;
    }
    total
}

/// Calls `f` on every occupation vector of the box `0 ≤ n_j < cut_j`, last mode fastest.
pub fn for_each_occupation(cut: &[usize], mut f: impl FnMut(&[usize])) {
    if cut.contains(&0) {
        return;
    }
    let mut n = vec![0usize; cut.len()];
    loop {
        f(&n);
        let mut ax = cut.len();
        loop {
            if ax == 0 {
                return;
            }
            ax -= 1;
            n[ax] += 1;
            if n[ax] < cut[ax] {
                break;
            }
            n[ax] = 0;
        }
    }
}

/// ε-Rényi entropy of the diagonal of the reduced excited state (box enumeration).
/// Dominates the ε-Rényi entropy of the state itself for `ε < 1`.
pub fn excited_diagonal_renyi<T: Real>(
    profile: &ExcitationProfile<T>,
    sp: &SymplecticSpectrum<T>,
    eps: T,
    max_states: usize,
) -> Result<T> {
    check_eps(eps)?;
    let cut = occupation_cutoffs(sp);
    let states = cut.iter().try_fold(1usize, |a, &c| a.checked_mul(c));
    match states {
        Some(s) if s <= max_states => {}
        _ => return Err(Error::TooLarge(format!("occupation box {cut:?} exceeds {max_states} states"))),
    }
    let mut acc = T::zero();
    let mut err = None;
    for_each_occupation(&cut, |n| match excited_diagonal(profile, sp, n) {
        Ok(p) => {
            acc += if eps == T::one() { -xlogx(p) } else { p.powf(eps) };
        }
        Err(e) => {
            err.get_or_insert(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if eps == T::one() { acc } else { acc.ln() / (T::one() - eps) })
}

/// The two half-Rényi bounds for one excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitedBound<T> {
    /// `2 log[(1 + Σ_j √Q_{k,j} f_{1/2}(μ_j)) Π_l f_{1/2}(μ_l)]`.
    pub computed: T,
    /// `2N(ρ₀) + 4 log|Λ₀|`, only defined for `|Λ₀| > 1`.
    pub theorem: Option<T>,
}

pub fn excited_half_renyi_bound<T: Real>(
    profile: &ExcitationProfile<T>,
    sp: &SymplecticSpectrum<T>,
) -> ExcitedBound<T> {
    excited_bound_from_q(profile.q.as_slice(), sp)
}

/// Same as [`excited_half_renyi_bound`] from a bare row of weights.
pub fn excited_bound_from_q<T: Real>(q: &[T], sp: &SymplecticSpectrum<T>) -> ExcitedBound<T> {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut sum = T::one();
    let mut log_prod = T::zero();
    for j in 0..sp.len() {
        let lf = log_f(sp, j, half);
        sum += q[j].max(T::zero()).sqrt() * lf.exp();
        log_prod += lf;
    }
    let computed = two * (sum.ln() + log_prod);
    let m = sp.len();
    let theorem = (m > 1).then(|| two * log_negativity(sp) + T::lit(4.0) * T::from_usize_lossy(m).ln());
    ExcitedBound { computed, theorem }
}

/// `log 3 + 2 E_{1/2}(ρ₀)`; requires `|Λ₀|² ≤ |Λ|`.
pub fn ensemble_bound<T: Real>(sp: &SymplecticSpectrum<T>, lattice_size: usize, region_size: usize) -> Result<T> {
    let sq = region_size.checked_mul(region_size);
    if sq.is_none_or(|s| s > lattice_size) {
        return Err(Error::HypothesisViolated(format!(
            "ensemble bound needs |Λ₀|² <= |Λ|, got |Λ₀| = {region_size}, |Λ| = {lattice_size}"
        )));
    }
    Ok(T::lit(3.0).ln() + T::lit(2.0) * ground_renyi(sp, T::lit(0.5))?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcitationRecord {
    pub k: usize,
    pub q_sum: f64,
    pub computed_bound: f64,
    pub theorem_bound: Option<f64>,
}

/// Summary of all entropy quantities for one system.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub eps: Vec<f64>,
    pub renyi: Vec<f64>,
    pub von_neumann: f64,
    pub log_negativity: f64,
    pub excitations: Vec<ExcitationRecord>,
    pub ensemble_bound: Option<f64>,
    pub mu: Vec<f64>,
}

impl EntropyReport {
    /// `excitations` are 0-based indices; the ensemble bound is left empty when its
    /// hypothesis fails.
    pub fn compute<T: Real>(sys: &BipartiteSystem<T>, eps: &[f64], excitations: &[usize]) -> Result<Self> {
        let sp = &sys.symplectic;
        let renyi = eps.iter().map(|&e| ground_renyi(sp, T::lit(e)).map(|v| v.as_f64())).collect::<Result<Vec<_>>>()?;
        let mut recs = Vec::with_capacity(excitations.len());
        for &k in excitations {
            let prof = excitation_profile(&sys.spectral, &sys.blocks, sp, k)?;
            let b = excited_half_renyi_bound(&prof, sp);
            recs.push(ExcitationRecord {
                k,
                q_sum: prof.q_sum().as_f64(),
                computed_bound: b.computed.as_f64(),
                theorem_bound: b.theorem.map(|t| t.as_f64()),
            });
        }
        let ensemble = ensemble_bound(sp, sys.spectral.len(), sp.len()).ok().map(|v| v.as_f64());
        Ok(EntropyReport {
            eps: eps.to_vec(),
            renyi,
            von_neumann: von_neumann(sp).as_f64(),
            log_negativity: log_negativity(sp).as_f64(),
            excitations: recs,
            ensemble_bound: ensemble,
            mu: sp.mu.iter().map(|m| m.as_f64()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{anderson_realization, assemble_anderson, assemble_custom, DisorderModel};
    use crate::lattice::{Lattice, Region};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn chain(n: usize) -> Arc<Lattice> {
        Arc::new(Lattice::build_box(1, &[n]).unwrap())
    }

    fn two_site() -> BipartiteSystem<f64> {
        let lat = chain(2);
        let h = assemble_anderson(lat.clone(), &[1.0, 1.0]).unwrap();
        BipartiteSystem::new(&h, &Region::from_indices(lat, &[0]).unwrap()).unwrap()
    }

    fn decoupled_two_site() -> BipartiteSystem<f64> {
        let lat = chain(2);
        let h = assemble_custom(lat.clone(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 3.0])).unwrap();
        BipartiteSystem::new(&h, &Region::from_indices(lat, &[0]).unwrap()).unwrap()
    }

    fn random_system(seed: u64, n: usize, inside: &[usize]) -> BipartiteSystem<f64> {
        let lat = chain(n);
        let h = anderson_realization(lat.clone(), &DisorderModel::new(8.0, seed).unwrap(), 0).unwrap();
        BipartiteSystem::new(&h, &Region::from_indices(lat, inside).unwrap()).unwrap()
    }

    #[test]
    fn f_eps_examples() {
        assert_eq!(f_eps(1.0, 0.3).unwrap(), 1.0);
        assert_relative_eq!(f_eps(1.25, 0.5).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        for x in [1.1, 2.0, 10.0] {
            let f = f_eps(x, 0.5).unwrap();
            assert!(f <= (x * x - 1.0f64).sqrt() + 1.0);
            assert_relative_eq!(f, f_half_alt(x).unwrap(), epsilon = 1e-13);
        }
        assert!(matches!(f_eps(0.9, 0.5), Err(Error::Domain(_))));
        assert!(f_eps(2.0, 1.0).is_err());
    }

    #[test]
    fn ground_entropies_two_site() {
        let sys = two_site();
        let mu = sys.symplectic.mu[0];
        let lf = f_eps(mu, 0.5).unwrap().ln();
        assert_relative_eq!(lf, 0.1373, epsilon = 1e-4);
        let e_half = ground_renyi(&sys.symplectic, 0.5).unwrap();
        assert_relative_eq!(e_half, 2.0 * lf, epsilon = 1e-14);
        assert_relative_eq!(log_negativity(&sys.symplectic), e_half, epsilon = 1e-14);
        assert!(ground_renyi(&sys.symplectic, 0.0).is_err());
        assert!(ground_renyi(&sys.symplectic, 1.5).is_err());
    }

    #[test]
    fn product_state_has_no_entropy() {
        let sp = SymplecticSpectrum::<f64>::from_mu(&[1.0, 1.0, 1.0]).unwrap();
        for e in [0.1, 0.5, 0.9, 1.0] {
            assert_eq!(ground_renyi(&sp, e).unwrap(), 0.0);
        }
        assert_eq!(log_negativity(&sp), 0.0);
    }

    #[test]
    fn log_negativity_at_five_quarters() {
        let sp = SymplecticSpectrum::<f64>::from_mu(&[1.25]).unwrap();
        assert_relative_eq!(log_negativity(&sp), 2f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(ground_renyi(&sp, 0.5).unwrap(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn renyi_monotone_single_mode() {
        let sp = SymplecticSpectrum::<f64>::from_mu(&[1.5]).unwrap();
        let v: Vec<f64> = [0.3, 0.5, 0.9, 1.0].iter().map(|&e| ground_renyi(&sp, e).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn decoupled_profiles() {
        let sys = decoupled_two_site();
        let sp = &sys.symplectic;
        // k = 0 is the mode on site 0 (γ² = 0.5)
        let p = excitation_profile(&sys.spectral, &sys.blocks, sp, 0).unwrap();
        assert_relative_eq!(p.nu[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.q[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(excited_diagonal(&p, sp, &[0]).unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(excited_diagonal(&p, sp, &[1]).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(excited_diagonal(&p, sp, &[2]).unwrap(), 0.0);
        let b = excited_half_renyi_bound(&p, sp);
        assert_relative_eq!(b.computed, 2.0 * (1.0 + 2f64.sqrt()).ln(), epsilon = 1e-14);
        assert!(b.theorem.is_none());

        let p = excitation_profile(&sys.spectral, &sys.blocks, sp, 1).unwrap();
        assert_eq!(p.nu[0], 0.0);
        assert_eq!(p.q[0], 0.0);
        assert_eq!(excited_half_renyi_bound(&p, sp).computed, 0.0);
        assert_relative_eq!(excited_diagonal(&p, sp, &[0]).unwrap(), 1.0, epsilon = 1e-14);

        assert!(matches!(excitation_profile(&sys.spectral, &sys.blocks, sp, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn ground_eigenvalues_two_site() {
        let sys = two_site();
        let mu = sys.symplectic.mu[0];
        assert_relative_eq!(ground_eigenvalue(&sys.symplectic, &[0]).unwrap(), 2.0 / (1.0 + mu), epsilon = 1e-15);
        assert_relative_eq!(ground_eigenvalue(&sys.symplectic, &[0]).unwrap(), 0.981_376_01, epsilon = 1e-8);
        assert!(ground_eigenvalue(&sys.symplectic, &[0, 0]).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let sp = SymplecticSpectrum::<f64>::from_mu(&[1.0; 3]).unwrap();
        assert_relative_eq!(ensemble_bound(&sp, 9, 3).unwrap(), 3f64.ln(), epsilon = 1e-15);
        let sp4 = SymplecticSpectrum::<f64>::from_mu(&[1.0; 4]).unwrap();
        assert!(matches!(ensemble_bound(&sp4, 9, 4), Err(Error::HypothesisViolated(_))));

        let inside: Vec<usize> = (45..55).collect();
        let sys = random_system(3, 100, &inside);
        let e = ensemble_bound(&sys.symplectic, 100, 10).unwrap();
        assert!(e.is_finite());
        assert_relative_eq!(e, 3f64.ln() + 2.0 * ground_renyi(&sys.symplectic, 0.5).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn q_column_sums() {
        let sys = random_system(11, 10, &[3, 4, 5, 6]);
        let q = q_matrix(&sys);
        for j in 0..4 {
            assert_relative_eq!(q.column(j).sum(), 2.0, epsilon = 1e-8);
        }
        for k in 0..10 {
            let p = excitation_profile(&sys.spectral, &sys.blocks, &sys.symplectic, k).unwrap();
            assert_relative_eq!(p.q, q.row(k).transpose(), epsilon = 1e-12);
        }
    }

    #[test]
    fn trace_by_enumeration_matches_factorized() {
        let sys = random_system(5, 8, &[2, 3, 4]);
        let sp = &sys.symplectic;
        for k in 0..8 {
            let p = excitation_profile(&sys.spectral, &sys.blocks, sp, k).unwrap();
            let cut = occupation_cutoffs(sp);
            let mut s = 0.0;
            for_each_occupation(&cut, |n| s += excited_diagonal(&p, sp, n).unwrap());
            assert_relative_eq!(s, excited_trace(&p, sp), epsilon = 1e-12);
            assert_relative_eq!(s, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn diagonal_renyi_dominated_by_bound() {
        let sys = random_system(9, 8, &[3, 4]);
        let sp = &sys.symplectic;
        for k in 0..8 {
            let p = excitation_profile(&sys.spectral, &sys.blocks, sp, k).unwrap();
            let d = excited_diagonal_renyi(&p, sp, 0.5, 1_000_000).unwrap();
            let b = excited_half_renyi_bound(&p, sp);
            assert!(d <= b.computed + 1e-12, "k={k}: {d} > {}", b.computed);
            assert!(b.computed <= b.theorem.unwrap());
        }
    }

    #[test]
    fn occupation_enumeration_order() {
        let mut seen = Vec::new();
        for_each_occupation(&[2, 3], |n| seen.push(n.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 1]);
        assert_eq!(seen[5], vec![1, 2]);
    }

    #[test]
    fn report_fields() {
        let sys = random_system(1, 12, &[4, 5, 6]);
        let r = EntropyReport::compute(&sys, &[0.5, 0.75, 1.0], &[0, 5]).unwrap();
        assert_eq!(r.renyi.len(), 3);
        assert!(r.renyi[0] >= r.renyi[1] && r.renyi[1] >= r.renyi[2]);
        assert_relative_eq!(r.renyi[2], r.von_neumann, epsilon = 1e-15);
        assert_relative_eq!(r.renyi[0], r.log_negativity, epsilon = 1e-12);
        assert!(r.ensemble_bound.is_some());
        assert_eq!(r.excitations.len(), 2);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"log_negativity\""));
    }

    #[test]
    fn f32_entropies_track_f64() {
        let lat = chain(6);
        let h64 = anderson_realization::<f64>(lat.clone(), &DisorderModel::new(2.0, 4).unwrap(), 0).unwrap();
        let r = Region::from_indices(lat, &[2, 3]).unwrap();
        let s64 = BipartiteSystem::new(&h64, &r).unwrap();
        let s32 = BipartiteSystem::new(&h64.cast::<f32>(), &r).unwrap();
        let e64 = ground_renyi(&s64.symplectic, 0.5).unwrap();
        let e32 = ground_renyi(&s32.symplectic, 0.5f32).unwrap();
        assert!((e64 - e32 as f64).abs() < 1e-4 * e64.max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn renyi_chain_and_limit(mus in prop::collection::vec(1.0f64..20.0, 1..8)) {
            let sp = SymplecticSpectrum::from_mu(&mus).unwrap();
            let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
            let vals: Vec<f64> = grid.iter().map(|&e| ground_renyi(&sp, e).unwrap()).collect();
            for w in vals.windows(2) {
                prop_assert!(w[0] >= w[1] - 1e-12);
            }
            let near = ground_renyi(&sp, 1.0 - 1e-6).unwrap();
            prop_assert!((near - vals[9]).abs() <= 1e-4);
            let ln = log_negativity(&sp);
            prop_assert!((ln - ground_renyi(&sp, 0.5).unwrap()).abs() <= 1e-12 * ln.max(1.0));
            for m in &mus {
                prop_assert!((f_eps(*m, 0.5).unwrap() - f_half_alt(*m).unwrap()).abs() <= 1e-12 * m);
            }
        }

        #[test]
        fn profile_invariants(seed in any::<u64>(), start in 0usize..8, len in 1usize..6) {
            let inside: Vec<usize> = (start..start + len).collect();
            let sys = random_system(seed, 14, &inside);
            let sp = &sys.symplectic;
            let s_inv = sys.blocks.schur.clone().try_inverse().unwrap();
            let q = q_matrix(&sys);
            for k in 0..14 {
                let p = excitation_profile(&sys.spectral, &sys.blocks, sp, k).unwrap();
                prop_assert!(p.q.iter().all(|&x| x >= 0.0));
                prop_assert!(p.q_sum() <= 2.0 + 1e-9);
                let id = p.gamma * p.nu.dot(&(&s_inv * &p.nu)) + p.complement_term;
                prop_assert!((id - 1.0).abs() <= 1e-8);
                prop_assert!((excited_trace(&p, sp) - 1.0).abs() <= 1e-6);
                let b = excited_half_renyi_bound(&p, sp);
                let m = sp.len() as f64;
                prop_assert!(b.computed <= 2.0 * log_negativity(sp) + 2.0 * (1.0 + 2f64.sqrt() * m).ln() + 1e-12);
                if let Some(t) = b.theorem {
                    prop_assert!(b.computed <= t);
                }
            }
            for j in 0..sp.len() {
                prop_assert!((q.column(j).sum() - 2.0).abs() <= 1e-8);
            }
        }
    }
}
