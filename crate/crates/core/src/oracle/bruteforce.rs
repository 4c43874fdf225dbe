//! Direct quadrature of reduced states on systems with at most three sites.

use nalgebra::{DMatrix, DVector};

use super::hermite::hg_functions;
use super::quadrature::QuadratureRule;
use crate::entanglement::for_each_occupation;
use crate::error::{Error, Result};
use crate::spectral::BipartiteSystem;

/// Nodes, weights and Hermite-function values along one quadrature axis.
type Axis = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

/// Largest system handled by tensor quadrature.
pub const MAX_SITES: usize = 3;

/// Which eigenstate: the ground state or the single excitation of mode `k` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Ground,
    Excited(usize),
}

/// The eigenfunctions `Ψ̂_α` and the change of variables for one bipartite system.
#[derive(Debug, Clone)]
pub struct BruteForce {
    hsqrt: DMatrix<f64>,
    norm: f64,
    gammas: DVector<f64>,
    vectors: DMatrix<f64>,
    inside: Vec<usize>,
    outside: Vec<usize>,
    f: DMatrix<f64>,
    kappa: Vec<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    schur: DMatrix<f64>,
}

impl BruteForce {
    pub fn new(sys: &BipartiteSystem<f64>) -> Result<Self> {
        let n = sys.spectral.len();
        if n > MAX_SITES {
            return Err(Error::TooLarge(format!("brute force supports at most {MAX_SITES} sites, got {n}")));
        }
        let det = sys.spectral.gammas.iter().product::<f64>();
        Ok(BruteForce {
            hsqrt: sys.hsqrt.clone(),
            norm: std::f64::consts::PI.powf(-(n as f64) / 4.0) * det.powf(0.25),
            gammas: sys.spectral.gammas.clone(),
            vectors: sys.spectral.vectors.clone(),
            inside: sys.blocks.inside.clone(),
            outside: sys.blocks.outside.clone(),
            f: sys.symplectic.f.clone(),
            kappa: sys.symplectic.kappa.iter().copied().collect(),
            a: sys.blocks.a.clone(),
            b: sys.blocks.b.clone(),
            c: sys.blocks.c.clone(),
            schur: sys.blocks.schur.clone(),
        })
    }

    fn sites(&self) -> usize {
        self.hsqrt.nrows()
    }

    /// `Ψ̂_α(z) = π^{-|Λ|/4} det(h^{1/2})^{1/4} e^{-zᵀh^{1/2}z/2}`, times `√(2γ_k) v_kᵀz`
    /// for the excitation of mode `k`.
    pub fn psi_hat(&self, z: &DVector<f64>, state: State) -> f64 {
        let g = self.norm * (-0.5 * z.dot(&(&self.hsqrt * z))).exp();
        match state {
            State::Ground => g,
            State::Excited(k) => g * (2.0 * self.gammas[k]).sqrt() * self.vectors.column(k).dot(z),
        }
    }

    fn check_states(&self, states: &[State]) -> Result<()> {
        for s in states {
            if let State::Excited(k) = s {
                if *k >= self.sites() {
                    return Err(Error::IndexOutOfRange { index: *k, size: self.sites() });
                }
            }
        }
        Ok(())
    }

    /// `⟨Ψ_n^{(κ)}, ρ̂_{α,Λ₀} Ψ_n^{(κ)}⟩` for every `n` in the box `n_j < nmax`, in
    /// [`for_each_occupation`] order, at a fixed Gauss–Hermite order per axis.
    ///
    /// Uses `⟨Ψ_n, ρ̂ Ψ_n⟩ = ∫ g_n(u)² du` with
    /// `g_n(u) = ∫ |det F|^{1/2} Ψ̂_α((Fx, u)) Ψ_n^{(κ)}(x) dx`.
    pub fn diagonal_at_order(&self, states: &[State], nmax: usize, order: usize) -> Result<Vec<Vec<f64>>> {
        self.check_states(states)?;
        let m = self.inside.len();
        let c = self.outside.len();
        if m == 0 || c == 0 || m > 2 {
            return Err(Error::TooLarge(
                "brute-force diagonal needs 1 or 2 inside sites and a nonempty complement".into(),
            ));
        }
        let rule = QuadratureRule::hermite(order)?;
        let sqrt_det_f = self.f.determinant().abs().sqrt();

        // Gaussian part of the (x, u) integrand: [[FᵀAF + K, FᵀC], [CᵀF, B]].
        let fafk =
            self.f.transpose() * &self.a * &self.f + DMatrix::from_diagonal(&DVector::from_vec(self.kappa.clone()));
        let fc = self.f.transpose() * &self.c;
        let fafk_inv = fafk
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular Gaussian block in brute force".into()))?;
        let shift_map = -&fafk_inv * &fc;
        let mu_mat = &self.b - fc.transpose() * &fafk_inv * &fc;
        let x_scale: Vec<f64> = (0..m).map(|j| (2.0 / fafk[(j, j)]).sqrt()).collect();
        let u_scale: Vec<f64> = (0..c)
            .map(|i| {
                let d = if mu_mat[(i, i)] > 0.0 { mu_mat[(i, i)] } else { self.b[(i, i)] };
                1.0 / d.sqrt()
            })
            .collect();

        let cut = vec![nmax; m];
        let nstates = nmax.pow(m as u32);
        let mut acc = vec![vec![0.0; nstates]; states.len()];
        let mut z = DVector::zeros(self.sites());

        let mut uidx = vec![0usize; c];
        let mut u = DVector::zeros(c);
        loop {
            let mut wu = 1.0;
            for i in 0..c {
                u[i] = u_scale[i] * rule.nodes[uidx[i]];
                wu *= u_scale[i] * rule.weights[uidx[i]];
            }
            let shift = &shift_map * &u;
            // per-axis nodes, weights and Hermite–Gaussian values ψ_n^{(κ_j)}
            let axes: Vec<Axis> = (0..m)
                .map(|j| {
                    let (xs, ws) = rule.affine(shift[j], x_scale[j]);
                    let phis = xs.iter().map(|&x| hg_functions(nmax - 1, self.kappa[j], x)).collect();
                    (xs, ws, phis)
                })
                .collect();
            for (&o, i) in self.outside.iter().zip(0..) {
                z[o] = u[i];
            }
            let mut g: Vec<Vec<f64>> = vec![vec![0.0; nstates]; states.len()];
            let mut x = DVector::zeros(m);
            if m == 1 {
                let (xs, ws, phis) = &axes[0];
                for a in 0..order {
                    x[0] = xs[a];
                    let fx = &self.f * &x;
                    z[self.inside[0]] = fx[0];
                    for (s, st) in states.iter().enumerate() {
                        let v = ws[a] * sqrt_det_f * self.psi_hat(&z, *st);
                        for n in 0..nmax {
                            g[s][n] += v * phis[a][n];
                        }
                    }
                }
            } else {
                let (x0, w0, p0) = &axes[0];
                let (x1, w1, p1) = &axes[1];
                let phi0 = DMatrix::from_fn(nmax, order, |n, a| p0[a][n]);
                let phi1 = DMatrix::from_fn(nmax, order, |n, b| p1[b][n]);
                let mut vals: Vec<DMatrix<f64>> = vec![DMatrix::zeros(order, order); states.len()];
                for a in 0..order {
                    for b in 0..order {
                        x[0] = x0[a];
                        x[1] = x1[b];
                        let fx = &self.f * &x;
                        z[self.inside[0]] = fx[0];
                        z[self.inside[1]] = fx[1];
                        let w = w0[a] * w1[b] * sqrt_det_f;
                        for (s, st) in states.iter().enumerate() {
                            vals[s][(a, b)] = w * self.psi_hat(&z, *st);
                        }
                    }
                }
                for s in 0..states.len() {
                    let gm = &phi0 * &vals[s] * phi1.transpose();
                    let mut pos = 0;
                    for_each_occupation(&cut, |n| {
                        g[s][pos] = gm[(n[0], n[1])];
                        pos += 1;
                    });
                }
            }
            for s in 0..states.len() {
                for p in 0..nstates {
                    acc[s][p] += wu * g[s][p] * g[s][p];
                }
            }

            let mut ax = c;
            loop {
                if ax == 0 {
                    return Ok(acc);
                }
                ax -= 1;
                uidx[ax] += 1;
                if uidx[ax] < order {
                    break;
                }
                uidx[ax] = 0;
            }
        }
    }

    /// [`Self::diagonal_at_order`] with the order doubled from `start` (40, 80, 160, ...)
    /// until two successive tables agree to `tol`; returns the finer table.
    pub fn diagonal(&self, states: &[State], nmax: usize, start: usize, tol: f64) -> Result<Vec<Vec<f64>>> {
        let mut order = start;
        let mut prev = self.diagonal_at_order(states, nmax, order)?;
        loop {
            let next_order = order * 2;
            if next_order > 320 {
                return Err(Error::Quadrature(format!("brute-force diagonal unresolved at order {order}")));
            }
            let next = self.diagonal_at_order(states, nmax, next_order)?;
            let diff = prev.iter().flatten().zip(next.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if diff <= tol {
                return Ok(next);
            }
            prev = next;
            order = next_order;
        }
    }

    /// Singular values of the discretized wavefunction `√w_a Ψ̂(x_a, u_b) √w_b`
    /// (Schmidt coefficients), at a fixed order per axis.
    pub fn schmidt_at_order(&self, state: State, order: usize) -> Result<Vec<f64>> {
        self.check_states(&[state])?;
        let m = self.inside.len();
        let c = self.outside.len();
        if m == 0 || c == 0 {
            return Err(Error::InvalidArgument("bipartition has an empty side".into()));
        }
        let rule = QuadratureRule::hermite(order)?;
        // inside marginal ~ e^{-xᵀSx}, outside marginal ~ e^{-uᵀ(B - CᵀA⁻¹C)u}
        let a_inv = self.a.clone().try_inverse().ok_or_else(|| Error::Degenerate("A is singular".into()))?;
        let b_schur = &self.b - self.c.transpose() * a_inv * &self.c;
        let grid = |idx: &[usize], scales: &[f64]| -> (Vec<f64>, f64) {
            let mut pts = Vec::with_capacity(idx.len());
            let mut w = 1.0;
            for (i, &k) in idx.iter().enumerate() {
                pts.push(scales[i] * rule.nodes[k]);
                w *= scales[i] * rule.weights[k];
            }
            (pts, w)
        };
        let in_scale: Vec<f64> = (0..m).map(|i| 1.0 / self.schur[(i, i)].sqrt()).collect();
        let out_scale: Vec<f64> = (0..c).map(|i| 1.0 / b_schur[(i, i)].sqrt()).collect();
        let rows = order.pow(m as u32);
        let cols = order.pow(c as u32);
        let unflatten = |mut p: usize, d: usize| -> Vec<usize> {
            let mut v = vec![0; d];
            for i in (0..d).rev() {
                v[i] = p % order;
                p /= order;
            }
            v
        };
        let mut mat = DMatrix::zeros(rows, cols);
        let mut z = DVector::zeros(self.sites());
        for r in 0..rows {
            let (xs, wx) = grid(&unflatten(r, m), &in_scale);
            for (i, &s) in self.inside.iter().enumerate() {
                z[s] = xs[i];
            }
            for q in 0..cols {
                let (us, wu) = grid(&unflatten(q, c), &out_scale);
                for (i, &s) in self.outside.iter().enumerate() {
                    z[s] = us[i];
                }
                mat[(r, q)] = (wx * wu).sqrt() * self.psi_hat(&z, state);
            }
        }
        let sv = if rows >= cols { mat.singular_values() } else { mat.transpose().singular_values() };
        let mut v: Vec<f64> = sv.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        Ok(v)
    }

    /// Brute-force Rényi entropies `(1/(1-ε)) log Σ c_i^{2ε}` (von Neumann at `ε = 1`),
    /// doubling the order from `start` until all values move by less than `tol`.
    pub fn schmidt_entropies(&self, state: State, eps: &[f64], start: usize, tol: f64) -> Result<Vec<f64>> {
        let entropies = |sv: &[f64]| -> Vec<f64> {
            eps.iter()
                .map(|&e| {
                    if e == 1.0 {
                        -sv.iter().map(|s| s * s).filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
                    } else {
                        sv.iter().map(|s| (s * s).powf(e)).sum::<f64>().ln() / (1.0 - e)
                    }
                })
                .collect()
        };
        let mut order = start;
        let mut prev = entropies(&self.schmidt_at_order(state, order)?);
        loop {
            order *= 2;
            if order.pow(self.sites() as u32 - 1) > 20_000 || order > 160 {
                return Err(Error::Quadrature("Schmidt decomposition unresolved".into()));
            }
            let next = entropies(&self.schmidt_at_order(state, order)?);
            if prev.iter().zip(&next).all(|(a, b)| (a - b).abs() <= tol) {
                return Ok(next);
            }
            prev = next;
        }
    }
}

/// Diagonal entry `⟨Ψ_n^{(κ)}, ρ̂_{α,Λ₀} Ψ_n^{(κ)}⟩` for one occupation vector.
pub fn reduced_state_bruteforce(sys: &BipartiteSystem<f64>, state: State, n: &[usize]) -> Result<f64> {
    let bf = BruteForce::new(sys)?;
    if n.len() != sys.blocks.inside.len() {
        return Err(Error::DimensionMismatch("occupation vector does not match the region".into()));
    }
    let nmax = n.iter().copied().max().unwrap_or(0) + 1;
    let table = bf.diagonal(&[state], nmax, 40, 1e-9)?;
    let mut pos = 0;
    let mut found = None;
    for_each_occupation(&vec![nmax; n.len()], |v| {
        if v == n {
            found = Some(pos);
        }
        pos += 1;
    });
    Ok(table[0][found.expect("n lies in its own box")])
}
