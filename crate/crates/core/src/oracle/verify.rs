//! Closed forms checked against quadrature: the suite behind the `verify` command.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bruteforce::{BruteForce, State};
use super::gaussian::generalized_gaussian_integral;
use super::hermite::hg_functions;
use super::kernel::{moment_closed_forms, moment_integrals, numeric_trace, t_sigma_eigencheck, GaussKernel};
use super::quadrature::QuadratureRule;
use crate::entanglement::{excitation_profile, excited_diagonal, for_each_occupation, ground_eigenvalue};
use crate::error::Result;
use crate::hamiltonian::{anderson_realization, DisorderModel};
use crate::lattice::{Lattice, Region};
use crate::spectral::BipartiteSystem;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Replaces every per-row tolerance when set.
    pub tolerance: Option<f64>,
    pub seed: u64,
    /// Include the (slower) formula-versus-brute-force rows.
    pub bruteforce: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tolerance: None, seed: 20_240_601, bruteforce: true }
    }
}

struct Row {
    name: &'static str,
    cases: usize,
    max_error: f64,
    tolerance: f64,
    ok: bool,
}

impl Row {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Row { name, cases: 0, max_error: 0.0, tolerance, ok: true }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        if err.is_nan() {
            self.max_error = f64::NAN;
        } else if !self.max_error.is_nan() {
            self.max_error = self.max_error.max(err);
        }
    }

    fn finish(self, over: Option<f64>) -> VerifyRow {
        let tol = over.unwrap_or(self.tolerance);
        VerifyRow {
            name: self.name.to_string(),
            cases: self.cases,
            max_error: self.max_error,
            tolerance: tol,
            passed: self.ok && self.max_error <= tol,
        }
    }
}

const SIGMAS: [f64; 3] = [-0.9, -0.5, -0.1];

/// Runs every row; an `Err` means a quadrature could not even be set up.
pub fn run_verification(opts: &VerifyOptions) -> Result<Vec<VerifyRow>> {
    let over = opts.tolerance;
    let mut rows = Vec::new();

    let mut r = Row::new("gauss-hermite normalization", 1e-12);
    for order in [40, 120, 480] {
        let q = QuadratureRule::hermite(order)?;
        r.record((q.integrate(|x| (-x * x).exp()) - std::f64::consts::PI.sqrt()).abs());
    }
    rows.push(r.finish(over));

    let mut r = Row::new("hermite-gaussian orthonormality", 1e-10);
    let q = QuadratureRule::hermite(120)?;
    for gamma in [0.3, 1.0, 2.5] {
        let (xs, ws) = q.affine(0.0, 1.0 / f64::sqrt(gamma));
        let vals: Vec<Vec<f64>> = xs.iter().map(|&x| hg_functions(20, gamma, x)).collect();
        for a in 0..=20 {
            for b in a..=20 {
                let ip: f64 = vals.iter().zip(&ws).map(|(v, w)| w * v[a] * v[b]).sum();
                r.record((ip - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    rows.push(r.finish(over));

    let mut r = Row::new("gaussian kernel eigenpairs", 1e-8);
    for s in SIGMAS {
        let k = GaussKernel::new(s)?;
        for n in 0..=10 {
            let c = t_sigma_eigencheck(&k, n, 120)?;
            r.ok &= c.converged;
            r.record(c.residual);
        }
    }
    rows.push(r.finish(over));

    let mut r = Row::new("gaussian kernel trace", 1e-10);
    for s in SIGMAS {
        let k = GaussKernel::new(s)?;
        let ratio = -s / (1.0 + k.kappa);
        r.record((k.xi(0) / (1.0 - ratio) - k.trace()).abs());
        r.record((numeric_trace(&k, 120)? - k.trace()).abs());
    }
    rows.push(r.finish(over));

    let mut rx = Row::new("moment <T^x>_n", 1e-8);
    let mut rxx = Row::new("moment <T^xx>_n", 1e-8);
    let mut rxy = Row::new("moment <T^xy>_n", 1e-8);
    for s in SIGMAS {
        let k = GaussKernel::new(s)?;
        for n in 0..=8 {
            let num = moment_integrals(&k, n, 80)?;
            let cf = moment_closed_forms(&k, n);
            rx.record(num.m_x.abs());
            rxx.record((num.m_xx - cf.m_xx).abs());
            rxy.record((num.m_xy - super::kernel::m_xy_mu_form(&k, n)?).abs());
        }
    }
    rows.extend([rx.finish(over), rxx.finish(over), rxy.finish(over)]);

    let mut r = Row::new("generalized gaussian integrals", 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for i in 0..50 {
        let n = 1 + i % 3;
        let (a, j, k) = random_instance(&mut rng, n);
        for c in generalized_gaussian_integral(&a, &j, &k, 6, 48)? {
            r.record(c.relative_error);
        }
    }
    rows.push(r.finish(over));

    if opts.bruteforce {
        let (g, d) = bruteforce_rows(opts.seed)?;
        rows.push(g.finish(over));
        rows.push(d.finish(over));
    }
    Ok(rows)
}

/// Random SPD `A` with spectrum in `[0.5, 2]`, and `J`, `K` with entries in `[-1, 1]`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = m.qr().q();
    let d = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    let a = &q * DMatrix::from_diagonal(&d) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let j = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let k = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (a, j, k)
}

fn bruteforce_rows(seed: u64) -> Result<(Row, Row)> {
    let mut ground = Row::new("ground eigenvalues vs brute force", 1e-6);
    let mut diag = Row::new("excited diagonal vs brute force", 1e-6);
    for (sites, inside) in [(2usize, vec![0usize]), (3, vec![1]), (3, vec![0, 1])] {
        let lat = Arc::new(Lattice::build_box(1, &[sites])?);
        let h = anderson_realization::<f64>(lat.clone(), &DisorderModel::new(2.0, seed)?, 0)?;
        let sys = BipartiteSystem::new(&h, &Region::from_indices(lat, &inside)?)?;
        let (g, d) = compare_with_bruteforce(&sys, 3)?;
        ground.record(g);
        diag.record(d);
    }
    Ok((ground, diag))
}

/// Largest discrepancies `(ground eigenvalues, excited diagonals)` between the closed forms
/// and brute-force quadrature over the box `n_j < nmax`, for all excitations.
pub fn compare_with_bruteforce(sys: &BipartiteSystem<f64>, nmax: usize) -> Result<(f64, f64)> {
    let bf = BruteForce::new(sys)?;
    let sp = &sys.symplectic;
    let mut states = vec![State::Ground];
    states.extend((0..sys.spectral.len()).map(State::Excited));
    let table = bf.diagonal(&states, nmax, 40, 1e-9)?;
    let profiles = (0..sys.spectral.len())
        .map(|k| excitation_profile(&sys.spectral, &sys.blocks, sp, k))
        .collect::<Result<Vec<_>>>()?;
    let cut = vec![nmax; sp.len()];
    let mut g_err = 0.0f64;
    let mut d_err = 0.0f64;
    let mut pos = 0;
    let mut failure = None;
    for_each_occupation(&cut, |n| {
        match ground_eigenvalue(sp, n) {
            Ok(v) => g_err = g_err.max((v - table[0][pos]).abs()),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
        for (k, p) in profiles.iter().enumerate() {
            match excited_diagonal(p, sp, n) {
                Ok(v) => d_err = d_err.max((v - table[k + 1][pos]).abs()),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        pos += 1;
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((g_err, d_err))
}
