//! Gauss–Hermite and Gauss–Legendre rules.

use crate::error::{Error, Result};

/// Largest Gauss–Hermite order supported (node magnitudes stay within f64 range).
pub const MAX_HERMITE_ORDER: usize = 480;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    /// Weight-stripped Gauss–Hermite: integrates `f` over R directly.
    Hermite,
    /// Gauss–Legendre on `[-half_width, half_width]`.
    Legendre { half_width: f64 },
}

/// Nodes and weights with `∫ f ≈ Σ_i w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss–Hermite nodes with weights `w_i e^{x_i²}`, so that `∫_R f(x) dx ≈ Σ w_i f(x_i)`
    /// for `f` decaying like a Gaussian.
    pub fn hermite(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_HERMITE_ORDER {
            return Err(Error::Quadrature(format!(
                "Gauss-Hermite order must be in 1..={MAX_HERMITE_ORDER}, got {order}"
            )));
        }
        let n = order;
        let m = n.div_ceil(2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut roots: Vec<f64> = Vec::with_capacity(m);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * roots[0],
                3 => 1.91 * z - 0.91 * roots[1],
                _ => 2.0 * z - roots[i - 2],
            };
            let mut converged = false;
            for _ in 0..200 {
                let (phi_n, phi_nm1) = hermite_function_pair(n, z);
                let dphi = (2.0 * nf).sqrt() * phi_nm1 - z * phi_n;
                let dz = phi_n / dphi;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Quadrature(format!("Hermite root {i} of order {n} did not converge")));
            }
            roots.push(z);
            let (_, phi_nm1) = hermite_function_pair(n, z);
            let w = 1.0 / (nf * phi_nm1 * phi_nm1);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        Ok(QuadratureRule { kind: RuleKind::Hermite, order: n, nodes, weights })
    }

    /// Gauss–Legendre rule on `[-half_width, half_width]`.
    pub fn legendre(order: usize, half_width: f64) -> Result<Self> {
        if order == 0 || !(half_width > 0.0) {
            return Err(Error::Quadrature("Gauss-Legendre needs order >= 1 and a positive width".into()));
        }
        let n = order;
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, pm1) = legendre_pair(n, z);
                dp = nf * (z * p - pm1) / (z * z - 1.0);
                let dz = p / dp;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let (p, pm1) = legendre_pair(n, z);
            dp = if (z * z - 1.0).abs() > 0.0 { nf * (z * p - pm1) / (z * z - 1.0) } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z * half_width;
            nodes[n - 1 - i] = z * half_width;
            weights[i] = w * half_width;
            weights[n - 1 - i] = w * half_width;
        }
        Ok(QuadratureRule { kind: RuleKind::Legendre { half_width }, order: n, nodes, weights })
    }

    /// `Σ_i w_i f(x_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Nodes `c + s·x_i` and weights `s·w_i` for the substitution `y = c + s x`.
    pub fn affine(&self, center: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
        (self.nodes.iter().map(|&x| center + scale * x).collect(), self.weights.iter().map(|&w| scale * w).collect())
    }
}

/// `(φ_n(x), φ_{n-1}(x))` for the orthonormal Hermite functions.
fn hermite_function_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `(P_n(x), P_{n-1}(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}
