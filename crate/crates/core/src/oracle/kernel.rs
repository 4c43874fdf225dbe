//! The Gaussian kernel `T_σ(x,y) = e^{-(x² + 2σxy + y²)/2}`: eigenpairs and moment integrals.

use serde::Serialize;

use super::hermite::hg_functions;
use super::quadrature::{QuadratureRule, MAX_HERMITE_ORDER};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussKernel {
    pub sigma: f64,
    pub kappa: f64,
}

impl GaussKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.abs() < 1.0) {
            return Err(Error::Domain(format!("kernel needs |sigma| < 1, got {sigma}")));
        }
        Ok(GaussKernel { sigma, kappa: (1.0 - sigma * sigma).sqrt() })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (-0.5 * (x * x + 2.0 * self.sigma * x * y + y * y)).exp()
    }

    /// `ξ_n = √(2π/(1+κ)) (-σ/(1+κ))^n`.
    pub fn xi(&self, n: usize) -> f64 {
        let base = (2.0 * std::f64::consts::PI / (1.0 + self.kappa)).sqrt();
        if n == 0 {
            return base;
        }
        base * (-self.sigma / (1.0 + self.kappa)).powi(n as i32)
    }

    /// `Tr T_σ = √(π/(1+σ))`.
    pub fn trace(&self) -> f64 {
        (std::f64::consts::PI / (1.0 + self.sigma)).sqrt()
    }

    /// `μ` with `μ² = (1-σ)/(1+σ)`.
    pub fn mu(&self) -> f64 {
        ((1.0 - self.sigma) / (1.0 + self.sigma)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCheck {
    pub residual: f64,
    pub xi: f64,
    /// Change of the computed integrals when the order is doubled (halved at the cap).
    pub order_sensitivity: f64,
    pub converged: bool,
}

/// `(T_σ ψ_n^{(κ)})(x)` at each check point, using a GH rule centred on the Gaussian
/// part of the integrand in `y`.
fn apply_kernel(kernel: &GaussKernel, n: usize, xs: &[f64], rule: &QuadratureRule) -> Vec<f64> {
    let a = 1.0 + kernel.kappa;
    let scale = (2.0 / a).sqrt();
    xs.iter()
        .map(|&x| {
            let center = -kernel.sigma * x / a;
            let (ys, ws) = rule.affine(center, scale);
            ys.iter().zip(&ws).map(|(&y, &w)| w * kernel.eval(x, y) * hg_functions(n, kernel.kappa, y)[n]).sum()
        })
        .collect()
}

fn check_points(kernel: &GaussKernel) -> Vec<f64> {
    let s = 1.0 / kernel.kappa.sqrt();
    (-12..=12).map(|i| s * i as f64 / 4.0).collect()
}

fn companion_order(order: usize) -> usize {
    if 2 * order <= MAX_HERMITE_ORDER {
        2 * order
    } else {
        order / 2
    }
}

/// Residual `sup_x |∫T_σ(x,y) ψ_n^{(κ)}(y) dy - ξ_n ψ_n^{(κ)}(x)|` over check points in
/// `|x| ≤ 3/√κ`, with the order-doubling comparison flagged when it exceeds `1e-9`.
pub fn t_sigma_eigencheck(kernel: &GaussKernel, n: usize, order: usize) -> Result<EigenCheck> {
    let rule = QuadratureRule::hermite(order)?;
    let other = QuadratureRule::hermite(companion_order(order))?;
    let xs = check_points(kernel);
    let lhs = apply_kernel(kernel, n, &xs, &rule);
    let lhs2 = apply_kernel(kernel, n, &xs, &other);
    let xi = kernel.xi(n);
    let mut residual = 0.0f64;
    let mut sens = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let rhs = xi * hg_functions(n, kernel.kappa, x)[n];
        residual = residual.max((lhs[i] - rhs).abs());
        sens = sens.max((lhs[i] - lhs2[i]).abs());
    }
    Ok(EigenCheck { residual, xi, order_sensitivity: sens, converged: sens <= 1e-9 })
}

/// Numerical trace `∫ T_σ(x,x) dx`.
pub fn numeric_trace(kernel: &GaussKernel, order: usize) -> Result<f64> {
    let rule = QuadratureRule::hermite(order)?;
    let (xs, ws) = rule.affine(0.0, 1.0 / (1.0 + kernel.sigma).sqrt());
    Ok(xs.iter().zip(&ws).map(|(&x, &w)| w * kernel.eval(x, x)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub m_x: f64,
    pub m_xx: f64,
    pub m_xy: f64,
}

/// `⟨T^f⟩_n = ∫∫ f(x,y) T_σ(x,y) ψ_n^{(κ)}(x) ψ_n^{(κ)}(y) dx dy` for `f ∈ {x, x², xy}`,
/// by a tensor GH rule in the principal axes `(x±y)/√2` of the Gaussian part.
pub fn moment_integrals(kernel: &GaussKernel, n: usize, order: usize) -> Result<Moments> {
    let rule = QuadratureRule::hermite(order)?;
    let k = kernel.kappa;
    let s = kernel.sigma;
    let (us, wu) = rule.affine(0.0, (2.0 / (1.0 + k + s)).sqrt());
    let (vs, wv) = rule.affine(0.0, (2.0 / (1.0 + k - s)).sqrt());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (mut mx, mut mxx, mut mxy) = (0.0, 0.0, 0.0);
    for (&u, &a) in us.iter().zip(&wu) {
        for (&v, &b) in vs.iter().zip(&wv) {
            let x = r * (u + v);
            let y = r * (u - v);
            let base = a * b * kernel.eval(x, y) * hg_functions(n, k, x)[n] * hg_functions(n, k, y)[n];
            mx += base * x;
            mxx += base * x * x;
            mxy += base * x * y;
        }
    }
    Ok(Moments { m_x: mx, m_xx: mxx, m_xy: mxy })
}

/// Closed forms: `0`, `(2n+1) ξ_n / 2κ` and `[(n+1) ξ_{n+1} + n ξ_{n-1}] / 2κ`.
pub fn moment_closed_forms(kernel: &GaussKernel, n: usize) -> Moments {
    let k = kernel.kappa;
    let xi = kernel.xi(n);
    let lower = if n > 0 { n as f64 * kernel.xi(n - 1) } else { 0.0 };
    Moments {
        m_x: 0.0,
        m_xx: (2 * n + 1) as f64 * xi / (2.0 * k),
        m_xy: ((n + 1) as f64 * kernel.xi(n + 1) + lower) / (2.0 * k),
    }
}

/// The `xy` moment written through `μ`, valid for `σ < 0`:
/// `(1/2κ)(2(μ²+1)/(μ²-1) n + (μ-1)/(μ+1)) ξ_n`.
pub fn m_xy_mu_form(kernel: &GaussKernel, n: usize) -> Result<f64> {
    if !(kernel.sigma < 0.0) {
        return Err(Error::Domain("mu form of the xy moment needs sigma < 0".into()));
    }
    let mu = kernel.mu();
    let mu2 = mu * mu;
    Ok((2.0 * (mu2 + 1.0) / (mu2 - 1.0) * n as f64 + (mu - 1.0) / (mu + 1.0)) * kernel.xi(n) / (2.0 * kernel.kappa))
}
