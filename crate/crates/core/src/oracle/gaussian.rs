//! `∫_{Rⁿ} (Kᵀx)^l e^{-xᵀAx/2 + Jᵀx} dx`: closed form and tensor quadrature.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::hermite::{binomial, double_factorial};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};

/// Largest matrix size accepted by the tensor quadrature.
pub const MAX_GAUSS_DIM: usize = 4;
/// Largest power `l` accepted.
pub const MAX_POWER: usize = 8;

fn check_inputs(a: &DMatrix<f64>, j: &DVector<f64>, k: &DVector<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let n = a.nrows();
    if !a.is_square() || j.len() != n || k.len() != n {
        return Err(Error::DimensionMismatch("A, J and K must have matching sizes".into()));
    }
    if (a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
        return Err(Error::NotSymmetric { max_asymmetry: (a - a.transpose()).amax(), tolerance: 1e-12 });
    }
    Cholesky::new(a.clone()).ok_or_else(|| Error::Degenerate("A is not positive definite".into()))
}

/// `√((2π)ⁿ/det A) e^{JᵀA⁻¹J/2} Σ_j (2j-1)!! C(l,2j) (KᵀA⁻¹J)^{l-2j} (KᵀA⁻¹K)^j`.
pub fn gaussian_integral_analytic(a: &DMatrix<f64>, j: &DVector<f64>, k: &DVector<f64>, l: usize) -> Result<f64> {
    if l > MAX_POWER {
        return Err(Error::InvalidArgument(format!("power {l} exceeds {MAX_POWER}")));
    }
    let chol = check_inputs(a, j, k)?;
    let n = a.nrows() as i32;
    let det = chol.determinant();
    let aj = chol.solve(j);
    let ak = chol.solve(k);
    let kaj = k.dot(&aj);
    let kak = k.dot(&ak);
    let mut sum = 0.0;
    for jj in 0..=l / 2 {
        let df = double_factorial(2 * jj as i64 - 1)? as f64;
        sum += df * binomial(l, 2 * jj) * kaj.powi((l - 2 * jj) as i32) * kak.powi(jj as i32);
    }
    Ok(((2.0 * std::f64::consts::PI).powi(n) / det).sqrt() * (0.5 * j.dot(&aj)).exp() * sum)
}

/// Tensor Gauss–Hermite values for every `l ≤ lmax`. The grid is centred at the
/// maximizer of the exponent with per-axis widths `√(2/A_ii)`.
pub fn gaussian_integral_numeric(
    a: &DMatrix<f64>,
    j: &DVector<f64>,
    k: &DVector<f64>,
    lmax: usize,
    order: usize,
) -> Result<Vec<f64>> {
    let chol = check_inputs(a, j, k)?;
    let n = a.nrows();
    if n == 0 || n > MAX_GAUSS_DIM {
        return Err(Error::TooLarge(format!("tensor quadrature supports 1..={MAX_GAUSS_DIM} dimensions")));
    }
    let center = chol.solve(j);
    let rule = QuadratureRule::hermite(order)?;
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|i| rule.affine(center[i], (2.0 / a[(i, i)]).sqrt())).collect();
    let mut out = vec![0.0; lmax + 1];
    let mut idx = vec![0usize; n];
    let mut x = DVector::zeros(n);
    loop {
        let mut w = 1.0;
        for i in 0..n {
            x[i] = axes[i].0[idx[i]];
            w *= axes[i].1[idx[i]];
        }
        let expo = -0.5 * x.dot(&(a * &x)) + j.dot(&x);
        let base = w * expo.exp();
        let kx = k.dot(&x);
        let mut p = 1.0;
        for v in out.iter_mut() {
            *v += base * p;
            p *= kx;
        }
        let mut ax = n;
        loop {
            if ax == 0 {
                return Ok(out);
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < order {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// Analytic and numeric values plus their relative discrepancy, normalized by
/// `max(|analytic|, I₀ (KᵀA⁻¹K)^{l/2})` so odd powers with a vanishing value stay meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussComparison {
    pub l: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

pub fn generalized_gaussian_integral(
    a: &DMatrix<f64>,
    j: &DVector<f64>,
    k: &DVector<f64>,
    lmax: usize,
    order: usize,
) -> Result<Vec<GaussComparison>> {
    let numeric = gaussian_integral_numeric(a, j, k, lmax, order)?;
    let chol = check_inputs(a, j, k)?;
    let kak = k.dot(&chol.solve(k));
    let i0 = gaussian_integral_analytic(a, j, k, 0)?;
    (0..=lmax)
        .map(|l| {
            let analytic = gaussian_integral_analytic(a, j, k, l)?;
            let scale = analytic.abs().max(i0 * kak.powf(l as f64 / 2.0));
            Ok(GaussComparison {
                l,
                analytic,
                numeric: numeric[l],
                relative_error: (analytic - numeric[l]).abs() / scale,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn scalar_moments() {
        let a = one(1.0);
        let j = DVector::from_vec(vec![0.0]);
        let k = DVector::from_vec(vec![1.0]);
        let s2pi = (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(gaussian_integral_analytic(&a, &j, &k, 0).unwrap(), s2pi, epsilon = 1e-14);
        assert_eq!(gaussian_integral_analytic(&a, &j, &k, 1).unwrap(), 0.0);
        assert_relative_eq!(gaussian_integral_analytic(&a, &j, &k, 4).unwrap(), 3.0 * s2pi, epsilon = 1e-13);
        let num = gaussian_integral_numeric(&a, &j, &k, 4, 20).unwrap();
        assert_relative_eq!(num[0], s2pi, epsilon = 1e-13);
        assert!(num[1].abs() < 1e-14);
        assert_relative_eq!(num[4], 3.0 * s2pi, epsilon = 1e-12);
    }

    #[test]
    fn correlated_three_dim() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.4, -0.3, 0.4, 1.5, 0.2, -0.3, 0.2, 1.0]);
        let j = DVector::from_vec(vec![0.3, -0.5, 0.8]);
        let k = DVector::from_vec(vec![1.0, 0.5, -0.7]);
        for c in generalized_gaussian_integral(&a, &j, &k, 6, 40).unwrap() {
            assert!(c.relative_error < 1e-10, "l={} err={}", c.l, c.relative_error);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let v = DVector::from_vec(vec![0.0, 0.0]);
        assert!(gaussian_integral_analytic(&a, &v, &v, 0).is_err());
        assert!(gaussian_integral_analytic(&one(1.0), &v, &v, 0).is_err());
        assert!(gaussian_integral_analytic(&DMatrix::identity(2, 2), &v, &v, 9).is_err());
    }
}
