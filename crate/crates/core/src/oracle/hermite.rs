//! Hermite polynomials, Hermite–Gaussian functions and double factorials.

use crate::error::{Error, Result};

/// Physicists' Hermite polynomial `H_n(x)` by `H_{n+1} = 2x H_n - 2n H_{n-1}`.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Largest index accepted by [`hg_function`].
pub const MAX_HG_INDEX: usize = 300;

/// Orthonormal Hermite functions `φ_0..=φ_nmax` at `t`, via the normalized recurrence
/// `φ_{k+1} = √(2/(k+1)) t φ_k - √(k/(k+1)) φ_{k-1}` (no factorials are formed).
pub fn hermite_functions(nmax: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(cur);
    for k in 0..nmax {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Normalized `ψ_n^{(γ)}(y) = (2^n n!)^{-1/2} (γ/π)^{1/4} e^{-γy²/2} H_n(√γ y)`.
pub fn hg_function(n: usize, gamma: f64, y: f64) -> Result<f64> {
    if n > MAX_HG_INDEX {
        return Err(Error::InvalidArgument(format!("Hermite-Gaussian index {n} exceeds {MAX_HG_INDEX}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    Ok(gamma.powf(0.25) * hermite_functions(n, gamma.sqrt() * y)[n])
}

/// All `ψ_0^{(γ)}(y) ..= ψ_nmax^{(γ)}(y)`.
pub fn hg_functions(nmax: usize, gamma: f64, y: f64) -> Vec<f64> {
    let s = gamma.powf(0.25);
    hermite_functions(nmax, gamma.sqrt() * y).into_iter().map(|v| s * v).collect()
}

/// `n!!` for `n ≥ -1`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> Result<u128> {
    if n < -1 {
        return Err(Error::InvalidArgument(format!("double factorial undefined for {n}")));
    }
    let mut acc: u128 = 1;
    let mut k = n;
    while k > 1 {
        acc = acc.checked_mul(k as u128).ok_or_else(|| Error::InvalidArgument(format!("{n}!! overflows")))?;
        k -= 2;
    }
    Ok(acc)
}

/// Binomial coefficient as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quadrature::QuadratureRule;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.7), 1.0);
        assert_eq!(hermite(1, 0.7), 1.4);
        assert_eq!(hermite(2, 3.0), 34.0);
        assert_eq!(hermite(3, 2.0), 8.0 * 8.0 - 12.0 * 2.0);
    }

    #[test]
    fn hg_values() {
        assert_relative_eq!(hg_function(0, 1.0, 0.0).unwrap(), PI.powf(-0.25), epsilon = 1e-15);
        let direct = (4.0 / PI).powf(0.25) / 2f64.sqrt() * (-2.0f64).exp() * hermite(1, 2.0);
        assert_relative_eq!(hg_function(1, 4.0, 1.0).unwrap(), direct, epsilon = 1e-15);
        assert_relative_eq!(hg_function(1, 4.0, 1.0).unwrap(), 0.406_615_153_2, epsilon = 1e-10);
        // recurrence agrees with the polynomial form at moderate n
        let n = 12;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let direct = (2f64.powi(n as i32) * fact).sqrt().recip()
            * (2.0 / PI).powf(0.25)
            * (-0.5 * 2.0 * 0.3f64.powi(2)).exp()
            * hermite(n, 2f64.sqrt() * 0.3);
        assert_relative_eq!(hg_function(n, 2.0, 0.3).unwrap(), direct, max_relative = 1e-12);
        assert!(hg_function(301, 1.0, 0.0).is_err());
        assert!(hg_function(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn hg_orthonormal() {
        let r = QuadratureRule::hermite(200).unwrap();
        for gamma in [0.5f64, 1.0, 3.0] {
            let s = 1.0 / gamma.sqrt();
            let (x, w) = r.affine(0.0, s);
            let ip = |a: usize, b: usize| -> f64 {
                x.iter()
                    .zip(&w)
                    .map(|(&y, &wi)| wi * hg_function(a, gamma, y).unwrap() * hg_function(b, gamma, y).unwrap())
                    .sum()
            };
            assert!(ip(2, 3).abs() < 1e-10);
            assert_relative_eq!(ip(2, 2), 1.0, epsilon = 1e-10);
            assert_relative_eq!(ip(90, 90), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(-1).unwrap(), 1);
        assert_eq!(double_factorial(0).unwrap(), 1);
        assert_eq!(double_factorial(5).unwrap(), 15);
        assert_eq!(double_factorial(6).unwrap(), 48);
        assert!(double_factorial(-2).is_err());
        assert!(double_factorial(200).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(4, 5), 0.0);
        assert_eq!(binomial(8, 0), 1.0);
    }
}
