//! Singular eigenfunction correlators `|⟨δ_j, h^{-1/2} δ_k⟩|`, the correlator bound on
//! ground-state entanglement and fits of their exponential decay.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingMatrix;
use crate::lattice::{l1_distance, Lattice, Region};
use crate::scalar::Real;
use crate::spectral::{sym_eig, SpectralData};

/// Absolute entries of `h^{-1/2}` for every pair of sites.
#[derive(Debug, Clone)]
pub struct CorrelatorTable<T: Real> {
    values: DMatrix<T>,
    lattice: Arc<Lattice>,
}

impl<T: Real> CorrelatorTable<T> {
    pub fn from_spectral(sd: &SpectralData<T>, lattice: Arc<Lattice>) -> Self {
        CorrelatorTable { values: sd.inv_sqrt().abs(), lattice }
    }

    /// Table from explicit values (absolute values are taken).
    pub fn from_values(lattice: Arc<Lattice>, values: DMatrix<T>) -> Result<Self> {
        let n = lattice.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "table is {}x{}, lattice has {n} sites",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(CorrelatorTable { values: values.abs(), lattice })
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn get(&self, j: usize, k: usize) -> T {
        self.values[(j, k)]
    }

    /// Writes `j,k,distance,value` rows for `j ≤ k`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "k", "distance", "value"])?;
        let n = self.lattice.len();
        for j in 0..n {
            for k in j..n {
                let d = l1_distance(self.lattice.site(j), self.lattice.site(k))?;
                w.write_record([
                    j.to_string(),
                    k.to_string(),
                    d.to_string(),
                    format!("{:.14e}", self.values[(j, k)].as_f64()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn correlator_table<T: Real>(h: &CouplingMatrix<T>) -> Result<CorrelatorTable<T>> {
    let sd = sym_eig(h)?;
    Ok(CorrelatorTable::from_spectral(&sd, h.lattice().clone()))
}

/// `(D^{p/2}/p) Σ_{k∈Λ₀, j∈Λ₀ᶜ} |⟨δ_k, h^{-1/2} δ_j⟩|^{p/2}`.
pub fn gs_correlator_bound<T: Real>(table: &CorrelatorTable<T>, region: &Region, p: T, d_bound: T) -> Result<T> {
    if !(p > T::zero() && p <= T::one()) {
        return Err(Error::InvalidArgument(format!("p must lie in (0, 1], got {p}")));
    }
    if !(d_bound > T::zero()) {
        return Err(Error::InvalidArgument(format!("D must be positive, got {d_bound}")));
    }
    if region.lattice().len() != table.lattice.len() {
        return Err(Error::DimensionMismatch("region and table live on different lattices".into()));
    }
    let half_p = p * T::lit(0.5);
    let mut s = T::zero();
    for &k in region.inside() {
        for &j in region.outside() {
            let v = table.values[(k, j)];
            if v > T::zero() {
                s += v.powf(half_p);
            }
        }
    }
    Ok(d_bound.powf(half_p) / p * s)
}

/// Running sums of `|·|^s` binned by l1 distance, over many tables on one lattice.
#[derive(Debug, Clone)]
pub struct DistanceMoments {
    s: f64,
    lattice: Arc<Lattice>,
    pairs: Vec<(usize, usize, u64)>,
    sums: BTreeMap<u64, (f64, u64)>,
    floor: f64,
}

impl DistanceMoments {
    pub fn new(lattice: Arc<Lattice>, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidArgument(format!("s must lie in (0, 1], got {s}")));
        }
        let n = lattice.len();
        let mut pairs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for j in 0..n {
            for k in j + 1..n {
                pairs.push((j, k, l1_distance(lattice.site(j), lattice.site(k))?));
            }
        }
        Ok(DistanceMoments { s, lattice, pairs, sums: BTreeMap::new(), floor: 0.0 })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Roundoff level of the averaged `|·|^s`: `(|Λ| · eps · max|entry|)^s`, maximized over tables.
    pub fn noise_floor(&self) -> f64 {
        self.floor
    }

    pub fn add<T: Real>(&mut self, table: &CorrelatorTable<T>) -> Result<()> {
        if !Arc::ptr_eq(&self.lattice, &table.lattice) && *self.lattice != *table.lattice {
            return Err(Error::DimensionMismatch("tables come from different lattices".into()));
        }
        for &(j, k, d) in &self.pairs {
            let e = self.sums.entry(d).or_insert((0.0, 0));
            e.0 += table.values[(j, k)].as_f64().powf(self.s);
            e.1 += 1;
        }
        let amax = table.values.amax().as_f64();
        let floor = (self.lattice.len() as f64 * T::machine_eps().as_f64() * amax).powf(self.s);
        self.floor = self.floor.max(floor);
        Ok(())
    }

    /// Merges another accumulator (same lattice and `s`) into this one.
    pub fn merge(&mut self, other: &DistanceMoments) -> Result<()> {
        if other.s != self.s || *other.lattice != *self.lattice {
            return Err(Error::DimensionMismatch("incompatible moment accumulators".into()));
        }
        for (&d, &(sum, cnt)) in &other.sums {
            let e = self.sums.entry(d).or_insert((0.0, 0));
            e.0 += sum;
            e.1 += cnt;
        }
        self.floor = self.floor.max(other.floor);
        Ok(())
    }

    /// `(r, mean of |·|^s at distance r)` for `r ≥ 1`, ascending.
    pub fn means(&self) -> Vec<(u64, f64)> {
        self.sums.iter().filter(|(&d, _)| d >= 1).map(|(&d, &(sum, cnt))| (d, sum / cnt as f64)).collect()
    }
}

/// Fit `E|⟨δ_j, h^{-1/2} δ_k⟩|^s ≈ C e^{-η|j-k|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub eta: f64,
    pub c: f64,
    pub s: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub eta_stderr: f64,
    pub r_min: u64,
    pub r_max: u64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, rms residual, stderr of b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch("fit inputs differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} points cannot determine a line")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let rms = (ssr / nf).sqrt();
    let stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok((intercept, slope, rms, stderr))
}

/// Fits the binned means. Distances whose mean is below `1e-300` are dropped; the window
/// ends before the first distance whose mean sits at the roundoff floor, where the
/// computed entries no longer carry the decay.
pub fn fit_moments(moments: &DistanceMoments) -> Result<DecayFit> {
    let means = moments.means();
    if means.iter().all(|&(_, m)| m == 0.0) {
        return Err(Error::NoDecayData("all off-diagonal correlators vanish".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &(d, m)) in means.iter().enumerate() {
        if m < 1e-300 {
            log::warn!("dropping distance {d} from decay fit: mean {m:e} underflows");
            continue;
        }
        if m <= moments.floor {
            log::info!(
                "decay fit window ends at distance {d}: mean {m:e} at roundoff floor {:e}; {} distances left out",
                moments.floor,
                means.len() - i
            );
            break;
        }
        xs.push(d as f64);
        ys.push(m.ln());
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!("decay fit needs at least 3 distances, got {}", xs.len())));
    }
    let (a, b, residual, stderr) = linear_fit(&xs, &ys)?;
    Ok(DecayFit {
        eta: -b,
        c: a.exp(),
        s: moments.s,
        residual,
        eta_stderr: stderr,
        r_min: xs[0] as u64,
        r_max: *xs.last().unwrap() as u64,
        points: xs.len(),
    })
}

pub fn decay_fit<T: Real>(tables: &[CorrelatorTable<T>], s: f64) -> Result<DecayFit> {
    let first = tables.first().ok_or_else(|| Error::InsufficientData("no correlator tables".into()))?;
    let mut m = DistanceMoments::new(first.lattice.clone(), s)?;
    for t in tables {
        m.add(t)?;
    }
    fit_moments(&m)
}

/// `Σ_{k∈Z^d} e^{-η|k|/2} = ((1+e^{-η/2})/(1-e^{-η/2}))^d`.
pub fn lattice_exp_sum(eta: f64, dim: usize) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("lattice sum diverges for eta = {eta}")));
    }
    let q = (-eta / 2.0).exp();
    Ok(((1.0 + q) / (1.0 - q)).powi(dim as i32))
}

/// `C̃ = (D^{s/2} C / s) (Σ_k e^{-η|k|/2})²`.
pub fn tilde_c(c: f64, eta: f64, s: f64, d_bound: f64, dim: usize) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("s must lie in (0, 1], got {s}")));
    }
    if !(c > 0.0) || !(d_bound > 0.0) {
        return Err(Error::InvalidArgument("C and D must be positive".into()));
    }
    let sum = lattice_exp_sum(eta, dim)?;
    Ok(d_bound.powf(s / 2.0) * c / s * sum * sum)
}
