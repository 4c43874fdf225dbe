//! Disorder Monte Carlo: per-realization entropies and bounds, aggregates, area-law fits.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{
    fit_moments, gs_correlator_bound, linear_fit, tilde_c, CorrelatorTable, DecayFit, DistanceMoments,
};
use crate::entanglement::{ensemble_bound, excited_bound_from_q, ground_renyi, log_negativity, q_matrix, von_neumann};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    anderson_d_bound, anderson_realization, assemble_custom, matrix_from_rows, read_matrix_csv, validate_assumptions,
    CouplingMatrix, DisorderModel,
};
use crate::lattice::{Lattice, Region};
use crate::spectral::{sym_eig, BipartiteSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Anderson {
        k_max: f64,
    },
    /// Fixed matrix, inline rows or a CSV file (relative to the config file).
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix_file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Box {
        corner: Vec<i64>,
        lengths: Vec<usize>,
    },
    /// Sub-box of the given side lengths centred in the lattice (rounded towards the origin).
    Centered {
        lengths: Vec<usize>,
    },
    Sites {
        sites: Vec<Vec<i64>>,
    },
}

impl RegionSpec {
    pub fn build(&self, lattice: &Arc<Lattice>) -> Result<Region> {
        match self {
            RegionSpec::Box { corner, lengths } => Region::sub_box(lattice.clone(), corner, lengths),
            RegionSpec::Centered { lengths } => {
                if lengths.len() != lattice.dim() {
                    return Err(Error::DimensionMismatch("centered region needs one length per axis".into()));
                }
                let mut corner = Vec::with_capacity(lengths.len());
                for (ax, &l) in lengths.iter().enumerate() {
                    let side = lattice.lengths()[ax];
                    if l == 0 || l > side {
                        return Err(Error::InvalidArgument(format!("window {l} does not fit axis of length {side}")));
                    }
                    corner.push(((side - l) / 2) as i64);
                }
                Region::sub_box(lattice.clone(), &corner, lengths)
            }
            RegionSpec::Sites { sites } => Region::from_sites(lattice.clone(), sites),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcitationPolicy {
    #[default]
    None,
    All,
    /// 0-based, `start..end`.
    Range {
        start: usize,
        end: usize,
    },
    /// The ensemble bound `log 3 + 2E_{1/2}` instead of individual excitations.
    Ensemble,
}

fn default_realizations() -> usize {
    1
}
fn default_eps() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_p() -> f64 {
    1.0
}
fn default_s() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub lattice: LatticeSpec,
    pub hamiltonian: HamiltonianSpec,
    pub region: RegionSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scaling_regions: Vec<RegionSpec>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub excitations: ExcitationPolicy,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config; a relative `matrix_file` is resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c: ExperimentConfig = serde_json::from_str(&text)?;
        if let HamiltonianSpec::Custom { matrix_file: Some(f), .. } = &mut c.hamiltonian {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dimension == 0 || self.lattice.lengths.len() != self.dimension {
            return bad(format!(
                "dimension {} does not match {} lattice lengths",
                self.dimension,
                self.lattice.lengths.len()
            ));
        }
        if self.realizations == 0 {
            return bad("realizations must be >= 1".into());
        }
        if self.eps.is_empty() {
            return bad("eps list is empty".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("eps {e} is outside (0, 1]"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p {} is outside (0, 1]", self.p));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return bad(format!("s {} is outside (0, 1]", self.s));
        }
        if let Some(d) = self.d_bound {
            if !(d > 0.0) {
                return bad(format!("d_bound {d} must be positive"));
            }
        }
        match &self.hamiltonian {
            HamiltonianSpec::Anderson { k_max } if !(*k_max > 0.0) => {
                return bad(format!("k_max {k_max} must be positive"))
            }
            HamiltonianSpec::Custom { matrix: None, matrix_file: None } => {
                return bad("custom hamiltonian needs `matrix` or `matrix_file`".into())
            }
            HamiltonianSpec::Custom { matrix: Some(_), matrix_file: Some(_) } => {
                return bad("custom hamiltonian takes only one of `matrix` and `matrix_file`".into())
            }
            _ => {}
        }
        if let ExcitationPolicy::Range { start, end } = self.excitations {
            if start >= end {
                return bad(format!("empty excitation range {start}..{end}"));
            }
        }
        Ok(())
    }

    pub fn build_lattice(&self) -> Result<Arc<Lattice>> {
        Ok(Arc::new(Lattice::build_box(self.dimension, &self.lattice.lengths)?))
    }

    /// The scan regions: `scaling_regions` if given, else the single `region`.
    pub fn regions(&self) -> Vec<RegionSpec> {
        if self.scaling_regions.is_empty() {
            vec![self.region.clone()]
        } else {
            self.scaling_regions.clone()
        }
    }
}

/// Where each realization's coupling matrix comes from.
#[derive(Debug, Clone)]
pub enum MatrixSource {
    Anderson(DisorderModel),
    Fixed(CouplingMatrix<f64>),
}

impl MatrixSource {
    pub fn from_config(config: &ExperimentConfig, lattice: &Arc<Lattice>) -> Result<Self> {
        match &config.hamiltonian {
            HamiltonianSpec::Anderson { k_max } => Ok(MatrixSource::Anderson(DisorderModel::new(*k_max, config.seed)?)),
            HamiltonianSpec::Custom { matrix, matrix_file } => {
                let m = match (matrix, matrix_file) {
                    (Some(rows), _) => matrix_from_rows(rows)?,
                    (None, Some(path)) => read_matrix_csv(path)?,
                    (None, None) => return Err(Error::Config("custom hamiltonian has no matrix".into())),
                };
                Ok(MatrixSource::Fixed(assemble_custom(lattice.clone(), &m)?))
            }
        }
    }

    pub fn matrix(&self, lattice: &Arc<Lattice>, realization: u64) -> Result<CouplingMatrix<f64>> {
        match self {
            MatrixSource::Anderson(model) => anderson_realization(lattice.clone(), model, realization),
            MatrixSource::Fixed(h) => Ok(h.clone()),
        }
    }

    /// Default `D`: `√(4d + k_max)` for Anderson; `None` (use `‖h^{1/2}‖`) for a fixed matrix.
    pub fn default_d_bound(&self, dim: usize) -> Option<f64> {
        match self {
            MatrixSource::Anderson(m) => Some(anderson_d_bound(dim, m.k_max)),
            MatrixSource::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitedRecord {
    pub k: usize,
    pub computed_bound: f64,
    pub theorem_bound: Option<f64>,
}

/// One disorder realization restricted to one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationRecord {
    pub index: u64,
    pub pd_ok: bool,
    pub error: Option<String>,
    pub renyi: Vec<f64>,
    pub von_neumann: f64,
    pub log_negativity: f64,
    pub gs_correlator_bound: f64,
    pub d_bound: f64,
    pub sqrt_norm: f64,
    pub mu_max: f64,
    pub excitations: Vec<ExcitedRecord>,
    pub ensemble_bound: Option<f64>,
}

impl RealizationRecord {
    fn failed(index: u64, msg: String) -> Self {
        RealizationRecord {
            index,
            pd_ok: false,
            error: Some(msg),
            renyi: Vec::new(),
            von_neumann: f64::NAN,
            log_negativity: f64::NAN,
            gs_correlator_bound: f64::NAN,
            d_bound: f64::NAN,
            sqrt_norm: f64::NAN,
            mu_max: f64::NAN,
            excitations: Vec::new(),
            ensemble_bound: None,
        }
    }

    /// Largest computed excited bound over the recorded excitations.
    pub fn max_computed_bound(&self) -> Option<f64> {
        self.excitations.iter().map(|e| e.computed_bound).reduce(f64::max)
    }

    pub fn theorem_bound(&self) -> Option<f64> {
        self.excitations.first().and_then(|e| e.theorem_bound)
    }
}

/// Mean, standard error and count, accumulated with Welford's recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn summary(&self) -> Option<Summary> {
        if self.n == 0 {
            return None;
        }
        let stderr = if self.n > 1 { (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt() } else { f64::NAN };
        Some(Summary { mean: self.mean, stderr, count: self.n })
    }
}

fn summarize(values: impl Iterator<Item = f64>) -> Option<Summary> {
    let mut w = Welford::default();
    for v in values {
        w.push(v);
    }
    w.summary()
}

/// Aggregates over the successful realizations of one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub eps: Vec<f64>,
    pub renyi: Vec<Option<Summary>>,
    pub von_neumann: Option<Summary>,
    pub log_negativity: Option<Summary>,
    pub gs_correlator_bound: Option<Summary>,
    pub excited_computed_max: Option<Summary>,
    pub excited_theorem_bound: Option<Summary>,
    pub ensemble_bound: Option<Summary>,
    pub failed_realizations: usize,
}

/// `C̃ |∂Λ₀|` from the fitted decay; an internally consistent estimate, not a rigorous bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalAreaBound {
    pub fit: DecayFit,
    pub tilde_c: f64,
    pub area_bound: f64,
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub lattice_size: usize,
    pub region_size: usize,
    pub boundary_size: usize,
    pub records: Vec<RealizationRecord>,
    pub aggregate: Aggregate,
    pub empirical: Option<EmpiricalAreaBound>,
}

impl ScanResult {
    fn build(lattice_size: usize, region: &Region, eps: &[f64], records: Vec<RealizationRecord>) -> Self {
        let ok: Vec<&RealizationRecord> = records.iter().filter(|r| r.pd_ok).collect();
        let aggregate = Aggregate {
            eps: eps.to_vec(),
            renyi: (0..eps.len()).map(|i| summarize(ok.iter().map(|r| r.renyi[i]))).collect(),
            von_neumann: summarize(ok.iter().map(|r| r.von_neumann)),
            log_negativity: summarize(ok.iter().map(|r| r.log_negativity)),
            gs_correlator_bound: summarize(ok.iter().map(|r| r.gs_correlator_bound)),
            excited_computed_max: summarize(ok.iter().filter_map(|r| r.max_computed_bound())),
            excited_theorem_bound: summarize(ok.iter().filter_map(|r| r.theorem_bound())),
            ensemble_bound: summarize(ok.iter().filter_map(|r| r.ensemble_bound)),
            failed_realizations: records.len() - ok.len(),
        };
        ScanResult {
            lattice_size,
            region_size: region.inside_len(),
            boundary_size: region.inner_boundary_indices().len(),
            records,
            aggregate,
            empirical: None,
        }
    }
}

/// Runs every region of `config` over all realizations on a pool of `threads` workers.
/// Output does not depend on `threads`.
pub fn run_scaling(config: &ExperimentConfig, threads: usize) -> Result<Vec<ScanResult>> {
    config.validate()?;
    let lattice = config.build_lattice()?;
    let source = MatrixSource::from_config(config, &lattice)?;
    let regions = config.regions().iter().map(|r| r.build(&lattice)).collect::<Result<Vec<_>>>()?;
    let want_fit = matches!(source, MatrixSource::Anderson(_));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let per_realization: Vec<(Vec<RealizationRecord>, Option<DistanceMoments>)> = pool.install(|| {
        (0..config.realizations as u64)
            .into_par_iter()
            .map(|idx| run_realization(config, &lattice, &source, &regions, idx, want_fit))
            .collect()
    });

    let mut moments: Option<DistanceMoments> = None;
    let mut by_region: Vec<Vec<RealizationRecord>> = vec![Vec::with_capacity(config.realizations); regions.len()];
    for (recs, mom) in per_realization {
        for (i, r) in recs.into_iter().enumerate() {
            by_region[i].push(r);
        }
        if let Some(m) = mom {
            match &mut moments {
                None => moments = Some(m),
                Some(acc) => acc.merge(&m)?,
            }
        }
    }
    if by_region.iter().all(|recs| recs.iter().all(|r| !r.pd_ok)) {
        let msg = by_region.first().and_then(|r| r.first()).and_then(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::HypothesisViolated(format!("every realization failed: {msg}")));
    }
    let fit = moments.as_ref().and_then(|m| fit_moments(m).ok());
    let mut out = Vec::with_capacity(regions.len());
    for (region, recs) in regions.iter().zip(by_region) {
        let mut res = ScanResult::build(lattice.len(), region, &config.eps, recs);
        if let (Some(f), Some(d)) = (fit, res.records.iter().find(|r| r.pd_ok).map(|r| r.d_bound)) {
            if f.eta > 0.0 {
                if let Ok(tc) = tilde_c(f.c, f.eta, f.s, d, config.dimension) {
                    res.empirical = Some(EmpiricalAreaBound {
                        fit: f,
                        tilde_c: tc,
                        area_bound: tc * res.boundary_size as f64,
                        status: "empirical",
                    });
                }
            }
        }
        out.push(res);
    }
    Ok(out)
}

/// Single-region scan.
pub fn run_scan(config: &ExperimentConfig, threads: usize) -> Result<ScanResult> {
    let mut c = config.clone();
    c.scaling_regions.clear();
    Ok(run_scaling(&c, threads)?.remove(0))
}

/// Pools `|h^{-1/2}|^s` distance moments over all realizations and fits their decay.
pub fn decay_scan(config: &ExperimentConfig, threads: usize) -> Result<(DecayFit, DistanceMoments)> {
    config.validate()?;
    let lattice = config.build_lattice()?;
    let source = MatrixSource::from_config(config, &lattice)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let parts: Vec<Result<DistanceMoments>> = pool.install(|| {
        (0..config.realizations as u64)
            .into_par_iter()
            .map(|idx| {
                let h = source.matrix(&lattice, idx)?;
                let table = CorrelatorTable::from_spectral(&sym_eig(&h)?, lattice.clone());
                let mut m = DistanceMoments::new(lattice.clone(), config.s)?;
                m.add(&table)?;
                Ok(m)
            })
            .collect()
    });
    let mut acc: Option<DistanceMoments> = None;
    for part in parts {
        let m = part?;
        match &mut acc {
            None => acc = Some(m),
            Some(a) => a.merge(&m)?,
        }
    }
    let acc = acc.ok_or_else(|| Error::InsufficientData("no realizations".into()))?;
    Ok((fit_moments(&acc)?, acc))
}

fn excitation_indices(policy: ExcitationPolicy, n: usize) -> Vec<usize> {
    match policy {
        ExcitationPolicy::All => (0..n).collect(),
        ExcitationPolicy::Range { start, end } => (start.min(n)..end.min(n)).collect(),
        ExcitationPolicy::None | ExcitationPolicy::Ensemble => Vec::new(),
    }
}

fn run_realization(
    config: &ExperimentConfig,
    lattice: &Arc<Lattice>,
    source: &MatrixSource,
    regions: &[Region],
    idx: u64,
    want_fit: bool,
) -> (Vec<RealizationRecord>, Option<DistanceMoments>) {
    let fail = |msg: String| (regions.iter().map(|_| RealizationRecord::failed(idx, msg.clone())).collect(), None);
    let h = match source.matrix(lattice, idx) {
        Ok(h) => h,
        Err(e) => return fail(e.to_string()),
    };
    let d_bound = config
        .d_bound
        .or_else(|| source.default_d_bound(config.dimension))
        .unwrap_or_else(|| validate_assumptions(&h, 1.0).sqrt_norm);
    let report = validate_assumptions(&h, d_bound);
    if !report.is_positive_definite {
        return fail(format!("not positive definite (smallest eigenvalue {:e})", report.smallest_eigenvalue));
    }
    let spectral = match sym_eig(&h) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let hsqrt = spectral.sqrt();
    let table = CorrelatorTable::from_spectral(&spectral, lattice.clone());
    let moments = if want_fit {
        DistanceMoments::new(lattice.clone(), config.s).ok().and_then(|mut m| m.add(&table).ok().map(|_| m))
    } else {
        None
    };
    let recs = regions
        .iter()
        .map(|region| {
            region_record(config, &spectral, &hsqrt, &table, region, idx, d_bound, report.sqrt_norm)
                .unwrap_or_else(|e| RealizationRecord::failed(idx, e.to_string()))
        })
        .collect();
    (recs, moments)
}

#[allow(clippy::too_many_arguments)]
fn region_record(
    config: &ExperimentConfig,
    spectral: &crate::spectral::SpectralData<f64>,
    hsqrt: &DMatrix<f64>,
    table: &CorrelatorTable<f64>,
    region: &Region,
    idx: u64,
    d_bound: f64,
    sqrt_norm: f64,
) -> Result<RealizationRecord> {
    let sys = BipartiteSystem::from_parts(spectral.clone(), hsqrt.clone(), region)?;
    let sp = &sys.symplectic;
    let renyi = config.eps.iter().map(|&e| ground_renyi(sp, e)).collect::<Result<Vec<_>>>()?;
    let ks = excitation_indices(config.excitations, spectral.len());
    let excitations = if ks.is_empty() {
        Vec::new()
    } else {
        let q = q_matrix(&sys);
        ks.iter()
            .map(|&k| {
                let row: Vec<f64> = q.row(k).iter().copied().collect();
                let b = excited_bound_from_q(&row, sp);
                ExcitedRecord { k, computed_bound: b.computed, theorem_bound: b.theorem }
            })
            .collect()
    };
    let ensemble = match config.excitations {
        ExcitationPolicy::Ensemble => Some(ensemble_bound(sp, spectral.len(), sp.len())?),
        _ => None,
    };
    Ok(RealizationRecord {
        index: idx,
        pd_ok: true,
        error: None,
        renyi,
        von_neumann: von_neumann(sp),
        log_negativity: log_negativity(sp),
        gs_correlator_bound: gs_correlator_bound(table, region, config.p, d_bound)?,
        d_bound,
        sqrt_norm,
        mu_max: sp.mu.iter().copied().fold(1.0, f64::max),
        excitations,
        ensemble_bound: ensemble,
    })
}

/// Formats with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.14e}")
    } else {
        String::new()
    }
}

/// Rounds to 15 significant digits (used before JSON serialization).
pub fn round15(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.14e}").parse().unwrap_or(x)
    } else {
        x
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "realization_index",
    "lattice_size",
    "region_size",
    "boundary_size",
    "eps",
    "E_eps_ground",
    "log_negativity",
    "excited_k",
    "excited_computed_bound",
    "excited_theorem_bound",
    "gs_correlator_bound_p",
    "pd_ok",
];

/// One row per (realization, ε, excitation); `excited_k` is `ensemble` for the ensemble
/// policy and empty when no excitations are requested.
pub fn write_records_csv<W: Write>(results: &[ScanResult], eps: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for res in results {
        for r in &res.records {
            let head = [
                r.index.to_string(),
                res.lattice_size.to_string(),
                res.region_size.to_string(),
                res.boundary_size.to_string(),
            ];
            if !r.pd_ok {
                let mut row: Vec<String> = head.to_vec();
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push("false".into());
                w.write_record(&row)?;
                continue;
            }
            for (i, &e) in eps.iter().enumerate() {
                let mut tails: Vec<[String; 3]> = Vec::new();
                if let Some(b) = r.ensemble_bound {
                    tails.push(["ensemble".into(), fmt_num(b), String::new()]);
                }
                for x in &r.excitations {
                    tails.push([
                        x.k.to_string(),
                        fmt_num(x.computed_bound),
                        x.theorem_bound.map(fmt_num).unwrap_or_default(),
                    ]);
                }
                if tails.is_empty() {
                    tails.push([String::new(), String::new(), String::new()]);
                }
                for t in tails {
                    let mut row: Vec<String> = head.to_vec();
                    row.push(fmt_num(e));
                    row.push(fmt_num(r.renyi[i]));
                    row.push(fmt_num(r.log_negativity));
                    row.extend(t);
                    row.push(fmt_num(r.gs_correlator_bound));
                    row.push("true".into());
                    w.write_record(&row)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn summary_json(s: &Option<Summary>) -> serde_json::Value {
    match s {
        Some(s) => serde_json::json!({
            "mean": round15(s.mean),
            "stderr": if s.stderr.is_finite() { serde_json::json!(round15(s.stderr)) } else { serde_json::Value::Null },
            "count": s.count,
        }),
        None => serde_json::Value::Null,
    }
}

/// Aggregate JSON for all regions of a scan.
pub fn aggregate_json(results: &[ScanResult], fit: Option<&AreaLawFit>) -> serde_json::Value {
    let regions: Vec<serde_json::Value> = results
        .iter()
        .map(|r| {
            let a = &r.aggregate;
            let renyi: Vec<serde_json::Value> = a
                .eps
                .iter()
                .zip(&a.renyi)
                .map(|(e, s)| serde_json::json!({"eps": round15(*e), "E_eps_ground": summary_json(s)}))
                .collect();
            let empirical = r.empirical.map(|e| {
                serde_json::json!({
                    "status": e.status,
                    "eta": round15(e.fit.eta),
                    "eta_stderr": round15(e.fit.eta_stderr),
                    "C": round15(e.fit.c),
                    "s": round15(e.fit.s),
                    "fit_residual": round15(e.fit.residual),
                    "fit_window": [e.fit.r_min, e.fit.r_max],
                    "tilde_C": round15(e.tilde_c),
                    "tilde_C_times_boundary": round15(e.area_bound),
                })
            });
            serde_json::json!({
                "lattice_size": r.lattice_size,
                "region_size": r.region_size,
                "boundary_size": r.boundary_size,
                "realizations": r.records.len(),
                "failed_realizations": a.failed_realizations,
                "renyi": renyi,
                "von_neumann": summary_json(&a.von_neumann),
                "log_negativity": summary_json(&a.log_negativity),
                "gs_correlator_bound": summary_json(&a.gs_correlator_bound),
                "excited_computed_bound_max": summary_json(&a.excited_computed_max),
                "excited_theorem_bound": summary_json(&a.excited_theorem_bound),
                "ensemble_bound": summary_json(&a.ensemble_bound),
                "empirical": empirical,
            })
        })
        .collect();
    let fit = fit.map(|f| {
        let o = |x: Option<f64>| x.filter(|v| v.is_finite()).map(round15);
        serde_json::json!({
            "quantity": f.quantity,
            "slope_vs_boundary": o(f.slope_vs_boundary),
            "slope_vs_boundary_stderr": o(f.slope_vs_boundary_stderr),
            "slope_vs_log_size": o(f.slope_vs_log_size),
            "slope_vs_log_size_stderr": o(f.slope_vs_log_size_stderr),
            "residual_vs_boundary": o(f.residual_vs_boundary),
            "residual_vs_log_size": o(f.residual_vs_log_size),
        })
    });
    serde_json::json!({ "regions": regions, "arealaw_fit": fit })
}

/// Whitespace-separated table for plotting: one line per region.
pub fn write_gnuplot<W: Write>(results: &[ScanResult], mut out: W) -> Result<()> {
    writeln!(
        out,
        "# region_size boundary_size log_region_size mean_E_half se_E_half mean_theorem_bound se_theorem_bound mean_computed_max se_computed_max mean_gs_correlator_bound"
    )?;
    for r in results {
        let a = &r.aggregate;
        let half = a.eps.iter().position(|&e| e == 0.5).and_then(|i| a.renyi[i]).or(a.log_negativity);
        let cols = |s: Option<Summary>| match s {
            Some(s) => {
                format!("{} {}", fmt_num(s.mean), if s.stderr.is_finite() { fmt_num(s.stderr) } else { "nan".into() })
            }
            None => "nan nan".into(),
        };
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            r.region_size,
            r.boundary_size,
            fmt_num((r.region_size as f64).ln()),
            cols(half),
            cols(a.excited_theorem_bound),
            cols(a.excited_computed_max),
            a.gs_correlator_bound.map(|s| fmt_num(s.mean)).unwrap_or_else(|| "nan".into()),
        )?;
    }
    Ok(())
}

/// Least-squares slopes of a mean bound against `|∂Λ₀|` and `log|Λ₀|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaLawFit {
    pub quantity: String,
    /// `None` when all regions have the same boundary size.
    pub slope_vs_boundary: Option<f64>,
    pub slope_vs_boundary_stderr: Option<f64>,
    pub residual_vs_boundary: Option<f64>,
    pub slope_vs_log_size: Option<f64>,
    pub slope_vs_log_size_stderr: Option<f64>,
    pub residual_vs_log_size: Option<f64>,
}

/// Fits `(region_size, boundary_size, value)` points; needs at least 3 distinct sizes.
pub fn arealaw_fit_points(points: &[(usize, usize, f64)], quantity: &str) -> Result<AreaLawFit> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::InsufficientData(format!("area-law fit needs >= 3 region sizes, got {}", sizes.len())));
    }
    let y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let xb: Vec<f64> = points.iter().map(|p| p.1 as f64).collect();
    let xl: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let vs_b = linear_fit(&xb, &y).ok();
    let vs_l = linear_fit(&xl, &y).ok();
    Ok(AreaLawFit {
        quantity: quantity.to_string(),
        slope_vs_boundary: vs_b.map(|f| f.1),
        slope_vs_boundary_stderr: vs_b.map(|f| f.3),
        residual_vs_boundary: vs_b.map(|f| f.2),
        slope_vs_log_size: vs_l.map(|f| f.1),
        slope_vs_log_size_stderr: vs_l.map(|f| f.3),
        residual_vs_log_size: vs_l.map(|f| f.2),
    })
}

/// Fits the mean excited theorem bound when available, else the mean worst-case computed bound,
/// else the mean `E_{1/2}`.
pub fn arealaw_fit(results: &[ScanResult]) -> Result<AreaLawFit> {
    let pick = |f: &dyn Fn(&Aggregate) -> Option<Summary>| -> Option<Vec<(usize, usize, f64)>> {
        results.iter().map(|r| f(&r.aggregate).map(|s| (r.region_size, r.boundary_size, s.mean))).collect()
    };
    if let Some(p) = pick(&|a| a.excited_theorem_bound) {
        return arealaw_fit_points(&p, "excited_theorem_bound");
    }
    if let Some(p) = pick(&|a| a.excited_computed_max) {
        return arealaw_fit_points(&p, "excited_computed_bound_max");
    }
    if let Some(p) = pick(&|a| a.log_negativity) {
        return arealaw_fit_points(&p, "log_negativity");
    }
    Err(Error::InsufficientData("no successful realizations to fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn anderson_config(n: usize, region: usize, realizations: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"dimension":1,"lattice":{{"lengths":[{n}]}},"hamiltonian":{{"kind":"anderson","k_max":8.0}},
                "region":{{"kind":"centered","lengths":[{region}]}},"realizations":{realizations},"seed":7,
                "eps":[0.5,0.75,1.0],"excitations":{{"kind":"all"}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn config_parsing_and_validation() {
        let c = anderson_config(20, 4, 3);
        assert_eq!(c.realizations, 3);
        assert_eq!(c.p, 1.0);
        assert_eq!(c.s, 0.5);
        let mut bad = c.clone();
        bad.eps = vec![1.5];
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = c.clone();
        bad.realizations = 0;
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"dimension":1}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"dimension":1,"lattice":{"lengths":[4]},"hamiltonian":{"kind":"custom"},"region":{"kind":"sites","sites":[[0]]}}"#
        )
        .is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), c);
    }

    #[test]
    fn decoupled_custom_scan_has_zero_entropy() {
        let c = ExperimentConfig::from_json(
            r#"{"dimension":1,"lattice":{"lengths":[3]},
                "hamiltonian":{"kind":"custom","matrix":[[1.5,0,0],[0,2,0],[0,0,0.7]]},
                "region":{"kind":"sites","sites":[[1]]},"eps":[0.3,0.5,1.0],"excitations":{"kind":"all"}}"#,
        )
        .unwrap();
        let r = run_scan(&c, 1).unwrap();
        assert_eq!(r.records.len(), 1);
        for &v in &r.records[0].renyi {
            assert_eq!(v, 0.0);
        }
        assert_eq!(r.records[0].gs_correlator_bound, 0.0);
        assert!(r.empirical.is_none());
    }

    #[test]
    fn aggregates_are_record_means() {
        let c = anderson_config(24, 6, 10);
        let r = run_scan(&c, 2).unwrap();
        assert_eq!(r.aggregate.failed_realizations, 0);
        let mean = r.records.iter().map(|x| x.renyi[0]).sum::<f64>() / 10.0;
        assert_relative_eq!(r.aggregate.renyi[0].unwrap().mean, mean, epsilon = 1e-13);
        assert_eq!((r.region_size, r.boundary_size, r.lattice_size), (6, 2, 24));
        for rec in &r.records {
            assert!(rec.renyi.windows(2).all(|w| w[0] >= w[1]));
            for e in &rec.excitations {
                assert!(e.computed_bound <= e.theorem_bound.unwrap());
            }
            for &v in &rec.renyi {
                assert!(v <= rec.gs_correlator_bound);
            }
        }
        assert_eq!(r.empirical.unwrap().status, "empirical");
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut c = anderson_config(30, 8, 12);
        c.scaling_regions = vec![
            RegionSpec::Centered { lengths: vec![4] },
            RegionSpec::Centered { lengths: vec![8] },
            RegionSpec::Box { corner: vec![0], lengths: vec![5] },
        ];
        let a = run_scaling(&c, 1).unwrap();
        let b = run_scaling(&c, 4).unwrap();
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_records_csv(&a, &c.eps, &mut ca).unwrap();
        write_records_csv(&b, &c.eps, &mut cb).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(aggregate_json(&a, None), aggregate_json(&b, None));
    }

    #[test]
    fn csv_layout() {
        let mut c = anderson_config(10, 3, 2);
        c.excitations = ExcitationPolicy::Range { start: 0, end: 2 };
        let r = run_scan(&c, 1).unwrap();
        let mut buf = Vec::new();
        write_records_csv(std::slice::from_ref(&r), &c.eps, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 2 * 3 * 2);
        assert!(lines[1].ends_with(",true"));

        c.excitations = ExcitationPolicy::Ensemble;
        let r = run_scan(&c, 1).unwrap();
        let mut buf = Vec::new();
        write_records_csv(std::slice::from_ref(&r), &c.eps, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().contains(",ensemble,"));
    }

    #[test]
    fn ensemble_policy_respects_hypothesis() {
        let mut c = anderson_config(9, 4, 1);
        c.excitations = ExcitationPolicy::Ensemble;
        assert!(run_scan(&c, 1).is_err());
    }

    #[test]
    fn arealaw_synthetic() {
        let pts: Vec<(usize, usize, f64)> =
            [4usize, 8, 16, 32].iter().map(|&l| (l, 2, 4.0 * (l as f64).ln())).collect();
        let f = arealaw_fit_points(&pts, "x").unwrap();
        assert_relative_eq!(f.slope_vs_log_size.unwrap(), 4.0, epsilon = 1e-8);
        assert!(f.slope_vs_boundary.is_none());

        let pts: Vec<(usize, usize, f64)> =
            [2usize, 3, 4, 5].iter().map(|&l| (l * l, 4 * l - 4, 7.0 * (4 * l - 4) as f64)).collect();
        let f = arealaw_fit_points(&pts, "x").unwrap();
        assert_relative_eq!(f.slope_vs_boundary.unwrap(), 7.0, epsilon = 1e-8);

        assert!(arealaw_fit_points(&pts[..2], "x").is_err());
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 2.5, -0.5, 4.0, 3.25];
        let s = summarize(xs.iter().copied()).unwrap();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert_relative_eq!(s.mean, mean, epsilon = 1e-15);
        assert_relative_eq!(s.stderr, (var / 5.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn decay_scan_matches_scan_fit() {
        let c = anderson_config(30, 4, 6);
        let (fit, _) = decay_scan(&c, 3).unwrap();
        let r = run_scan(&c, 1).unwrap();
        assert_eq!(r.empirical.unwrap().fit, fit);
        assert!(fit.eta > 0.0);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.1), "1.00000000000000e-1");
        assert_eq!(fmt_num(f64::NAN), "");
        assert_eq!(round15(1.0 / 3.0), 0.333333333333333);
    }
}
