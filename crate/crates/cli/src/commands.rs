use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use oscent::correlators::{gs_correlator_bound, tilde_c, CorrelatorTable};
use oscent::entanglement::{ensemble_bound, ground_renyi, EntropyReport};
use oscent::experiments::{
    aggregate_json, arealaw_fit, decay_scan, round15, run_scaling, write_gnuplot, write_records_csv, ExcitationPolicy,
    ExperimentConfig, MatrixSource,
};
use oscent::hamiltonian::validate_assumptions;
use oscent::oracle::verify::{run_verification, VerifyOptions};
use oscent::spectral::BipartiteSystem;
use oscent::{Lattice, Region};
use serde_json::{json, Value};

use crate::args::{Cli, Command, GlobalOpts, SingleOpts};

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<oscent::Error> for CliError {
    fn from(e: oscent::Error) -> Self {
        match e {
            oscent::Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Compute(format!("{}: {e}", path.display()))
}

type CliResult<T> = std::result::Result<T, CliError>;

fn in_unit_interval(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} = {v} is outside (0, 1]")))
    }
}

/// Checks override flags before anything is loaded.
fn check_flags(g: &GlobalOpts) -> CliResult<()> {
    if let Some(eps) = &g.eps {
        if eps.is_empty() {
            return Err(CliError::Usage("--eps needs at least one value".into()));
        }
        for &e in eps {
            in_unit_interval("eps", e)?;
        }
    }
    if let Some(p) = g.p {
        in_unit_interval("p", p)?;
    }
    if let Some(s) = g.s {
        in_unit_interval("s", s)?;
    }
    if let Some(t) = g.tolerance {
        if !(t > 0.0) {
            return Err(CliError::Usage(format!("tolerance {t} must be positive")));
        }
    }
    if g.threads == Some(0) {
        return Err(CliError::Usage("threads must be >= 1".into()));
    }
    Ok(())
}

fn load_config(g: &GlobalOpts) -> CliResult<ExperimentConfig> {
    let path = g.config.as_ref().ok_or_else(|| CliError::Usage("this command needs --config PATH".into()))?;
    if !path.is_file() {
        return Err(CliError::Usage(format!("config file not found: {}", path.display())));
    }
    let mut c = ExperimentConfig::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = g.seed {
        c.seed = seed;
    }
    if let Some(eps) = &g.eps {
        c.eps = eps.clone();
    }
    if let Some(p) = g.p {
        c.p = p;
    }
    if let Some(s) = g.s {
        c.s = s;
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

fn threads(g: &GlobalOpts) -> usize {
    g.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::GroundEntropy(_) => "ground-entropy",
        Command::ExcitedEntropy(_) => "excited-entropy",
        Command::EnsembleBound(_) => "ensemble-bound",
        Command::Correlators(_) => "correlators",
        Command::Scan => "scan",
        Command::Verify(_) => "verify",
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.dir.join(name);
        self.files.push(name.to_string());
        File::create(&path).map(BufWriter::new).map_err(|e| io_err(&path, e))
    }

    fn json(&mut self, name: &str, v: &Value) -> CliResult<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(v).map_err(|e| io_err(&path, e))? + "\n";
        self.files.push(name.to_string());
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    fn manifest(mut self, cli: &Cli, config: Option<&ExperimentConfig>, extra: Value) -> CliResult<()> {
        let argv: Vec<String> = std::env::args().collect();
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        let m = json!({
            "tool": "oscent",
            "cli_version": env!("CARGO_PKG_VERSION"),
            "core_version": oscent::VERSION,
            "command": command_name(&cli.command),
            "argv": argv,
            "config": config,
            "seed": config.map(|c| c.seed),
            "threads": threads(&cli.global),
            "outputs": files,
            "details": extra,
        });
        self.json("manifest.json", &m)
    }
}

pub fn execute(cli: &Cli) -> CliResult<u8> {
    check_flags(&cli.global)?;
    match &cli.command {
        Command::Verify(v) => verify(cli, v.skip_bruteforce),
        Command::Scan => scan(cli),
        Command::GroundEntropy(o) => ground_entropy(cli, o),
        Command::ExcitedEntropy(o) => excited_entropy(cli, &o.single, o.k.as_deref()),
        Command::EnsembleBound(o) => ensemble(cli, o),
        Command::Correlators(o) => correlators(cli, o),
    }
}

fn verify(cli: &Cli, skip_bruteforce: bool) -> CliResult<u8> {
    let mut opts =
        VerifyOptions { tolerance: cli.global.tolerance, bruteforce: !skip_bruteforce, ..Default::default() };
    if let Some(seed) = cli.global.seed {
        opts.seed = seed;
    }
    let rows = run_verification(&opts)?;
    println!("{:<36} {:>6} {:>12} {:>10}  result", "identity", "cases", "max error", "tolerance");
    for r in &rows {
        println!(
            "{:<36} {:>6} {:>12.3e} {:>10.1e}  {}",
            r.name,
            r.cases,
            r.max_error,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let all = rows.iter().all(|r| r.passed);
    let mut out = Output::new(&cli.global.out)?;
    out.json("verify.json", &json!({ "rows": rows, "passed": all }))?;
    out.manifest(cli, None, json!({ "seed": opts.seed, "bruteforce": opts.bruteforce, "tolerance": opts.tolerance }))?;
    Ok(if all { 0 } else { 1 })
}

struct Single {
    lattice: Arc<Lattice>,
    region: Region,
    sys: BipartiteSystem<f64>,
    d_bound: f64,
    sqrt_norm: f64,
}

fn single_system(config: &ExperimentConfig, realization: u64) -> CliResult<Single> {
    let lattice = config.build_lattice().map_err(|e| CliError::Usage(e.to_string()))?;
    let region = config.region.build(&lattice).map_err(|e| CliError::Usage(e.to_string()))?;
    let source = MatrixSource::from_config(config, &lattice)?;
    let h = source.matrix(&lattice, realization)?;
    let probe = validate_assumptions(&h, 1.0);
    if !probe.is_positive_definite {
        return Err(CliError::Compute(format!(
            "hypothesis violated: coupling matrix is not positive definite (smallest eigenvalue {:e})",
            probe.smallest_eigenvalue
        )));
    }
    let d_bound = config.d_bound.or_else(|| source.default_d_bound(config.dimension)).unwrap_or(probe.sqrt_norm);
    let sys = BipartiteSystem::new(&h, &region)?;
    Ok(Single { lattice, region, sys, d_bound, sqrt_norm: probe.sqrt_norm })
}

fn geometry(s: &Single) -> Value {
    json!({
        "lattice_size": s.lattice.len(),
        "region_size": s.region.inside_len(),
        "boundary_size": s.region.inner_boundary_indices().len(),
    })
}

fn print_geometry(s: &Single) {
    println!(
        "|Λ| = {}  |Λ₀| = {}  |∂Λ₀| = {}",
        s.lattice.len(),
        s.region.inside_len(),
        s.region.inner_boundary_indices().len()
    );
}

fn r15(v: f64) -> Value {
    if v.is_finite() {
        json!(round15(v))
    } else {
        Value::Null
    }
}

fn ground_entropy(cli: &Cli, o: &SingleOpts) -> CliResult<u8> {
    let config = load_config(&cli.global)?;
    let s = single_system(&config, o.realization)?;
    let rep = EntropyReport::compute(&s.sys, &config.eps, &[])?;
    print_geometry(&s);
    for (e, v) in rep.eps.iter().zip(&rep.renyi) {
        println!("E_{e} = {v:.10}");
    }
    println!("von_neumann = {:.10}", rep.von_neumann);
    println!("log_negativity = {:.10}", rep.log_negativity);
    let mu: Vec<String> = rep.mu.iter().map(|m| format!("{m:.10}")).collect();
    println!("mu = [{}]", mu.join(", "));
    let mut out = Output::new(&cli.global.out)?;
    out.json(
        "ground_entropy.json",
        &json!({
            "realization": o.realization,
            "geometry": geometry(&s),
            "renyi": rep.eps.iter().zip(&rep.renyi).map(|(e, v)| json!({"eps": r15(*e), "E_eps_ground": r15(*v)})).collect::<Vec<_>>(),
            "von_neumann": r15(rep.von_neumann),
            "log_negativity": r15(rep.log_negativity),
            "mu": rep.mu.iter().map(|m| r15(*m)).collect::<Vec<_>>(),
        }),
    )?;
    out.manifest(cli, Some(&config), json!({ "realization": o.realization }))?;
    Ok(0)
}

fn excited_entropy(cli: &Cli, o: &SingleOpts, ks: Option<&[usize]>) -> CliResult<u8> {
    let config = load_config(&cli.global)?;
    let s = single_system(&config, o.realization)?;
    let n = s.lattice.len();
    let ks: Vec<usize> = match (ks, config.excitations) {
        (Some(k), _) => k.to_vec(),
        (None, ExcitationPolicy::Range { start, end }) => (start..end.min(n)).collect(),
        (None, _) => (0..n).collect(),
    };
    if let Some(&bad) = ks.iter().find(|&&k| k >= n) {
        return Err(CliError::Usage(format!("excitation index {bad} out of range (|Λ| = {n})")));
    }
    let rep = EntropyReport::compute(&s.sys, &[0.5], &ks)?;
    print_geometry(&s);
    println!("E_0.5 ground = {:.10}", rep.renyi[0]);
    println!("{:>5} {:>14} {:>18} {:>18}", "k", "sum_j Q_kj", "computed bound", "theorem bound");
    for x in &rep.excitations {
        let t = x.theorem_bound.map(|t| format!("{t:.10}")).unwrap_or_else(|| "-".into());
        println!("{:>5} {:>14.10} {:>18.10} {:>18}", x.k, x.q_sum, x.computed_bound, t);
    }
    let mut out = Output::new(&cli.global.out)?;
    out.json(
        "excited_entropy.json",
        &json!({
            "realization": o.realization,
            "geometry": geometry(&s),
            "E_half_ground": r15(rep.renyi[0]),
            "excitations": rep.excitations.iter().map(|x| json!({
                "k": x.k,
                "q_sum": r15(x.q_sum),
                "computed_bound": r15(x.computed_bound),
                "theorem_bound": x.theorem_bound.map(r15),
            })).collect::<Vec<_>>(),
        }),
    )?;
    out.manifest(cli, Some(&config), json!({ "realization": o.realization, "k": ks }))?;
    Ok(0)
}

fn ensemble(cli: &Cli, o: &SingleOpts) -> CliResult<u8> {
    let config = load_config(&cli.global)?;
    let s = single_system(&config, o.realization)?;
    let sp = &s.sys.symplectic;
    let bound = ensemble_bound(sp, s.lattice.len(), s.region.inside_len())?;
    let half = ground_renyi(sp, 0.5)?;
    print_geometry(&s);
    println!("E_0.5 ground = {half:.10}");
    println!("ensemble bound = {bound:.10}");
    let mut out = Output::new(&cli.global.out)?;
    out.json(
        "ensemble_bound.json",
        &json!({
            "realization": o.realization,
            "geometry": geometry(&s),
            "E_half_ground": r15(half),
            "ensemble_bound": r15(bound),
        }),
    )?;
    out.manifest(cli, Some(&config), json!({ "realization": o.realization }))?;
    Ok(0)
}

fn correlators(cli: &Cli, o: &SingleOpts) -> CliResult<u8> {
    let config = load_config(&cli.global)?;
    let s = single_system(&config, o.realization)?;
    let table = CorrelatorTable::from_spectral(&s.sys.spectral, s.lattice.clone());
    let bound = gs_correlator_bound(&table, &s.region, config.p, s.d_bound)?;
    print_geometry(&s);
    println!("D = {:.10}  (||h^1/2|| = {:.10})", s.d_bound, s.sqrt_norm);
    println!("gs correlator bound (p = {}) = {bound:.10}", config.p);
    let mut out = Output::new(&cli.global.out)?;
    table.write_csv(out.create("correlators.csv")?)?;
    let fit = match decay_scan(&config, threads(&cli.global)) {
        Ok((f, _)) => {
            println!(
                "decay fit over {} realizations: eta = {:.10} ± {:.3e}, C = {:.10}, s = {}, residual = {:.3e}, r in [{}, {}]",
                config.realizations, f.eta, f.eta_stderr, f.c, f.s, f.residual, f.r_min, f.r_max
            );
            let tc = tilde_c(f.c, f.eta, f.s, s.d_bound, config.dimension).ok();
            if let Some(tc) = tc {
                println!("tilde C = {tc:.10} (empirical)");
            }
            json!({
                "status": "empirical",
                "eta": r15(f.eta),
                "eta_stderr": r15(f.eta_stderr),
                "C": r15(f.c),
                "s": r15(f.s),
                "residual": r15(f.residual),
                "fit_window": [f.r_min, f.r_max],
                "points": f.points,
                "tilde_C": tc.map(r15),
            })
        }
        Err(e) => {
            println!("decay fit unavailable: {e}");
            json!({ "error": e.to_string() })
        }
    };
    out.json(
        "correlators.json",
        &json!({
            "realization": o.realization,
            "geometry": geometry(&s),
            "p": r15(config.p),
            "d_bound": r15(s.d_bound),
            "sqrt_norm": r15(s.sqrt_norm),
            "gs_correlator_bound": r15(bound),
            "decay_fit": fit,
        }),
    )?;
    out.manifest(cli, Some(&config), json!({ "realization": o.realization }))?;
    Ok(0)
}

fn scan(cli: &Cli) -> CliResult<u8> {
    let config = load_config(&cli.global)?;
    let n_threads = threads(&cli.global);
    let results = run_scaling(&config, n_threads)?;
    let fit = if results.len() >= 3 { arealaw_fit(&results).ok() } else { None };
    let mut out = Output::new(&cli.global.out)?;
    write_records_csv(&results, &config.eps, out.create("records.csv")?)?;
    out.json("aggregate.json", &aggregate_json(&results, fit.as_ref()))?;
    write_gnuplot(&results, out.create("scaling.dat")?)?;
    println!("{:>8} {:>8} {:>8} {:>16} {:>12} {:>7}", "|Λ₀|", "|∂Λ₀|", "R", "mean E_eps[0]", "stderr", "failed");
    for r in &results {
        let s = r.aggregate.renyi[0];
        println!(
            "{:>8} {:>8} {:>8} {:>16.10} {:>12.3e} {:>7}",
            r.region_size,
            r.boundary_size,
            r.records.len(),
            s.map(|s| s.mean).unwrap_or(f64::NAN),
            s.map(|s| s.stderr).unwrap_or(f64::NAN),
            r.aggregate.failed_realizations
        );
    }
    if let Some(f) = &fit {
        if let (Some(a), Some(b)) = (f.slope_vs_log_size, f.slope_vs_log_size_stderr) {
            println!("{}: slope vs log|Λ₀| = {a:.6} ± {b:.3e}", f.quantity);
        }
    }
    if let Some(e) = results.first().and_then(|r| r.empirical) {
        println!("empirical: eta = {:.6}, tilde C = {:.6}", e.fit.eta, e.tilde_c);
    }
    out.manifest(cli, Some(&config), json!({}))?;
    Ok(0)
}
