use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use drivetherm::audit::{audit_model_with, fuzz_with, AuditOptions, Fault, FuzzRanges, Status};
use drivetherm::linalg::{entropy_rate, DensityMatrix, Operator};
use drivetherm::models::{intra_thermo_hamiltonian, ChannelKind, ModelSpec, Preset};
use drivetherm::solver::{
    assemble, evolve_with, steady_state, tail_mass, truncation_report, EvolveOptions, SteadyStateMethod, DEFAULT_TOL,
};
use drivetherm::thermo::{Thermo, ThermoReport};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{dimensional, Config, Grid};
use crate::csv::{format_float, Table};
use crate::{CliError, EXIT_CHECK_FAILED, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "drivetherm", version, about = "Thermodynamics of coherently driven cavity systems")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the steady state and print both bookkeepings.
    Steady(Common),
    /// Steady states over a parameter grid, as CSV.
    Sweep(SweepArgs),
    /// Run the consistency checks on one model or on random models.
    Audit(AuditArgs),
    /// Integrate the master equation and tabulate the currents in time.
    Evolve(EvolveArgs),
    /// Print the resolved model as a configuration file.
    ShowConfig(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// empty, kerr, tls or maser.
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (CSV); stdout when absent for tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Steady-state residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// auto, dense-null, sparse-direct or evolve.
    #[arg(long)]
    pub method: Option<String>,
    /// Detuning Ω − ω_d.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Parameter override, e.g. `channels.cavity.n=0.5`; repeatable.
    #[arg(long = "set", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
    /// Skip the consistency checks after solving.
    #[arg(long)]
    pub no_audit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Parameter path to sweep, e.g. `drive.delta` or `channels.hot.T`.
    #[arg(long)]
    pub param: Option<String>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    /// `start:stop:count[:log]`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
    /// Column subset, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: Common,
    /// Audit this many random models instead.
    #[arg(long)]
    pub fuzz: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the dynamics with this cavity occupation while temperatures keep
    /// the configured one.
    #[arg(long)]
    pub inject_fault: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// vacuum, thermal, coherent:<re>,<im> or file:<path>.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of output rows, including t = 0.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Upper bound on the integrator step.
    #[arg(long)]
    pub max_step: Option<f64>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (path, value) = s.split_once('=').ok_or_else(|| format!("expected path=value, got `{s}`"))?;
    let v: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((path.trim().to_string(), v))
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Steady(c) => steady(&c),
        Command::Sweep(a) => sweep(&a),
        Command::Audit(a) => audit(&a),
        Command::Evolve(a) => evolve(&a),
        Command::ShowConfig(c) => {
            let (_, model) = resolve(&c)?;
            emit(c.out.as_deref(), &Config::from_model(&model).to_toml())?;
            Ok(EXIT_OK)
        }
    }
}

fn load_config(c: &Common) -> Result<Config, CliError> {
    match &c.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

/// Configuration and model after every override; validated.
pub fn resolve(c: &Common) -> Result<(Config, ModelSpec), CliError> {
    let config = load_config(c)?;
    if c.preset.is_none() && config.preset.is_none() && config.cavity.is_none() {
        return Err(CliError::usage("give --preset or a --config describing the model"));
    }
    let mut model = config.model(c.preset.as_deref())?;
    if let Some(n) = c.n_max {
        model.set_parameter("cavity.n_max", n as f64)?;
    }
    if let Some(d) = c.delta {
        model.set_parameter("drive.delta", d)?;
    }
    for (path, v) in &c.set {
        model.set_parameter(path, *v)?;
    }
    model.validate()?;
    for w in model.warnings() {
        log::warn!("{w}");
    }
    Ok((config, model))
}

fn solver_settings(c: &Common, config: &Config) -> Result<(SteadyStateMethod, f64), CliError> {
    let section = config.solver.clone().unwrap_or_default();
    let method = match c.method.as_deref().or(section.method.as_deref()) {
        Some(m) => m.parse().map_err(CliError::from)?,
        None => SteadyStateMethod::Auto,
    };
    let tol = c.tol.or(section.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    Ok((method, tol))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Column names shared by steady, sweep and evolve output.
pub fn columns(model: &ModelSpec) -> Vec<String> {
    let mut cols: Vec<String> = ["U", "P_conv", "J_c_conv"].iter().map(|s| s.to_string()).collect();
    for c in model.channels.iter().filter(|c| c.kind == ChannelKind::Intra) {
        cols.push(format!("J_{}", c.label));
    }
    for s in ["P_io", "J_c_io", "Sigma_conv", "Sigma_io", "n_mean", "abs_a_sq", "purity", "tail_mass"] {
        cols.push(s.to_string());
    }
    cols
}

fn row(r: &ThermoReport, rho: &DensityMatrix, tail: f64) -> Vec<f64> {
    let mut v = vec![r.u, r.p_conv, r.j_c_conv];
    v.extend(r.j_intra.iter().map(|(_, j)| *j));
    v.extend([r.p_io, r.j_c_io, r.sigma_conv, r.sigma_io, r.n_mean, r.a_mean.norm_sqr(), rho.purity(), tail]);
    v
}

fn nan_row(model: &ModelSpec) -> Vec<f64> {
    vec![f64::NAN; columns(model).len()]
}

fn describe(model: &ModelSpec, r: &ThermoReport, rho: &DensityMatrix, tail: f64) -> String {
    let mut s = String::new();
    let line = |s: &mut String, k: &str, v: f64| s.push_str(&format!("{k:<14} {}\n", format_float(v)));
    s.push_str(&format!(
        "model          {} (fingerprint {}), dimension {}\n",
        model.intra.name(),
        model.fingerprint(),
        model.dim()
    ));
    line(&mut s, "detuning", model.detuning());
    line(&mut s, "U", r.u);
    line(&mut s, "P_conv", r.p_conv);
    line(&mut s, "J_c_conv", r.j_c_conv);
    for (label, j) in &r.j_intra {
        line(&mut s, &format!("J_{label}"), *j);
    }
    line(&mut s, "P_io", r.p_io);
    line(&mut s, "J_c_io", r.j_c_io);
    line(&mut s, "dS_dt", r.ds_dt);
    line(&mut s, "Sigma_conv", r.sigma_conv);
    line(&mut s, "Sigma_io", r.sigma_io);
    s.push_str(&format!("{:<14} {} {}\n", "<a>", format_float(r.a_mean.re), format_float(r.a_mean.im)));
    s.push_str(&format!(
        "{:<14} {} {}\n",
        "<b_out>",
        format_float(r.b_out_coherent.re),
        format_float(r.b_out_coherent.im)
    ));
    line(&mut s, "abs_a_sq", r.a_mean.norm_sqr());
    line(&mut s, "n_mean", r.n_mean);
    line(&mut s, "n_connected", r.n_var_connected);
    line(&mut s, "purity", rho.purity());
    line(&mut s, "tail_mass", tail);
    s.push_str("channel        kind                 T                        J_conv                   J_io\n");
    for c in &r.channels {
        let io = format_float(c.io);
        s.push_str(&format!(
            "{:<14} {:<20} {:<24} {:<24} {}\n",
            c.label,
            c.kind.as_str(),
            format_float(c.temperature),
            format_float(c.conventional),
            io
        ));
    }
    s
}

fn steady(c: &Common) -> Result<i32, CliError> {
    let (config, model) = resolve(c)?;
    let (method, tol) = solver_settings(c, &config)?;
    let l = assemble(&model)?;
    let rho = steady_state(&l, method, tol)?;
    let tail = truncation_report(&rho, &model)?;
    let r = Thermo::new(&model)?.report(&rho, 0.0)?;
    print!("{}", describe(&model, &r, &rho, tail.tail_mass));
    if let Some(out) = &c.out {
        let mut t = Table::new(columns(&model));
        t.push(row(&r, &rho, tail.tail_mass));
        emit(Some(out), &t.render())?;
    }
    if c.no_audit {
        return Ok(EXIT_OK);
    }
    let report = audit_model_with(&model, &AuditOptions { method, steady_tol: tol, ..AuditOptions::default() });
    let skipped = report.checks.iter().filter(|c| c.status == Status::Skipped).count();
    if report.passed() {
        println!("audit: {} checks passed, {skipped} skipped", report.checks.len() - skipped);
        Ok(EXIT_OK)
    } else {
        println!("{report}");
        Ok(EXIT_CHECK_FAILED)
    }
}

fn sweep(a: &SweepArgs) -> Result<i32, CliError> {
    let (config, model) = resolve(&a.common)?;
    let (method, tol) = solver_settings(&a.common, &config)?;
    let section = config.sweep.clone();
    let param = a
        .param
        .clone()
        .or_else(|| section.as_ref().map(|s| s.parameter.clone()))
        .ok_or_else(|| CliError::usage("sweep needs --param or a [sweep] section"))?;
    // Values from the file are in its units; values from flags are not.
    let values = if !a.values.is_empty() {
        a.values.clone()
    } else if let Some(g) = a.grid {
        g.values()?
    } else if let Some(s) = &section {
        let unit = if dimensional(&param) { config.unit() } else { 1.0 };
        let raw = if !s.values.is_empty() {
            s.values.clone()
        } else if let Some(g) = s.grid {
            g.values()?
        } else {
            return Err(CliError::usage("[sweep] needs `values` or `grid`"));
        };
        raw.into_iter().map(|v| v / unit).collect()
    } else {
        return Err(CliError::usage("sweep needs --values or --grid"));
    };
    if values.is_empty() {
        return Err(CliError::usage("sweep needs at least one value"));
    }
    model.clone().set_parameter(&param, values[0])?;

    let rows: Vec<Result<Vec<f64>, String>> = values
        .par_iter()
        .map(|&v| {
            let point = || -> Result<Vec<f64>, CliError> {
                let mut m = model.clone();
                m.set_parameter(&param, v)?;
                m.validate()?;
                let l = assemble(&m)?;
                let rho = steady_state(&l, method, tol)?;
                let tail = truncation_report(&rho, &m)?;
                let r = Thermo::new(&m)?.report(&rho, 0.0)?;
                Ok(row(&r, &rho, tail.tail_mass))
            };
            point().map_err(|e| e.message)
        })
        .collect();

    let mut header = vec![param.clone()];
    header.extend(columns(&model));
    let mut table = Table::new(header);
    let mut failed = 0;
    for (v, r) in values.iter().zip(rows) {
        let mut cells = vec![*v];
        match r {
            Ok(cols) => cells.extend(cols),
            Err(msg) => {
                failed += 1;
                eprintln!("{param} = {}: {msg}", format_float(*v));
                cells.extend(nan_row(&model));
            }
        }
        table.push(cells);
    }
    let outputs: Vec<String> = if !a.outputs.is_empty() {
        a.outputs.clone()
    } else {
        section.as_ref().map(|s| s.outputs.clone()).unwrap_or_default()
    };
    if !outputs.is_empty() {
        let mut keep = vec![param.clone()];
        keep.extend(outputs.into_iter().filter(|o| *o != param));
        table = table.select(&keep).map_err(CliError::usage)?;
    }
    let out = a.common.out.clone().or_else(|| section.and_then(|s| s.output.map(PathBuf::from)));
    emit(out.as_deref(), &table.render())?;
    Ok(if failed > 0 { EXIT_CHECK_FAILED } else { EXIT_OK })
}

fn audit(a: &AuditArgs) -> Result<i32, CliError> {
    let base_opts = || -> Result<AuditOptions, CliError> {
        let config = load_config(&a.common)?;
        let (method, steady_tol) = solver_settings(&a.common, &config)?;
        Ok(AuditOptions {
            method,
            steady_tol,
            seed: a.seed,
            fault: a.inject_fault.map(|o| Fault::CavityOccupationMismatch { dynamics_occupation: o }),
            ..AuditOptions::default()
        })
    };
    if let Some(count) = a.fuzz {
        let opts = base_opts()?;
        let mut ranges = FuzzRanges::default();
        if let Some(p) = &a.common.preset {
            ranges.families = vec![p.parse::<Preset>()?];
        }
        let reports = fuzz_with(a.seed, count, &ranges, &opts);
        let mut failed = 0;
        for r in &reports {
            let (_, case) = r.seed.expect("fuzz reports carry their case");
            let verdict = if r.passed() { "pass" } else { "FAIL" };
            println!("case {case:>4} {:<6} {} {verdict}", r.model.intra.name(), r.model_fingerprint);
            if !r.passed() {
                failed += 1;
                println!("{r}");
            }
        }
        println!("{} of {count} models passed (seed {})", count - failed, a.seed);
        if failed > 0 {
            eprintln!("reproduce with: audit --fuzz {count} --seed {}", a.seed);
        }
        return Ok(if failed > 0 { EXIT_CHECK_FAILED } else { EXIT_OK });
    }
    let (_, model) = resolve(&a.common)?;
    let report = audit_model_with(&model, &base_opts()?);
    println!("{report}");
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Vec<Vec<f64>>,
}

/// Initial state of an evolution run.
pub fn initial_state(model: &ModelSpec, initial: &str) -> Result<DensityMatrix, CliError> {
    let d = model.dim();
    let di = model.intra_dim();
    let bad = |msg: String| CliError::usage(format!("initial state `{initial}`: {msg}"));
    if initial == "vacuum" {
        let mut psi = vec![C64::new(0.0, 0.0); d];
        psi[0] = C64::new(1.0, 0.0);
        return Ok(DensityMatrix::pure(&psi)?);
    }
    if initial == "thermal" {
        // Product of the cavity bath's and the first intra bath's Gibbs
        // states; both energies are diagonal in the product basis.
        let cavity = model.channels.iter().find(|c| c.kind.is_cavity()).expect("validated model has a cavity bath");
        let t_c = model.temperature(cavity)?;
        let t_i = match model.channels.iter().find(|c| c.kind == ChannelKind::Intra) {
            Some(c) => model.temperature(c)?,
            None => t_c,
        };
        let n = model.number()?;
        let h = intra_thermo_hamiltonian(model)?;
        let boltzmann = |e: f64, t: f64| if t > 0.0 { (-e / t).exp() } else if e == 0.0 { 1.0 } else { 0.0 };
        let w: Vec<f64> = (0..d)
            .map(|i| boltzmann(model.omega_d() * n.get(i, i).re, t_c) * boltzmann(h.get(i, i).re, t_i))
            .collect();
        return Ok(DensityMatrix::from_unnormalized(&Operator::diag(&w))?);
    }
    if let Some(rest) = initial.strip_prefix("coherent:") {
        let (re, im) = rest.split_once(',').unwrap_or((rest, "0"));
        let alpha = C64::new(
            re.trim().parse().map_err(|_| bad("bad real part".into()))?,
            im.trim().parse().map_err(|_| bad("bad imaginary part".into()))?,
        );
        let mut psi = vec![C64::new(0.0, 0.0); d];
        let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for k in 0..model.n_max {
            psi[k * di] = amp;
            amp = amp * alpha / ((k + 1) as f64).sqrt();
        }
        let kept: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if 1.0 - kept > 1e-6 {
            log::warn!("coherent state loses {:.3e} of its norm to the truncation", 1.0 - kept);
        }
        return Ok(DensityMatrix::pure(&psi)?);
    }
    if let Some(path) = initial.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let f: StateFile = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
        if !shape_ok(&f.re) || !(f.im.is_empty() || shape_ok(&f.im)) {
            return Err(bad(format!("expected {d}×{d} matrices")));
        }
        let op = Operator::from_fn(d, |i, j| C64::new(f.re[i][j], if f.im.is_empty() { 0.0 } else { f.im[i][j] }));
        return Ok(DensityMatrix::new(op)?);
    }
    Err(bad("expected vacuum, thermal, coherent:<re>,<im> or file:<path>".into()))
}

fn evolve(a: &EvolveArgs) -> Result<i32, CliError> {
    let (config, model) = resolve(&a.common)?;
    let section = config.evolve.clone().unwrap_or_default();
    let initial = a.initial.clone().or(section.initial).unwrap_or_else(|| "vacuum".into());
    let t_end = a.t_end.or(section.t_end).unwrap_or(20.0);
    let samples = a.samples.or(section.samples).unwrap_or(101);
    if !(t_end > 0.0) || samples < 2 {
        return Err(CliError::usage("evolve needs t_end > 0 and at least 2 samples"));
    }
    let rho0 = initial_state(&model, &initial)?;
    let l = assemble(&model)?;
    let grid: Vec<f64> = (0..samples).map(|k| t_end * k as f64 / (samples - 1) as f64).collect();
    let opts = EvolveOptions { max_step: a.max_step.or(section.max_step), ..EvolveOptions::default() };
    let states = evolve_with(&l, &rho0, &grid, opts)?;
    let thermo = Thermo::new(&model)?;

    let mut header = vec!["t".to_string(), "dS_dt".to_string()];
    header.extend(columns(&model));
    let mut table = Table::new(header);
    for (t, rho) in grid.iter().zip(&states) {
        let ds = entropy_rate(rho, &l.apply(rho.operator())?)?;
        let r = thermo.report(rho, ds)?;
        let mut cells = vec![*t, ds];
        cells.extend(row(&r, rho, tail_mass(rho, &model)?.tail_mass));
        table.push(cells);
    }
    emit(a.common.out.as_deref(), &table.render())?;
    Ok(EXIT_OK)
}
