//! Every identity and inequality linking the two bookkeepings, as a
//! machine-checkable report, plus a closed-form oracle and a fuzzer.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Operator};
use crate::models::{bose_occupation, occupation_to_temperature, BathChannel, ChannelKind, IntraSystem, ModelSpec, Preset, ReferenceFrequency};
use crate::solver::{
    assemble, mismatched_channel, shifted_form, steady_state, tail_mass, Liouvillian, SteadyStateMethod,
    DEFAULT_TOL, TRUNCATION_ERROR,
};
use crate::thermo::{spohn_contribution, Thermo, ThermoReport};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    pub note: String,
}

impl Check {
    /// Where the checked statement comes from.
    pub fn anchor(&self) -> &'static str {
        anchor(self.name)
    }
}

/// Every check run by [`audit_model`], in report order.
pub const CHECK_NAMES: [&str; 26] = [
    "steady-state-residual",
    "density-matrix-validity",
    "truncation-tail",
    "generator-trace-preservation",
    "hamiltonian-hermiticity",
    "thermo-hamiltonian-commutes-with-cavity",
    "power-commutator-form",
    "cavity-heat-trace-form",
    "decomposition-condition",
    "intra-photon-conservation",
    "two-level-closed-form",
    "output-field-energy",
    "first-law-identity",
    "steady-state-energy-balance",
    "io-power-shifted-hamiltonian",
    "io-heat-shifted-dissipator",
    "shifted-action-identity",
    "fixed-point-conventional",
    "fixed-point-shifted",
    "second-law-io",
    "second-law-ordering",
    "strict-tightening",
    "gap-identity",
    "spohn-nonnegative",
    "spohn-sum-conventional",
    "spohn-sum-io",
];

/// The statement each check verifies.
pub fn anchor(name: &str) -> &'static str {
    match name {
        "steady-state-residual" => "stationary solution of the master equation, ‖𝓛ρ‖ ≤ tol‖𝓛‖",
        "density-matrix-validity" => "ρ Hermitian, unit trace, positive semidefinite",
        "truncation-tail" => "Fock truncation holds the state (top-decile mass)",
        "generator-trace-preservation" => "𝓛†(1) = 0",
        "hamiltonian-hermiticity" => "rotating-frame Hamiltonian is Hermitian",
        "thermo-hamiltonian-commutes-with-cavity" => "[a, H'_TD] = 0",
        "power-commutator-form" => "P = −√κ ω_d(f*⟨a⟩ + c.c.) = −i⟨[H_TD, H]⟩",
        "cavity-heat-trace-form" => "J_c = ω_d κ(n_c − ⟨a†a⟩) = Tr{ω_d a†a 𝓛_c ρ}",
        "decomposition-condition" => "Tr{H'_TD 𝓛_c ρ} = 0",
        "intra-photon-conservation" => "Tr{a†a 𝓛'ρ} = Tr{a 𝓛'ρ} = 0",
        "two-level-closed-form" => "J' = ω_d γ (n_q/n_F)(n_F − ⟨σ₊σ₋⟩)",
        "output-field-energy" => "ω_d(Δ|b_out|² + Δ noise flux) = −(P + J_c)",
        "first-law-identity" => "P + J_c = P_io + J_c_io",
        "steady-state-energy-balance" => "∂_t U = P + J_c + ΣJ' = 0 in the steady state",
        "io-power-shifted-hamiltonian" => "P_io = −ω_d(|⟨b_out⟩|² − |f|²) = −i⟨[H_TD, H_s]⟩",
        "io-heat-shifted-dissipator" => "J_c_io = ω_d κ(n_c − ⟨⟨a†a⟩⟩) = Tr{ω_d a†a 𝓛_s ρ}",
        "shifted-action-identity" => "−i[H_s, ·] + 𝓛_s = −i[H, ·] + 𝓛_c on arbitrary states",
        "fixed-point-conventional" => "𝓛_c e^{−ω_d a†a/T_c} = 0 and 𝓛'_l e^{−H'_TD/T_l} = 0",
        "fixed-point-shifted" => "𝓛_s σ_s = 0 for the displaced thermal state",
        "second-law-io" => "Σ_io ≥ 0",
        "second-law-ordering" => "Σ ≥ Σ_io",
        "strict-tightening" => "Σ > Σ_io whenever ⟨a⟩ ≠ 0",
        "gap-identity" => "Σ − Σ_io = ω_d Σ_j κ_j|⟨a⟩|²/T_j",
        "spohn-nonnegative" => "−Tr{𝓛_p ρ(ln ρ − ln σ_p)} ≥ 0 for every bath, both splits",
        "spohn-sum-conventional" => "Σ = Σ_p −Tr{𝓛_p ρ(ln ρ − ln σ_p)}",
        "spohn-sum-io" => "Σ_io = Σ_p −Tr{𝓛_s,p ρ(ln ρ − ln σ_s,p)}",
        _ => "unknown check",
    }
}

/// Tolerances for algebraic identities (`strict`) and for fixed points,
/// energy balance and quantities going through matrix logarithms (`numeric`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceProfile {
    pub strict: f64,
    pub numeric: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self { strict: 1e-9, numeric: 1e-8 }
    }
}

/// A deliberately inconsistent model for exercising the failure path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fault {
    /// The dynamics use this cavity occupation while temperatures still
    /// come from the model's.
    CavityOccupationMismatch { dynamics_occupation: f64 },
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    pub profile: ToleranceProfile,
    pub method: SteadyStateMethod,
    pub steady_tol: f64,
    pub fault: Option<Fault>,
    /// Random states used for the shifted-action identity.
    pub random_states: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            profile: ToleranceProfile::default(),
            method: SteadyStateMethod::Auto,
            steady_tol: DEFAULT_TOL,
            fault: None,
            random_states: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AuditReport {
    pub checks: Vec<Check>,
    pub model_fingerprint: String,
    /// Fuzzing seed and case index, when the model was drawn.
    pub seed: Option<(u64, usize)>,
    /// Sign pattern of power and heat currents.
    pub regime: String,
    pub thermo: Option<ThermoReport>,
    pub model: ModelSpec,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Digest of the check table, for determinism comparisons.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.model_fingerprint.as_bytes());
        for c in &self.checks {
            h.update(format!("{}|{:?}|{:e}|{:e}|{}\n", c.name, c.status, c.residual, c.tolerance, c.note).as_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model {} ({})", self.model_fingerprint, self.model.intra.name())?;
        if let Some((seed, case)) = self.seed {
            write!(f, " seed {seed} case {case}")?;
        }
        writeln!(f)?;
        writeln!(f, "regime: {}", self.regime)?;
        for c in &self.checks {
            write!(f, "  {:<7} {:<42} {:>10.3e} / {:<9.1e}", c.status.as_str(), c.name, c.residual, c.tolerance)?;
            if !c.note.is_empty() {
                write!(f, "  {}", c.note)?;
            }
            writeln!(f)?;
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "FAILED" })
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn push(&mut self, name: &'static str, residual: f64, tolerance: f64, note: impl Into<String>) {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        self.checks.push(Check { name, status, residual, tolerance, note: note.into() });
    }

    fn skip(&mut self, name: &'static str, note: impl Into<String>) {
        self.checks.push(Check { name, status: Status::Skipped, residual: 0.0, tolerance: 0.0, note: note.into() });
    }

    fn fail(&mut self, name: &'static str, note: impl Into<String>) {
        self.checks.push(Check { name, status: Status::Fail, residual: f64::NAN, tolerance: 0.0, note: note.into() });
    }
}

/// `|a − b| / max(scale, tiny)`.
fn rel(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / scale.max(1e-300)
    }
}

pub fn audit_model(model: &ModelSpec, profile: ToleranceProfile) -> AuditReport {
    audit_model_with(model, &AuditOptions { profile, ..AuditOptions::default() })
}

/// Solves for the steady state and runs every check; solver failures become
/// failed checks.
pub fn audit_model_with(model: &ModelSpec, opts: &AuditOptions) -> AuditReport {
    let mut b = Builder { checks: Vec::with_capacity(CHECK_NAMES.len()) };
    let mut report = AuditReport {
        checks: Vec::new(),
        model_fingerprint: model.fingerprint(),
        seed: None,
        regime: String::from("unknown"),
        thermo: None,
        model: model.clone(),
    };
    if let Err(e) = run_checks(model, opts, &mut b, &mut report) {
        let done: Vec<&str> = b.checks.iter().map(|c| c.name).collect();
        let mut first = true;
        for name in CHECK_NAMES {
            if done.contains(&name) {
                continue;
            }
            if first {
                b.fail(name, e.to_string());
                first = false;
            } else {
                b.skip(name, "not reached");
            }
        }
    }
    report.checks = b.checks;
    debug_assert_eq!(report.checks.len(), CHECK_NAMES.len());
    report
}

fn run_checks(model: &ModelSpec, opts: &AuditOptions, b: &mut Builder, report: &mut AuditReport) -> Result<()> {
    let strict = opts.profile.strict;
    let numeric = opts.profile.numeric;

    let mut l = assemble(model)?;
    if let Some(Fault::CavityOccupationMismatch { dynamics_occupation }) = opts.fault {
        let idx = model.driven_channel().expect("validated");
        let part = mismatched_channel(model, &model.channels[idx], dynamics_occupation)?;
        let mut parts = l.channel_parts.clone();
        parts[idx].1 = part;
        l = Liouvillian::from_parts(l.hamiltonian.clone(), parts)?;
    }

    let rho = match steady_state(&l, opts.method, opts.steady_tol) {
        Ok(rho) => rho,
        Err(e) => {
            b.fail("steady-state-residual", e.to_string());
            return Err(e);
        }
    };
    b.push("steady-state-residual", l.relative_residual(rho.operator())?, opts.steady_tol, "");

    let min_eig = rho.eigen()?.values.first().copied().unwrap_or(0.0);
    let validity = (rho.operator().trace().re - 1.0).abs().max(rho.operator().hermiticity_defect()).max(-min_eig);
    b.push("density-matrix-validity", validity, 1e-8, format!("min eigenvalue {min_eig:.3e}"));

    let tail = tail_mass(&rho, model)?;
    let note = format!("top {} levels", tail.levels);
    b.push("truncation-tail", tail.tail_mass, TRUNCATION_ERROR, note);

    b.push("generator-trace-preservation", l.total.trace_defect(), 1e-10 * l.total.inf_norm().max(1.0), "");
    let hermiticity = l.hamiltonian.hermiticity_defect() / l.hamiltonian.max_abs().max(1e-300);
    b.push("hamiltonian-hermiticity", hermiticity, 1e-12, "");

    let thermo = Thermo::new(model)?;
    let a = model.annihilation()?;
    let n_op = model.number()?;
    let h_intra = crate::models::intra_thermo_hamiltonian(model)?;
    b.push("thermo-hamiltonian-commutes-with-cavity", a.commutator(&h_intra).max_abs(), 0.0, "");

    let wd = model.omega_d();
    let kappa_total: f64 = model.channels.iter().map(|c| c.rate).sum();
    let flux_scale = wd * kappa_total;
    let moments = thermo.moments(&rho)?;

    // Every cross-check below recomputes both sides independently of the
    // evaluator's own assertions, so a failure is reported, not raised.
    let h_td = crate::models::build_thermo_hamiltonian(model)?;
    let p_formula = {
        let idx = model.driven_channel().expect("validated");
        let f = model.drive.amplitude;
        -2.0 * model.channels[idx].rate.sqrt() * wd * (f.conj() * moments.a_mean).re
    };
    let p_comm = (C64::new(0.0, -1.0) * h_td.commutator(&l.hamiltonian).trace_product(rho.operator())).re;
    b.push(
        "power-commutator-form",
        rel(p_formula, p_comm, p_formula.abs().max(p_comm.abs()).max(1e-3 * flux_scale)),
        strict,
        format!("P = {p_formula:.6e}"),
    );

    let mut worst_heat: f64 = 0.0;
    let mut worst_leak: f64 = 0.0;
    let mut worst_photon: f64 = 0.0;
    for (c, part) in &l.channel_parts {
        let drho = part.apply(rho.operator())?;
        if c.kind.is_cavity() {
            let boundary = c.occupation * model.n_max as f64 * moments.top_population;
            let formula = wd * c.rate * (c.occupation - moments.n_mean - boundary);
            let trace = wd * n_op.trace_product(&drho).re;
            worst_heat = worst_heat.max(rel(formula, trace, formula.abs().max(trace.abs()).max(1e-3 * flux_scale)));
            worst_leak = worst_leak.max(h_intra.trace_product(&drho).norm() / flux_scale);
        } else {
            let photons = n_op.trace_product(&drho).norm().max(a.trace_product(&drho).norm());
            worst_photon = worst_photon.max(photons / c.rate);
        }
    }
    b.push("cavity-heat-trace-form", worst_heat, strict, "");
    b.push("decomposition-condition", worst_leak, strict, "");
    if model.channels.iter().any(|c| c.kind == ChannelKind::Intra) {
        b.push("intra-photon-conservation", worst_photon, 1e-10, "");
    } else {
        b.skip("intra-photon-conservation", "no intra-cavity bath");
    }

    let intra_channels: Vec<&BathChannel> = model.channels.iter().filter(|c| c.kind == ChannelKind::Intra).collect();
    if matches!(model.intra, IntraSystem::Tls { .. }) && !intra_channels.is_empty() {
        let mut worst: f64 = 0.0;
        for (c, part) in l.channel_parts.iter().filter(|(c, _)| c.kind == ChannelKind::Intra) {
            let trace = h_intra.trace_product(&part.apply(rho.operator())?).re;
            let closed = thermo.tls_closed_form(c, &rho)?.expect("two-level bath");
            worst = worst.max(rel(trace, closed, trace.abs().max(closed.abs()).max(1e-3 * wd * c.rate)));
        }
        b.push("two-level-closed-form", worst, 1e-10, "");
    } else {
        b.skip("two-level-closed-form", "no two-level system");
    }

    let r = thermo.report(&rho, 0.0);
    let r = match r {
        Ok(r) => r,
        Err(e) => {
            b.fail("output-field-energy", e.to_string());
            return Err(e);
        }
    };
    report.regime = regime(&r);

    let field_energy = {
        let mut coherent = 0.0;
        let mut noise = 0.0;
        for (i, c) in model.channels.iter().enumerate() {
            if c.kind != ChannelKind::CavityAccessible {
                continue;
            }
            let f = model.drive_amplitude(i);
            let bo = f + moments.a_mean * c.rate.sqrt();
            coherent += bo.norm_sqr() - f.norm_sqr();
            noise += c.rate * (moments.n_connected - c.occupation + c.occupation * model.n_max as f64 * moments.top_population);
        }
        wd * (coherent + noise)
    };
    let pj = r.p_conv + r.j_c_conv;
    b.push(
        "output-field-energy",
        rel(field_energy, -pj, field_energy.abs().max(r.p_conv.abs()).max(r.j_c_conv.abs()).max(1e-3 * flux_scale)),
        strict,
        "",
    );

    let first_scale = [r.p_conv, r.j_c_conv, r.p_io, r.j_c_io].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    b.push(
        "first-law-identity",
        rel(r.p_conv + r.j_c_conv, r.p_io + r.j_c_io, first_scale),
        strict,
        format!("P + J_c = {:.6e}", r.p_conv + r.j_c_conv),
    );

    let heats: Vec<f64> = r.channels.iter().map(|c| c.conventional).collect();
    let balance_scale = heats.iter().fold(r.p_conv.abs(), |m, j| m.max(j.abs())).max(flux_scale);
    b.push("steady-state-energy-balance", r.energy_balance().abs() / balance_scale, numeric, "");

    let shifted = shifted_form(&l, model, &rho)?;
    let p_io_comm = (C64::new(0.0, -1.0) * h_td.commutator(&shifted.hamiltonian).trace_product(rho.operator())).re;
    b.push(
        "io-power-shifted-hamiltonian",
        rel(r.p_io, p_io_comm, r.p_io.abs().max(p_io_comm.abs()).max(1e-3 * flux_scale)),
        strict,
        format!("P_io = {:.6e}", r.p_io),
    );
    let mut j_io_trace = 0.0;
    for (c, part) in &shifted.parts {
        if c.kind == ChannelKind::CavityAccessible {
            j_io_trace += wd * n_op.trace_product(&part.apply(rho.operator())?).re;
        }
    }
    b.push(
        "io-heat-shifted-dissipator",
        rel(r.j_c_io, j_io_trace, r.j_c_io.abs().max(j_io_trace.abs()).max(1e-3 * flux_scale)),
        strict,
        format!("J_c_io = {:.6e}", r.j_c_io),
    );

    let shifted_total = shifted.total();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.random_states {
        let s = random_state(l.dim, &mut rng)?;
        let lhs = shifted_total.apply(s.operator())?;
        let rhs = l.apply(s.operator())?;
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    b.push("shifted-action-identity", worst, 1e-10, format!("{} random states", opts.random_states));

    // Fixed points always use the model's own temperatures; under an injected
    // fault the dynamics disagree with them.
    let conventional_refs = thermo.conventional_references()?;
    let mut worst_conv: f64 = 0.0;
    let mut worst_label = String::new();
    for (g, (_, part)) in conventional_refs.iter().zip(&l.channel_parts) {
        let res = g.residual(part)?;
        if res > worst_conv {
            worst_conv = res;
            worst_label = g.label.clone();
        }
    }
    b.push("fixed-point-conventional", worst_conv, numeric, worst_label);

    let shifted_refs = thermo.shifted_references(shifted.alpha)?;
    let mut worst_shift: f64 = 0.0;
    let mut note = String::new();
    for (g, (c, part)) in shifted_refs.iter().zip(&shifted.parts) {
        let res = g.residual(part)?;
        worst_shift = worst_shift.max(res);
        if let Some(d) = g.displaced {
            note = format!("`{}` on {} Fock levels", c.label, d.enlarged_levels());
        }
    }
    b.push("fixed-point-shifted", worst_shift, numeric, note);

    let zero_t_accessible = r
        .channels
        .iter()
        .any(|c| c.kind == ChannelKind::CavityAccessible && c.temperature == 0.0);

    if r.sigma_io.is_finite() || r.sigma_io == f64::INFINITY {
        b.push("second-law-io", (-r.sigma_io).max(0.0), strict, format!("Σ_io = {:.6e}", r.sigma_io));
    } else {
        b.fail("second-law-io", format!("Σ_io = {}", r.sigma_io));
    }
    let ordering = if r.sigma_conv == f64::INFINITY { 0.0 } else { (r.sigma_io - r.sigma_conv).max(0.0) };
    b.push("second-law-ordering", ordering, strict, format!("Σ = {:.6e}", r.sigma_conv));

    let alpha_sq = r.a_mean.norm_sqr();
    if alpha_sq <= 1e-12 {
        b.skip("strict-tightening", "|⟨a⟩|² ≤ 1e-12");
    } else if r.sigma_conv.is_infinite() && r.sigma_io.is_infinite() {
        b.skip("strict-tightening", "both entropy productions infinite");
    } else if r.sigma_conv > r.sigma_io {
        b.push("strict-tightening", 0.0, 0.0, "");
    } else {
        b.push("strict-tightening", r.sigma_io - r.sigma_conv, 0.0, "Σ ≤ Σ_io");
    }

    if zero_t_accessible {
        b.skip("gap-identity", "accessible port at zero temperature");
    } else {
        let predicted: f64 = r
            .channels
            .iter()
            .filter(|c| c.kind == ChannelKind::CavityAccessible)
            .map(|c| wd * model.channel(&c.label).unwrap().rate * alpha_sq / c.temperature)
            .sum();
        let flows: f64 = r.channels.iter().filter(|c| c.temperature > 0.0).map(|c| c.conventional.abs() / c.temperature).sum();
        let gap = r.sigma_conv - r.sigma_io;
        b.push(
            "gap-identity",
            rel(gap, predicted, gap.abs().max(predicted.abs()).max(flows)),
            strict,
            format!("gap = {gap:.6e}"),
        );
    }

    let any_zero_t = r.channels.iter().any(|c| c.temperature == 0.0);
    if any_zero_t {
        b.skip("spohn-nonnegative", "bath at zero temperature");
        b.skip("spohn-sum-conventional", "bath at zero temperature");
        b.skip("spohn-sum-io", "bath at zero temperature");
    } else {
        let mut min_term = f64::INFINITY;
        let mut sum_conv = 0.0;
        for (g, (_, part)) in conventional_refs.iter().zip(&l.channel_parts) {
            match spohn_contribution(part, &rho, g) {
                Ok(v) => {
                    min_term = min_term.min(v);
                    sum_conv += v;
                }
                Err(e) => {
                    sum_conv = f64::NAN;
                    log::warn!("conventional Spohn term `{}`: {e}", g.label);
                }
            }
        }
        let mut sum_io = 0.0;
        for (g, (_, part)) in shifted_refs.iter().zip(&shifted.parts) {
            match spohn_contribution(part, &rho, g) {
                Ok(v) => {
                    min_term = min_term.min(v);
                    sum_io += v;
                }
                Err(e) => {
                    sum_io = f64::NAN;
                    log::warn!("shifted Spohn term `{}`: {e}", g.label);
                }
            }
        }
        b.push("spohn-nonnegative", (-min_term).max(0.0), strict, format!("smallest term {min_term:.3e}"));
        let d_conv = (sum_conv - r.sigma_conv).abs();
        let d_io = (sum_io - r.sigma_io).abs();
        b.push("spohn-sum-conventional", if d_conv.is_nan() { f64::INFINITY } else { d_conv }, numeric, "");
        b.push("spohn-sum-io", if d_io.is_nan() { f64::INFINITY } else { d_io }, numeric, "");
    }

    report.thermo = Some(r);
    Ok(())
}

fn random_state(d: usize, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let g = Operator::from_fn(d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    DensityMatrix::from_unnormalized(&(&g * &g.adjoint()))
}

fn sign(x: f64, scale: f64) -> char {
    if x > 1e-9 * scale {
        '+'
    } else if x < -1e-9 * scale {
        '-'
    } else {
        '0'
    }
}

fn regime(r: &ThermoReport) -> String {
    let scale = r.channels.iter().fold(r.p_conv.abs(), |m, c| m.max(c.conventional.abs()));
    let mut s = format!("P {} P_io {}", sign(r.p_conv, scale), sign(r.p_io, scale));
    for (label, j) in &r.j_intra {
        s.push_str(&format!(" J[{label}] {}", sign(*j, scale)));
    }
    if sign(r.p_conv, scale) == '+' && sign(r.p_io, scale) == '-' {
        s.push_str("; engine in the input-output picture (P_io < 0 < P)");
    }
    s
}

/// Closed-form steady state of the driven empty cavity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmptyCavityOracle {
    pub a_mean: C64,
    pub p_conv: f64,
    pub j_c_conv: f64,
    pub sigma_conv: f64,
    pub b_out: C64,
}

/// `⟨a⟩ = −√κ f/(iΔ + κ/2)`, `P = κ²ω_d|f|²/(Δ² + κ²/4) = −J_c`,
/// `Σ = P/T_c`, `⟨b_out⟩ = f (iΔ − κ/2)/(iΔ + κ/2)`.
pub fn analytic_empty_cavity(kappa: f64, f: C64, delta: f64, n_c: f64, omega_d: f64) -> Result<EmptyCavityOracle> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidModel(format!("κ must be positive, got {kappa}")));
    }
    let denom = C64::new(kappa / 2.0, delta);
    let a_mean = -f * kappa.sqrt() / denom;
    let p = kappa * kappa * omega_d * f.norm_sqr() / (delta * delta + kappa * kappa / 4.0);
    let t = occupation_to_temperature(n_c, omega_d)?;
    let sigma = if t > 0.0 {
        p / t
    } else if p > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(EmptyCavityOracle {
        a_mean,
        p_conv: p,
        j_c_conv: -p,
        sigma_conv: sigma,
        b_out: f * C64::new(-kappa / 2.0, delta) / denom,
    })
}

/// Parameter ranges for [`fuzz`]; all rates in units of κ.
#[derive(Clone, Debug)]
pub struct FuzzRanges {
    pub families: Vec<Preset>,
    pub detuning: (f64, f64),
    /// Cavity bath occupation.
    pub occupation: (f64, f64),
    /// Probability of drawing a zero-temperature cavity bath.
    pub zero_temperature: f64,
    /// Probability of adding an inaccessible port.
    pub inaccessible: f64,
    /// Probability of adding a second accessible port.
    pub second_port: f64,
}

impl Default for FuzzRanges {
    fn default() -> Self {
        Self {
            families: Preset::ALL.to_vec(),
            detuning: (-3.0, 3.0),
            occupation: (0.01, 0.5),
            zero_temperature: 0.0,
            inaccessible: 0.25,
            second_port: 0.25,
        }
    }
}

/// The model drawn for case `index` of a fuzz run.
pub fn fuzz_model(seed: u64, index: usize, ranges: &FuzzRanges) -> Result<ModelSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let family = ranges.families[rng.random_range(0..ranges.families.len())];
    let mut m = family.model();
    let uni = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
    let occupation = if rng.random_bool(ranges.zero_temperature) { 0.0 } else { uni(&mut rng, ranges.occupation) };
    let kappa = rng.random_range(0.5..2.0);
    m.channels[0].rate = kappa;
    m.channels[0].occupation = occupation;
    m.set_parameter("drive.delta", uni(&mut rng, ranges.detuning))?;
    match family {
        Preset::Empty => {
            m.n_max = 30;
            m.drive.amplitude = C64::from_polar(rng.random_range(0.0..0.5), rng.random_range(0.0..6.3));
        }
        Preset::Kerr => {
            m.n_max = 30;
            m.intra = IntraSystem::Kerr { k: rng.random_range(0.02..0.3) };
            m.drive.amplitude = C64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.3));
        }
        Preset::Tls => {
            m.n_max = 24;
            let omega_q = m.omega_cavity + rng.random_range(-1.0..1.0);
            m.intra = IntraSystem::Tls { omega_q, g: rng.random_range(0.05..0.5) };
            m.drive.amplitude = C64::from_polar(rng.random_range(0.0..0.3), rng.random_range(0.0..6.3));
            m.channels[1].rate = rng.random_range(0.02..0.5);
            m.channels[1].occupation = rng.random_range(0.01..0.5);
        }
        Preset::Maser => {
            m.n_max = 24;
            m.intra = IntraSystem::Maser {
                omega_2: m.omega_cavity + rng.random_range(-1.0..1.0),
                omega_3: 3.0 * m.omega_cavity,
                g: rng.random_range(0.1..0.8),
            };
            m.drive.amplitude = C64::from_polar(rng.random_range(0.0..0.2), rng.random_range(0.0..6.3));
            m.channels[1].rate = rng.random_range(0.05..0.5);
            m.channels[1].occupation = bose_occupation(3.0 * m.omega_cavity, rng.random_range(1e4..2e5));
            m.channels[2].rate = rng.random_range(10.0..100.0);
            m.channels[2].occupation = rng.random_range(0.001..0.05);
        }
    }
    if rng.random_bool(ranges.inaccessible) {
        m.channels.push(BathChannel::cavity(
            "loss",
            ChannelKind::CavityInaccessible,
            rng.random_range(0.05..0.5),
            uni(&mut rng, ranges.occupation),
        ));
    }
    if rng.random_bool(ranges.second_port) {
        m.channels.push(BathChannel {
            label: "port2".into(),
            kind: ChannelKind::CavityAccessible,
            rate: rng.random_range(0.1..1.0),
            occupation: uni(&mut rng, ranges.occupation),
            reference: ReferenceFrequency::Drive,
            transitions: Vec::new(),
        });
    }
    m.validate()?;
    Ok(m)
}

/// Audits `count` random models. Cases are independent and run in parallel;
/// reports come back in case order and depend only on `seed`.
pub fn fuzz(seed: u64, count: usize, ranges: &FuzzRanges) -> Vec<AuditReport> {
    fuzz_with(seed, count, ranges, &AuditOptions::default())
}

pub fn fuzz_with(seed: u64, count: usize, ranges: &FuzzRanges, opts: &AuditOptions) -> Vec<AuditReport> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut report = match fuzz_model(seed, i, ranges) {
                Ok(m) => audit_model_with(&m, &AuditOptions { seed: seed ^ i as u64, ..opts.clone() }),
                Err(e) => {
                    let mut r = audit_model_with(&Preset::Empty.model(), opts);
                    r.checks[0] = Check {
                        name: "steady-state-residual",
                        status: Status::Fail,
                        residual: f64::NAN,
                        tolerance: 0.0,
                        note: format!("model draw failed: {e}"),
                    };
                    r
                }
            };
            report.seed = Some((seed, i));
            report
        })
        .collect()
}
