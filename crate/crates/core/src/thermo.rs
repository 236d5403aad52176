//! Conventional and input–output thermodynamic bookkeeping for a state.
//!
//! Conventional: every photon leaving through a cavity port carries heat
//! `J_c = ω_d κ(n_c − ⟨a†a⟩)`, and the drive supplies
//! `P = −2√κ ω_d Re(f*⟨a⟩)`.
//!
//! Input–output: the coherent part of the output light counts as work,
//! `P_io = −ω_d(|⟨b_out⟩|² − |f|²)`, and only its noise as heat,
//! `J_io = ω_d κ(n_c − ⟨⟨a†a⟩⟩)`. Intra-cavity baths are treated the same in
//! both.

use crate::error::{Error, Result};
use crate::linalg::{entropy_rate, DensityMatrix, Operator, SuperOperator};
use crate::models::{
    build_channels, build_hamiltonian_rotating, build_thermo_hamiltonian, intra_thermo_hamiltonian, BathChannel,
    ChannelKind, IntraSystem, ModelSpec,
};
use crate::solver::{shifted_fixed_points, shifted_form_at, GibbsState, Liouvillian};
use crate::C64;

/// Relative tolerance of the internal cross-checks.
pub const CHECK_TOL: f64 = 1e-9;

/// First moments of the cavity field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub a_mean: C64,
    pub n_mean: f64,
    /// `⟨⟨a†a⟩⟩ = ⟨a†a⟩ − |⟨a⟩|²`.
    pub n_connected: f64,
    /// Population of the highest Fock level kept.
    pub top_population: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputField {
    /// Co-rotating `⟨b_out⟩` of the driven port.
    pub b_out: C64,
    /// `Σ_j |⟨b_out,j⟩|² − |f_j|²` over accessible ports.
    pub flux_delta_coherent: f64,
    /// `Σ_j κ_j(⟨⟨a†a⟩⟩ − n_j)` over accessible ports, including the
    /// Fock boundary term (see [`Thermo::conventional_heats`]).
    pub noise_flux_delta: f64,
}

/// Heat into the system from one bath in both frameworks.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelHeat {
    pub label: String,
    pub kind: ChannelKind,
    /// Zero for a bath at absolute zero.
    pub temperature: f64,
    pub conventional: f64,
    /// Equal to `conventional` except for accessible cavity ports.
    pub io: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermoReport {
    pub u: f64,
    pub p_conv: f64,
    /// Summed over accessible ports.
    pub j_c_conv: f64,
    /// Heat from every other bath (intra-cavity and inaccessible ports), by label.
    pub j_intra: Vec<(String, f64)>,
    pub p_io: f64,
    pub j_c_io: f64,
    pub ds_dt: f64,
    pub sigma_conv: f64,
    pub sigma_io: f64,
    pub b_out_coherent: C64,
    pub a_mean: C64,
    pub n_mean: f64,
    pub n_var_connected: f64,
    pub channels: Vec<ChannelHeat>,
}

impl ThermoReport {
    pub fn intra(&self, label: &str) -> Option<f64> {
        self.j_intra.iter().find(|(l, _)| l == label).map(|&(_, j)| j)
    }

    /// `P + Σ J` in the conventional split; zero in a steady state.
    pub fn energy_balance(&self) -> f64 {
        self.p_conv + self.channels.iter().map(|c| c.conventional).sum::<f64>()
    }
}

/// Operators derived from a model, built once per model.
#[derive(Clone, Debug)]
pub struct Thermo {
    model: ModelSpec,
    a: Operator,
    n: Operator,
    h_td: Operator,
    h_intra: Operator,
    h_rot: Operator,
    top: Operator,
    parts: Vec<(BathChannel, SuperOperator)>,
    temperatures: Vec<f64>,
}

fn agree(what: &str, a: f64, b: f64, floor: f64) -> Result<()> {
    let scale = a.abs().max(b.abs());
    if (a - b).abs() <= CHECK_TOL * scale + 1e-13 * floor || (a.is_infinite() && a == b) {
        Ok(())
    } else {
        Err(Error::InternalConsistency { what: what.to_string(), a, b })
    }
}

impl Thermo {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        model.validate()?;
        let temperatures = model.channels.iter().map(|c| model.temperature(c)).collect::<Result<_>>()?;
        let mut top = vec![0.0; model.n_max];
        top[model.n_max - 1] = 1.0;
        Ok(Self {
            model: model.clone(),
            a: model.annihilation()?,
            n: model.number()?,
            h_td: build_thermo_hamiltonian(model)?,
            h_intra: intra_thermo_hamiltonian(model)?,
            h_rot: build_hamiltonian_rotating(model)?,
            top: model.embed_intra_cavity(&Operator::diag(&top)),
            parts: build_channels(model)?,
            temperatures,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.model.dim() {
            return Err(Error::DimensionMismatch { expected: self.model.dim(), got: rho.dim() });
        }
        Ok(())
    }

    /// Energy-flux scale used as an absolute floor in cross-checks.
    fn scale(&self, m: &Moments) -> f64 {
        let kappa: f64 = self.model.channels.iter().map(|c| c.rate).sum();
        self.model.omega_d() * kappa * (1.0 + m.n_mean + self.model.drive.amplitude.norm_sqr())
    }

    pub fn moments(&self, rho: &DensityMatrix) -> Result<Moments> {
        self.check_dim(rho)?;
        let a_mean = self.a.trace_product(rho.operator());
        let n_mean = self.n.trace_product(rho.operator()).re;
        let top_population = self.top.trace_product(rho.operator()).re;
        Ok(Moments { a_mean, n_mean, n_connected: n_mean - a_mean.norm_sqr(), top_population })
    }

    /// `U = ⟨H_TD⟩`.
    pub fn internal_energy(&self, rho: &DensityMatrix) -> Result<f64> {
        self.check_dim(rho)?;
        Ok(self.h_td.trace_product(rho.operator()).re)
    }

    /// `P = −√κ ω_d (f*⟨a⟩ + f⟨a†⟩)`, cross-checked against `−i⟨[H_TD, H]⟩`.
    pub fn conventional_power(&self, rho: &DensityMatrix) -> Result<f64> {
        let m = self.moments(rho)?;
        let p = self.power_formula(&m);
        let q = commutator_expectation(&self.h_td, &self.h_rot, rho);
        agree("power from H_TD commutator", p, q, self.scale(&m))?;
        Ok(p)
    }

    fn power_formula(&self, m: &Moments) -> f64 {
        let idx = self.model.driven_channel().expect("validated");
        let kappa = self.model.channels[idx].rate;
        let f = self.model.drive.amplitude;
        -2.0 * kappa.sqrt() * self.model.omega_d() * (f.conj() * m.a_mean).re
    }

    /// Conventional heat from every bath, in channel order. Intra baths use
    /// `Tr{H'_TD 𝓛'ρ}`. Cavity ports use `ω_d κ(n − ⟨a†a⟩ − n N p_top)`,
    /// checked against `Tr{ω_d a†a 𝓛_c ρ}`: on `N` Fock levels
    /// `a a† = a†a + 1 − N|N−1⟩⟨N−1|`, so the familiar moment formula picks up
    /// a boundary term proportional to the top-level population `p_top`.
    /// Keeping it makes the currents those of the truncated generator, so the
    /// steady-state energy balance closes to solver precision.
    pub fn conventional_heats(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let m = self.moments(rho)?;
        let wd = self.model.omega_d();
        self.parts
            .iter()
            .map(|(c, part)| {
                let drho = part.apply(rho.operator())?;
                if c.kind.is_cavity() {
                    let j = wd * c.rate * (c.occupation - m.n_mean - self.boundary(c, &m));
                    let t = wd * self.n.trace_product(&drho).re;
                    agree(&format!("cavity heat `{}`", c.label), j, t, self.scale(&m))?;
                    let leak = self.h_intra.trace_product(&drho).re;
                    agree(&format!("Tr{{H'_TD 𝓛_c ρ}} = 0 for `{}`", c.label), leak, 0.0, self.scale(&m))?;
                    Ok(j)
                } else {
                    let j = self.h_intra.trace_product(&drho).re;
                    let leak = self.n.trace_product(&drho).re;
                    agree(&format!("photon conservation of `{}`", c.label), wd * leak, 0.0, self.scale(&m))?;
                    Ok(j)
                }
            })
            .collect()
    }

    /// `n N p_top` for a cavity port.
    fn boundary(&self, c: &BathChannel, m: &Moments) -> f64 {
        c.occupation * self.model.n_max as f64 * m.top_population
    }

    /// `J_c` summed over accessible ports.
    pub fn conventional_heat_cavity(&self, rho: &DensityMatrix) -> Result<f64> {
        let heats = self.conventional_heats(rho)?;
        Ok(self.sum_accessible(&heats))
    }

    fn sum_accessible(&self, values: &[f64]) -> f64 {
        self.model
            .channels
            .iter()
            .zip(values)
            .filter(|(c, _)| c.kind == ChannelKind::CavityAccessible)
            .map(|(_, v)| v)
            .sum()
    }

    /// Heat from intra baths and inaccessible ports, by label. For a two-level
    /// system the closed form `ω_d γ (n_q/n_F)(n_F − ⟨σ₊σ₋⟩)` is checked too.
    pub fn intra_heat(&self, rho: &DensityMatrix) -> Result<Vec<(String, f64)>> {
        let heats = self.conventional_heats(rho)?;
        let mut out = Vec::new();
        for ((c, _), j) in self.parts.iter().zip(heats) {
            if c.kind == ChannelKind::CavityAccessible {
                continue;
            }
            if let Some(closed) = self.tls_closed_form(c, rho)? {
                let floor = self.model.omega_d() * c.rate;
                agree(&format!("two-level closed form `{}`", c.label), j, closed, floor)?;
            }
            out.push((c.label.clone(), j));
        }
        Ok(out)
    }

    /// Closed-form two-level heat, when `channel` is a qubit bath.
    pub fn tls_closed_form(&self, channel: &BathChannel, rho: &DensityMatrix) -> Result<Option<f64>> {
        if !matches!(self.model.intra, IntraSystem::Tls { .. }) || channel.kind != ChannelKind::Intra {
            return Ok(None);
        }
        let wd = self.model.omega_d();
        let excited = self.h_intra.trace_product(rho.operator()).re / wd;
        let t = self.model.temperature(channel)?;
        let (n_f, ratio) = if t > 0.0 {
            let n_f = 1.0 / ((self.model.reference_frequency(channel) / t).exp() + 1.0);
            (n_f, channel.occupation / n_f)
        } else {
            (0.0, 1.0)
        };
        Ok(Some(wd * channel.rate * ratio * (n_f - excited)))
    }

    /// `P_io = −ω_d Σ_j (|f_j + √κ_j⟨a⟩|² − |f_j|²)`, cross-checked against
    /// `−i⟨[H_TD, H_s]⟩`.
    pub fn io_power(&self, rho: &DensityMatrix) -> Result<f64> {
        let m = self.moments(rho)?;
        let field = self.output_field_from(&m);
        let p = -self.model.omega_d() * field.flux_delta_coherent;
        let kappa: f64 = self
            .model
            .channels
            .iter()
            .filter(|c| c.kind == ChannelKind::CavityAccessible)
            .map(|c| c.rate)
            .sum();
        let x = &self.a.scaled(m.a_mean.conj()) - &self.a.adjoint().scaled(m.a_mean);
        let h_s = &self.h_rot + &x.scaled(C64::new(0.0, 0.5 * kappa));
        let q = commutator_expectation(&self.h_td, &h_s, rho);
        agree("io power from shifted Hamiltonian", p, q, self.scale(&m))?;
        Ok(p)
    }

    /// `J_io = ω_d Σ_j κ_j(n_j − ⟨⟨a†a⟩⟩)`, cross-checked against
    /// `Tr{ω_d a†a 𝓛_s ρ}`.
    pub fn io_heat(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.sum_accessible(&self.io_heats(rho)?))
    }

    fn io_heats(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let m = self.moments(rho)?;
        let conventional = self.conventional_heats(rho)?;
        let l = Liouvillian::from_parts(self.h_rot.clone(), self.parts.clone())?;
        let shifted = shifted_form_at(&l, &self.model, m.a_mean)?;
        let wd = self.model.omega_d();
        self.model
            .channels
            .iter()
            .zip(&shifted.parts)
            .zip(conventional)
            .map(|((c, (_, part)), conv)| {
                if c.kind != ChannelKind::CavityAccessible {
                    return Ok(conv);
                }
                let j = wd * c.rate * (c.occupation - m.n_connected - self.boundary(c, &m));
                let t = wd * self.n.trace_product(&part.apply(rho.operator())?).re;
                agree(&format!("io heat `{}`", c.label), j, t, self.scale(&m))?;
                Ok(j)
            })
            .collect()
    }

    pub fn output_field(&self, rho: &DensityMatrix) -> Result<OutputField> {
        let m = self.moments(rho)?;
        let field = self.output_field_from(&m);
        let p = self.conventional_power(rho)?;
        let j = self.conventional_heat_cavity(rho)?;
        let total = self.model.omega_d() * (field.flux_delta_coherent + field.noise_flux_delta);
        agree("energy carried by the output field", total, -(p + j), self.scale(&m))?;
        Ok(field)
    }

    fn output_field_from(&self, m: &Moments) -> OutputField {
        let mut b_out = C64::new(0.0, 0.0);
        let mut coherent = 0.0;
        let mut noise = 0.0;
        let driven = self.model.driven_channel();
        for (i, c) in self.model.channels.iter().enumerate() {
            if c.kind != ChannelKind::CavityAccessible {
                continue;
            }
            let f = self.model.drive_amplitude(i);
            let b = f + m.a_mean * c.rate.sqrt();
            if Some(i) == driven {
                b_out = b;
            }
            coherent += b.norm_sqr() - f.norm_sqr();
            noise += c.rate * (m.n_connected - c.occupation + self.boundary(c, m));
        }
        OutputField { b_out, flux_delta_coherent: coherent, noise_flux_delta: noise }
    }

    /// Heat per bath in both frameworks.
    pub fn channel_heats(&self, rho: &DensityMatrix) -> Result<Vec<ChannelHeat>> {
        let conv = self.conventional_heats(rho)?;
        let io = self.io_heats(rho)?;
        Ok(self
            .model
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| ChannelHeat {
                label: c.label.clone(),
                kind: c.kind,
                temperature: self.temperatures[i],
                conventional: conv[i],
                io: io[i],
            })
            .collect())
    }

    /// `(Σ, Σ_io)` with `Σ = dS/dt − Σ_p J_p/T_p`.
    pub fn entropy_production(&self, rho: &DensityMatrix, ds_dt: f64) -> Result<(f64, f64)> {
        let heats = self.channel_heats(rho)?;
        let m = self.moments(rho)?;
        Ok(entropy_from_heats(&heats, ds_dt, self.scale(&m)))
    }

    pub fn report(&self, rho: &DensityMatrix, ds_dt: f64) -> Result<ThermoReport> {
        let m = self.moments(rho)?;
        let heats = self.channel_heats(rho)?;
        let (sigma_conv, sigma_io) = entropy_from_heats(&heats, ds_dt, self.scale(&m));
        let field = self.output_field(rho)?;
        let sum = |f: fn(&ChannelHeat) -> f64| -> f64 {
            heats.iter().filter(|h| h.kind == ChannelKind::CavityAccessible).map(f).sum()
        };
        Ok(ThermoReport {
            u: self.internal_energy(rho)?,
            p_conv: self.conventional_power(rho)?,
            j_c_conv: sum(|h| h.conventional),
            j_intra: self.intra_heat(rho)?,
            p_io: self.io_power(rho)?,
            j_c_io: sum(|h| h.io),
            ds_dt,
            sigma_conv,
            sigma_io,
            b_out_coherent: field.b_out,
            a_mean: m.a_mean,
            n_mean: m.n_mean,
            n_var_connected: m.n_connected,
            channels: heats,
        })
    }

    /// Reference states of the conventional split, in channel order.
    pub fn conventional_references(&self) -> Result<Vec<GibbsState>> {
        crate::solver::conventional_fixed_points(&self.model)
    }

    /// Reference states of the shifted split around `alpha`.
    pub fn shifted_references(&self, alpha: C64) -> Result<Vec<GibbsState>> {
        shifted_fixed_points(&self.model, alpha)
    }

    /// Bath-resolved parts of the conventional generator.
    pub fn parts(&self) -> &[(BathChannel, SuperOperator)] {
        &self.parts
    }
}

/// `−i Tr{[A, B] ρ}`.
fn commutator_expectation(a: &Operator, b: &Operator, rho: &DensityMatrix) -> f64 {
    let c = a.commutator(b);
    (C64::new(0.0, -1.0) * c.trace_product(rho.operator())).re
}

/// `−J/T`, with a bath at absolute zero giving `+∞` for any heat flow above
/// round-off.
fn entropy_flow(j: f64, t: f64, scale: f64) -> f64 {
    if t > 0.0 {
        -j / t
    } else if j.abs() <= 1e-12 * scale {
        0.0
    } else if j < 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

fn entropy_from_heats(heats: &[ChannelHeat], ds_dt: f64, scale: f64) -> (f64, f64) {
    let conv = heats.iter().map(|h| entropy_flow(h.conventional, h.temperature, scale)).sum::<f64>();
    let io = heats.iter().map(|h| entropy_flow(h.io, h.temperature, scale)).sum::<f64>();
    (ds_dt + conv, ds_dt + io)
}

pub fn internal_energy(model: &ModelSpec, rho: &DensityMatrix) -> Result<f64> {
    Thermo::new(model)?.internal_energy(rho)
}

pub fn conventional_power(model: &ModelSpec, rho: &DensityMatrix) -> Result<f64> {
    Thermo::new(model)?.conventional_power(rho)
}

pub fn conventional_heat_cavity(model: &ModelSpec, rho: &DensityMatrix) -> Result<f64> {
    Thermo::new(model)?.conventional_heat_cavity(rho)
}

pub fn intra_heat(model: &ModelSpec, rho: &DensityMatrix) -> Result<Vec<(String, f64)>> {
    Thermo::new(model)?.intra_heat(rho)
}

pub fn io_power(model: &ModelSpec, rho: &DensityMatrix) -> Result<f64> {
    Thermo::new(model)?.io_power(rho)
}

pub fn io_heat(model: &ModelSpec, rho: &DensityMatrix) -> Result<f64> {
    Thermo::new(model)?.io_heat(rho)
}

pub fn output_field(model: &ModelSpec, rho: &DensityMatrix) -> Result<OutputField> {
    Thermo::new(model)?.output_field(rho)
}

pub fn entropy_production(model: &ModelSpec, rho: &DensityMatrix, ds_dt: f64) -> Result<(f64, f64)> {
    Thermo::new(model)?.entropy_production(rho, ds_dt)
}

pub fn thermo_report(model: &ModelSpec, rho: &DensityMatrix, ds_dt: f64) -> Result<ThermoReport> {
    Thermo::new(model)?.report(rho, ds_dt)
}

/// Largest fixed-point residual accepted by [`spohn_contribution`].
pub const FIXED_POINT_TOL: f64 = 1e-8;

/// `−Tr{𝓛_p ρ (ln ρ − ln σ)}`, non-negative whenever `𝓛_p σ = 0`.
///
/// A bath at absolute zero has a singular `ln σ`; the term is then `+∞`
/// unless `𝓛_p ρ` carries no energy.
pub fn spohn_contribution(part: &SuperOperator, rho: &DensityMatrix, sigma: &GibbsState) -> Result<f64> {
    let residual = sigma.residual(part)?;
    if residual > FIXED_POINT_TOL {
        return Err(Error::Precondition(format!(
            "reference state of `{}` is not a fixed point (residual {residual:.3e})",
            sigma.label
        )));
    }
    let drho = part.apply(rho.operator())?;
    let own = entropy_rate(rho, &drho)?;
    match sigma.log_up_to_constant() {
        Some(log_sigma) => Ok(own + log_sigma.trace_product(&drho).re),
        None => {
            let heat = sigma.generator.trace_product(&drho).re;
            Ok(if heat.abs() <= 1e-12 * sigma.generator.max_abs() { own } else { f64::INFINITY })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::models::preset;
    use crate::solver::{assemble, steady_state, SteadyStateMethod, DEFAULT_TOL};

    fn basis(d: usize, k: usize) -> DensityMatrix {
        let mut psi = vec![C64::new(0.0, 0.0); d];
        psi[k] = C64::new(1.0, 0.0);
        DensityMatrix::pure(&psi).unwrap()
    }

    fn steady(model: &ModelSpec) -> DensityMatrix {
        steady_state(&assemble(model).unwrap(), SteadyStateMethod::Auto, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn internal_energy_examples() {
        let empty = preset("empty", &[("cavity.n_max", 10.0)]).unwrap();
        assert_eq!(internal_energy(&empty, &basis(10, 0)).unwrap(), 0.0);
        let maser = preset("maser", &[("cavity.n_max", 3.0)]).unwrap();
        assert_eq!(internal_energy(&maser, &basis(9, 2)).unwrap(), 3e4);
        let m = preset("empty", &[("drive.f", 0.0), ("cavity.n_max", 60.0), ("channels.cavity.n", 1.0)]).unwrap();
        let u = internal_energy(&m, &steady(&m)).unwrap();
        assert!((u - 1e4).abs() < 1e-8 * 1e4);
    }

    #[test]
    fn empty_cavity_power_and_heat() {
        // 4ω_d|f|² on resonance, 2ω_d|f|² at Δ = κ/2; ω_d = Ω − Δ
        for (delta, p_expect) in [(0.0, 400.0), (0.5, 2.0 * 9999.5 * 0.01)] {
            let m = preset("empty", &[("drive.delta", delta)]).unwrap();
            let rho = steady(&m);
            let t = Thermo::new(&m).unwrap();
            let p = t.conventional_power(&rho).unwrap();
            assert!((p - p_expect).abs() < 1e-8 * p_expect, "Δ={delta}: {p}");
            let j = t.conventional_heat_cavity(&rho).unwrap();
            assert!((j + p_expect).abs() < 1e-6, "Δ={delta}: {j}");
            assert!(t.io_power(&rho).unwrap().abs() < 1e-9);
            assert!(t.io_heat(&rho).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn undriven_power_vanishes() {
        let m = preset("kerr", &[("drive.f", 0.0), ("cavity.n_max", 8.0)]).unwrap();
        let rho = DensityMatrix::maximally_mixed(8);
        assert_eq!(conventional_power(&m, &rho).unwrap(), 0.0);
        assert_eq!(io_power(&m, &rho).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_heat_from_warm_bath() {
        let m = preset("empty", &[("cavity.n_max", 6.0), ("channels.cavity.n", 1.0)]).unwrap();
        assert_eq!(conventional_heat_cavity(&m, &basis(6, 0)).unwrap(), 1e4);
    }

    #[test]
    fn reflected_field() {
        for delta in [0.0, -3.0, 1.7] {
            let m = preset("empty", &[("drive.delta", delta), ("channels.cavity.n", 0.0)]).unwrap();
            let field = output_field(&m, &steady(&m)).unwrap();
            assert!((field.b_out.norm() - 0.1).abs() < 1e-10);
            if delta == 0.0 {
                assert!((field.b_out - C64::new(-0.1, 0.0)).norm() < 1e-10);
            }
        }
        let m = preset("empty", &[("drive.f", 0.0), ("cavity.n_max", 60.0)]).unwrap();
        let field = output_field(&m, &steady(&m)).unwrap();
        assert_eq!(field.b_out, C64::new(0.0, 0.0));
        assert!(field.noise_flux_delta.abs() < 1e-10);
    }

    #[test]
    fn coherent_state_has_no_io_heat() {
        let n_max = 30;
        let m = preset("empty", &[("cavity.n_max", n_max as f64), ("channels.cavity.n", 0.0)]).unwrap();
        // |α = 1⟩ amplitudes e^{−1/2}/√n!
        let mut psi = Vec::with_capacity(n_max);
        let mut c = (-0.5f64).exp();
        for k in 0..n_max {
            if k > 0 {
                c /= (k as f64).sqrt();
            }
            psi.push(C64::new(c, 0.0));
        }
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!(io_heat(&m, &rho).unwrap().abs() < 1e-9);
    }

    #[test]
    fn tls_equilibrium_has_no_qubit_heat() {
        let m = preset("tls", &[("cavity.n_max", 3.0)]).unwrap();
        let nq = 0.1;
        let nf = nq / (2.0 * nq + 1.0);
        let qubit = Operator::diag(&[1.0 - nf, nf]);
        let rho = DensityMatrix::new(kron(&basis(3, 0).operator().clone(), &qubit)).unwrap();
        let j = intra_heat(&m, &rho).unwrap();
        assert_eq!(j.len(), 1);
        assert!(j[0].1.abs() < 1e-12);
        assert!(intra_heat(&preset("empty", &[]).unwrap(), &DensityMatrix::maximally_mixed(20)).unwrap().is_empty());
    }

    #[test]
    fn equilibrium_produces_no_entropy() {
        let m = preset("tls", &[("drive.f", 0.0), ("cavity.n_max", 12.0)]).unwrap();
        let (s, s_io) = entropy_production(&m, &steady(&m), 0.0).unwrap();
        assert!(s.abs() < 1e-8 && s_io.abs() < 1e-8, "{s} {s_io}");
    }

    #[test]
    fn driven_empty_cavity_entropy() {
        let m = preset("empty", &[("channels.cavity.n", 1.0), ("cavity.n_max", 60.0)]).unwrap();
        let (s, s_io) = entropy_production(&m, &steady(&m), 0.0).unwrap();
        let expect = 400.0 * std::f64::consts::LN_2 / 1e4;
        assert!((s - expect).abs() < 1e-9, "{s}");
        assert!(s_io.abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_sentinel() {
        let m = preset("empty", &[("channels.cavity.n", 0.0)]).unwrap();
        let (s, s_io) = entropy_production(&m, &steady(&m), 0.0).unwrap();
        assert_eq!(s, f64::INFINITY);
        assert!(s_io.is_finite());
    }

    #[test]
    fn spohn_at_reference_state_vanishes() {
        let m = preset("tls", &[("cavity.n_max", 6.0)]).unwrap();
        let t = Thermo::new(&m).unwrap();
        for (g, (_, part)) in t.conventional_references().unwrap().iter().zip(t.parts()) {
            let sigma = g.state().unwrap();
            assert!(spohn_contribution(part, &sigma, g).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn spohn_rejects_non_fixed_reference() {
        let m = preset("empty", &[("cavity.n_max", 10.0)]).unwrap();
        let t = Thermo::new(&m).unwrap();
        let mut g = t.conventional_references().unwrap().remove(0);
        g.temperature *= 2.0;
        let rho = DensityMatrix::maximally_mixed(10);
        assert!(matches!(spohn_contribution(&t.parts()[0].1, &rho, &g), Err(Error::Precondition(_))));
    }
}
