//! Parameter schema and constructors for the driven-cavity models.
//!
//! Dynamics are written in the frame rotating at the drive frequency ω_d:
//! the cavity mode and every intra-cavity level whose thermodynamic energy is
//! a multiple of ω_d are rotated, which makes the generator time independent.
//! Thermodynamic observables only involve magnitudes and relative phases of
//! co-rotating amplitudes, so they are frame invariant.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{dissipator_super, fock_annihilation, kron, Operator, SuperOperator};
use crate::C64;

/// Where a bath couples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Photon loss into an output port whose light is observed.
    CavityAccessible,
    /// Photon loss into an unobserved port.
    CavityInaccessible,
    /// Dissipation of the intra-cavity system.
    Intra,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::CavityAccessible => "cavity-accessible",
            ChannelKind::CavityInaccessible => "cavity-inaccessible",
            ChannelKind::Intra => "intra",
        }
    }

    pub fn is_cavity(self) -> bool {
        !matches!(self, ChannelKind::Intra)
    }
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cavity-accessible" => Ok(ChannelKind::CavityAccessible),
            "cavity-inaccessible" => Ok(ChannelKind::CavityInaccessible),
            "intra" => Ok(ChannelKind::Intra),
            other => Err(Error::InvalidModel(format!("unknown channel kind `{other}`"))),
        }
    }
}

/// Frequency entering the Bose occupation ↔ temperature map of a bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceFrequency {
    /// The drive frequency ω_d.
    Drive,
    Fixed(f64),
    /// `value − ω_d`, e.g. ω₃ − ω_d for the maser's cold bath.
    FixedMinusDrive(f64),
}

impl ReferenceFrequency {
    pub fn resolve(self, omega_d: f64) -> f64 {
        match self {
            ReferenceFrequency::Drive => omega_d,
            ReferenceFrequency::Fixed(w) => w,
            ReferenceFrequency::FixedMinusDrive(w) => w - omega_d,
        }
    }
}

/// One thermal reservoir. Its dissipator is
/// `rate·occ·𝓓[L†] + rate·(occ+1)·𝓓[L]` for every lowering operator `L` of
/// the channel: the cavity `a` for cavity kinds, `|lower⟩⟨upper|` on the
/// intra-cavity system for each listed transition otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct BathChannel {
    pub label: String,
    pub kind: ChannelKind,
    pub rate: f64,
    pub occupation: f64,
    pub reference: ReferenceFrequency,
    /// `(lower, upper)` intra-system levels; empty for cavity kinds.
    pub transitions: Vec<(usize, usize)>,
}

impl BathChannel {
    pub fn cavity(label: &str, kind: ChannelKind, rate: f64, occupation: f64) -> Self {
        Self {
            label: label.to_string(),
            kind,
            rate,
            occupation,
            reference: ReferenceFrequency::Drive,
            transitions: Vec::new(),
        }
    }

    pub fn intra(
        label: &str,
        rate: f64,
        occupation: f64,
        reference: ReferenceFrequency,
        transitions: Vec<(usize, usize)>,
    ) -> Self {
        Self { label: label.to_string(), kind: ChannelKind::Intra, rate, occupation, reference, transitions }
    }
}

/// Coherent input `⟨b_in(t)⟩ = f e^{−iω_d t}` entering through the first
/// accessible cavity channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSpec {
    pub amplitude: C64,
    pub omega_d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntraSystem {
    None,
    /// `K a†a†aa`.
    Kerr { k: f64 },
    /// Two-level system, basis `{|g⟩, |e⟩}`, Jaynes–Cummings coupling.
    Tls { omega_q: f64, g: f64 },
    /// Three-level system, basis `{|1⟩, |2⟩, |3⟩}`, cavity on 1↔2.
    Maser { omega_2: f64, omega_3: f64, g: f64 },
}

impl IntraSystem {
    pub fn dim(&self) -> usize {
        match self {
            IntraSystem::None | IntraSystem::Kerr { .. } => 1,
            IntraSystem::Tls { .. } => 2,
            IntraSystem::Maser { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntraSystem::None => "none",
            IntraSystem::Kerr { .. } => "kerr",
            IntraSystem::Tls { .. } => "tls",
            IntraSystem::Maser { .. } => "maser",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    /// Bare cavity frequency Ω.
    pub omega_cavity: f64,
    /// Number of Fock levels kept.
    pub n_max: usize,
    pub drive: DriveSpec,
    pub intra: IntraSystem,
    pub channels: Vec<BathChannel>,
}

/// Bose–Einstein occupation `1/(e^{ω/T} − 1)`; zero at `T = 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (omega / temperature).exp_m1()
}

/// Inverse of [`bose_occupation`]: `T = ω / ln(1 + 1/n)`.
///
/// `n = 0` maps to `T = 0`, which callers treat as a zero-temperature bath.
pub fn occupation_to_temperature(n: f64, omega: f64) -> Result<f64> {
    if !(n.is_finite() && omega.is_finite()) || n < 0.0 || omega <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "temperature needs n ≥ 0 and ω > 0, got n = {n}, ω = {omega}"
        )));
    }
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(omega / (1.0 / n).ln_1p())
}

impl ModelSpec {
    pub fn intra_dim(&self) -> usize {
        self.intra.dim()
    }

    /// Dimension of the cavity ⊗ intra-system Hilbert space.
    pub fn dim(&self) -> usize {
        self.n_max * self.intra_dim()
    }

    /// Δ = Ω − ω_d.
    pub fn detuning(&self) -> f64 {
        self.omega_cavity - self.drive.omega_d
    }

    pub fn omega_d(&self) -> f64 {
        self.drive.omega_d
    }

    /// Index of the channel the drive enters through.
    pub fn driven_channel(&self) -> Option<usize> {
        self.channels.iter().position(|c| c.kind == ChannelKind::CavityAccessible)
    }

    pub fn channel(&self, label: &str) -> Option<&BathChannel> {
        self.channels.iter().find(|c| c.label == label)
    }

    pub fn reference_frequency(&self, channel: &BathChannel) -> f64 {
        channel.reference.resolve(self.drive.omega_d)
    }

    pub fn temperature(&self, channel: &BathChannel) -> Result<f64> {
        occupation_to_temperature(channel.occupation, self.reference_frequency(channel))
    }

    /// Coherent input amplitude seen by a given channel.
    pub fn drive_amplitude(&self, channel_index: usize) -> C64 {
        if Some(channel_index) == self.driven_channel() {
            self.drive.amplitude
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} is not finite")))
            }
        };
        finite("cavity frequency", self.omega_cavity)?;
        finite("drive frequency", self.drive.omega_d)?;
        finite("drive amplitude", self.drive.amplitude.re)?;
        finite("drive amplitude", self.drive.amplitude.im)?;
        if self.omega_cavity <= 0.0 || self.drive.omega_d <= 0.0 {
            return Err(Error::InvalidModel("cavity and drive frequencies must be positive".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidDimension(format!("n_max must be ≥ 2, got {}", self.n_max)));
        }
        match self.intra {
            IntraSystem::None => {}
            IntraSystem::Kerr { k } => finite("Kerr coefficient", k)?,
            IntraSystem::Tls { omega_q, g } => {
                finite("qubit frequency", omega_q)?;
                finite("coupling", g)?;
            }
            IntraSystem::Maser { omega_2, omega_3, g } => {
                finite("ω₂", omega_2)?;
                finite("ω₃", omega_3)?;
                finite("coupling", g)?;
                if omega_3 <= omega_2 {
                    return Err(Error::InvalidModel(format!("maser needs ω₃ > ω₂, got {omega_3} ≤ {omega_2}")));
                }
            }
        }
        if self.driven_channel().is_none() {
            return Err(Error::InvalidModel("at least one cavity-accessible channel is required".into()));
        }
        for (i, c) in self.channels.iter().enumerate() {
            if self.channels[..i].iter().any(|o| o.label == c.label) {
                return Err(Error::InvalidModel(format!("duplicate channel label `{}`", c.label)));
            }
            if !(c.rate.is_finite() && c.rate > 0.0) {
                return Err(Error::InvalidModel(format!("channel `{}`: rate must be positive", c.label)));
            }
            if !(c.occupation.is_finite() && c.occupation >= 0.0) {
                return Err(Error::InvalidModel(format!("channel `{}`: occupation must be ≥ 0", c.label)));
            }
            let w = self.reference_frequency(c);
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "channel `{}`: reference frequency {w} must be positive",
                    c.label
                )));
            }
            match c.kind {
                ChannelKind::Intra => {
                    if c.transitions.is_empty() {
                        return Err(Error::InvalidModel(format!("intra channel `{}` has no transitions", c.label)));
                    }
                    for &(lo, hi) in &c.transitions {
                        if lo >= self.intra_dim() || hi >= self.intra_dim() || lo == hi {
                            return Err(Error::InvalidModel(format!(
                                "intra channel `{}`: transition ({lo}, {hi}) invalid for a {}-level system",
                                c.label,
                                self.intra_dim()
                            )));
                        }
                    }
                }
                _ => {
                    if !c.transitions.is_empty() {
                        return Err(Error::InvalidModel(format!(
                            "cavity channel `{}` cannot list intra transitions",
                            c.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Conditions that are allowed but suspicious: a cavity bath whose
    /// thermal tail reaches the truncation, or a large detuning.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in self.channels.iter().filter(|c| c.kind.is_cavity() && c.occupation > 0.0) {
            let tail = (c.occupation / (c.occupation + 1.0)).powi(self.n_max as i32);
            if tail > 1e-6 {
                out.push(format!("channel `{}`: thermal tail {tail:.2e} at n_max = {} may be truncated", c.label, self.n_max));
            }
        }
        if self.detuning().abs() > 0.1 * self.drive.omega_d {
            out.push(format!("detuning {} is not small compared to ω_d = {}", self.detuning(), self.drive.omega_d));
        }
        out
    }

    /// `I_cav ⊗ op` for an operator on the intra-cavity system.
    pub fn embed_intra(&self, op: &Operator) -> Operator {
        kron(&Operator::identity(self.n_max), op)
    }

    /// `op ⊗ I_intra` for an operator on the cavity.
    pub fn embed_intra_cavity(&self, op: &Operator) -> Operator {
        kron(op, &Operator::identity(self.intra_dim()))
    }

    /// Cavity annihilation operator `a ⊗ I` on the full space.
    pub fn annihilation(&self) -> Result<Operator> {
        Ok(kron(&fock_annihilation(self.n_max)?, &Operator::identity(self.intra_dim())))
    }

    /// `a†a ⊗ I`.
    pub fn number(&self) -> Result<Operator> {
        let levels: Vec<f64> = (0..self.n_max).map(|n| n as f64).collect();
        Ok(kron(&Operator::diag(&levels), &Operator::identity(self.intra_dim())))
    }

    /// Lowering operators of a channel on the full space.
    pub fn channel_lowering_ops(&self, channel: &BathChannel) -> Result<Vec<Operator>> {
        match channel.kind {
            ChannelKind::Intra => channel
                .transitions
                .iter()
                .map(|&(lo, hi)| {
                    let t = Operator::from_entries(self.intra_dim(), &[(lo, hi, C64::new(1.0, 0.0))])?;
                    Ok(self.embed_intra(&t))
                })
                .collect(),
            _ => Ok(vec![self.annihilation()?]),
        }
    }

    /// Changes one parameter addressed by a dotted path.
    ///
    /// Paths: `cavity.omega`, `cavity.n_max`, `drive.f`, `drive.f_re`,
    /// `drive.f_im`, `drive.omega_d`, `drive.delta`, `intra.K`, `intra.g`,
    /// `intra.omega_q`, `intra.omega_2`, `intra.omega_3`, and
    /// `channels.<label>.{rate,occupation,n,T}` where `<label>` may be `*`.
    pub fn set_parameter(&mut self, path: &str, value: f64) -> Result<()> {
        let unknown = || Error::UnknownParameter(path.to_string());
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            ["cavity", "omega"] => self.omega_cavity = value,
            ["cavity", "n_max"] => {
                if value < 2.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidDimension(format!("n_max must be an integer ≥ 2, got {value}")));
                }
                self.n_max = value as usize;
            }
            ["drive", "f"] => self.drive.amplitude = C64::new(value, 0.0),
            ["drive", "f_re"] => self.drive.amplitude.re = value,
            ["drive", "f_im"] => self.drive.amplitude.im = value,
            ["drive", "omega_d"] => self.drive.omega_d = value,
            ["drive", "delta"] => self.drive.omega_d = self.omega_cavity - value,
            ["intra", field] => match (&mut self.intra, *field) {
                (IntraSystem::Kerr { k }, "K") => *k = value,
                (IntraSystem::Tls { g, .. }, "g") | (IntraSystem::Maser { g, .. }, "g") => *g = value,
                (IntraSystem::Tls { omega_q, .. }, "omega_q") => *omega_q = value,
                (IntraSystem::Maser { omega_2, .. }, "omega_2") => *omega_2 = value,
                (IntraSystem::Maser { omega_3, .. }, "omega_3") => *omega_3 = value,
                _ => return Err(unknown()),
            },
            ["channels", label, field] => {
                let omega_d = self.drive.omega_d;
                let mut hit = false;
                for c in self.channels.iter_mut().filter(|c| *label == "*" || c.label == *label) {
                    hit = true;
                    match *field {
                        "rate" => c.rate = value,
                        "occupation" | "n" => c.occupation = value,
                        "T" => c.occupation = bose_occupation(c.reference.resolve(omega_d), value),
                        _ => return Err(unknown()),
                    }
                }
                if !hit {
                    return Err(unknown());
                }
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Stable hash of every parameter (hex, 16 characters).
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        hex::encode(&digest[..8])
    }
}

/// `H_rot = Δ a†a + H'_rot + i√κ(f* a − f a†)` in the frame rotating at ω_d.
///
/// For the maser, `|2⟩` rotates with the drive while `|3⟩` does not, so its
/// energy ω₃ stays in the Hamiltonian; the jump operators only pick up
/// global phases, which leave every dissipator unchanged.
pub fn build_hamiltonian_rotating(model: &ModelSpec) -> Result<Operator> {
    model.validate()?;
    let a = model.annihilation()?;
    let adag = a.adjoint();
    let n = model.number()?;
    let mut h = n.scaled_real(model.detuning());
    h = &h + &intra_hamiltonian_rotating(model, &a, &adag)?;
    let driven = model.driven_channel().expect("validated");
    let sqrt_kappa = model.channels[driven].rate.sqrt();
    let f = model.drive.amplitude;
    let i = C64::new(0.0, 1.0);
    let drive = &a.scaled(i * sqrt_kappa * f.conj()) - &adag.scaled(i * sqrt_kappa * f);
    h = &h + &drive;
    h.hermitian_part().into_hermitian()
}

fn intra_hamiltonian_rotating(model: &ModelSpec, a: &Operator, adag: &Operator) -> Result<Operator> {
    let d = model.dim();
    let wd = model.drive.omega_d;
    let unit = |lo: usize, hi: usize| -> Result<Operator> {
        let t = Operator::from_entries(model.intra_dim(), &[(lo, hi, C64::new(1.0, 0.0))])?;
        Ok(model.embed_intra(&t))
    };
    Ok(match model.intra {
        IntraSystem::None => Operator::zeros(d),
        IntraSystem::Kerr { k } => {
            let aa = a * a;
            (&(adag * adag) * &aa).scaled_real(k)
        }
        IntraSystem::Tls { omega_q, g } => {
            let sigma_minus = unit(0, 1)?;
            let sigma_plus = sigma_minus.adjoint();
            let sz = model.embed_intra(&Operator::diag(&[-1.0, 1.0]));
            let coupling = &(adag * &sigma_minus) + &(a * &sigma_plus);
            &sz.scaled_real(0.5 * (omega_q - wd)) + &coupling.scaled_real(g)
        }
        IntraSystem::Maser { omega_2, omega_3, g } => {
            let p2 = model.embed_intra(&Operator::diag(&[0.0, 1.0, 0.0]));
            let p3 = model.embed_intra(&Operator::diag(&[0.0, 0.0, 1.0]));
            let raise_12 = unit(1, 0)?; // |2⟩⟨1|
            let coupling = &(a * &raise_12) + &(adag * &raise_12.adjoint());
            let mut h = p2.scaled_real(omega_2 - wd);
            h = &h + &p3.scaled_real(omega_3);
            &h + &coupling.scaled_real(g)
        }
    })
}

/// Intra-system part `H'_TD` of the thermodynamic Hamiltonian, on the full
/// space; commutes with `a`.
pub fn intra_thermo_hamiltonian(model: &ModelSpec) -> Result<Operator> {
    let wd = model.drive.omega_d;
    let h = match model.intra {
        IntraSystem::None | IntraSystem::Kerr { .. } => Operator::zeros(model.dim()),
        IntraSystem::Tls { .. } => model.embed_intra(&Operator::diag(&[0.0, wd])),
        IntraSystem::Maser { omega_3, .. } => model.embed_intra(&Operator::diag(&[0.0, wd, omega_3])),
    };
    Ok(h)
}

/// `H_TD = ω_d a†a + H'_TD`: assigns each excitation exchanged with the
/// drive the energy ω_d.
pub fn build_thermo_hamiltonian(model: &ModelSpec) -> Result<Operator> {
    model.validate()?;
    let n = model.number()?;
    let h = &n.scaled_real(model.drive.omega_d) + &intra_thermo_hamiltonian(model)?;
    h.into_hermitian()
}

/// Dissipator of a single channel.
pub fn channel_dissipator(model: &ModelSpec, channel: &BathChannel) -> Result<SuperOperator> {
    channel_dissipator_with_occupation(model, channel, channel.occupation)
}

pub(crate) fn channel_dissipator_with_occupation(
    model: &ModelSpec,
    channel: &BathChannel,
    occupation: f64,
) -> Result<SuperOperator> {
    let d = model.dim();
    let mut parts = Vec::new();
    for l in model.channel_lowering_ops(channel)? {
        parts.push(dissipator_super(&l).scaled(channel.rate * (occupation + 1.0)));
        if occupation > 0.0 {
            parts.push(dissipator_super(&l.adjoint()).scaled(channel.rate * occupation));
        }
    }
    Ok(SuperOperator::sum(d, parts.iter()))
}

/// Every channel paired with its dissipator; the sum is the full dissipator.
pub fn build_channels(model: &ModelSpec) -> Result<Vec<(BathChannel, SuperOperator)>> {
    model.validate()?;
    model
        .channels
        .iter()
        .map(|c| Ok((c.clone(), channel_dissipator(model, c)?)))
        .collect()
}

/// Named parameter sets, in units of κ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Empty,
    Kerr,
    Tls,
    Maser,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Empty, Preset::Kerr, Preset::Tls, Preset::Maser];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Empty => "empty",
            Preset::Kerr => "kerr",
            Preset::Tls => "tls",
            Preset::Maser => "maser",
        }
    }

    /// Default model. All presets use Ω = 10⁴ and ω_d = Ω.
    ///
    /// * `empty`: f = 0.1, n_c = 0.1, 20 Fock levels.
    /// * `kerr`: K = 0.05, f = 1, n_c = 0.5, 40 levels.
    /// * `tls`: γ = 0.05, g = 0.1, f = 0.01, ω_q = Ω, n_c = n_q = 0.1, 20 levels.
    /// * `maser`: g = 0.7, f = 0.1, ω₂ = Ω, ω₃ = 3Ω, γ_H = 0.5, γ_C = 100,
    ///   n_c = 4.54, n_C = 0.007, T_H = 10⁵, 120 levels. The drive is taken
    ///   resonant with the 1↔2 transition since no detuning is specified.
    pub fn model(self) -> ModelSpec {
        let omega = 1e4;
        let drive = |f: f64| DriveSpec { amplitude: C64::new(f, 0.0), omega_d: omega };
        let cavity = |n: f64| BathChannel::cavity("cavity", ChannelKind::CavityAccessible, 1.0, n);
        match self {
            Preset::Empty => ModelSpec {
                omega_cavity: omega,
                n_max: 20,
                drive: drive(0.1),
                intra: IntraSystem::None,
                channels: vec![cavity(0.1)],
            },
            Preset::Kerr => ModelSpec {
                omega_cavity: omega,
                n_max: 40,
                drive: drive(1.0),
                intra: IntraSystem::Kerr { k: 0.05 },
                channels: vec![cavity(0.5)],
            },
            Preset::Tls => ModelSpec {
                omega_cavity: omega,
                n_max: 20,
                drive: drive(0.01),
                intra: IntraSystem::Tls { omega_q: omega, g: 0.1 },
                channels: vec![
                    cavity(0.1),
                    BathChannel::intra("qubit", 0.05, 0.1, ReferenceFrequency::Drive, vec![(0, 1)]),
                ],
            },
            Preset::Maser => {
                let omega_3 = 3.0 * omega;
                ModelSpec {
                    omega_cavity: omega,
                    n_max: 120,
                    drive: drive(0.1),
                    intra: IntraSystem::Maser { omega_2: omega, omega_3, g: 0.7 },
                    channels: vec![
                        cavity(4.54),
                        BathChannel::intra(
                            "hot",
                            0.5,
                            bose_occupation(omega_3, 1e5),
                            ReferenceFrequency::Fixed(omega_3),
                            vec![(0, 2)],
                        ),
                        BathChannel::intra(
                            "cold",
                            100.0,
                            0.007,
                            ReferenceFrequency::FixedMinusDrive(omega_3),
                            vec![(1, 2)],
                        ),
                    ],
                }
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Preset model with parameter overrides applied in order.
pub fn preset(name: &str, overrides: &[(&str, f64)]) -> Result<ModelSpec> {
    let mut model = name.parse::<Preset>()?.model();
    for (path, value) in overrides {
        model.set_parameter(path, *value)?;
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let g = Operator::from_fn(d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        DensityMatrix::from_unnormalized(&(&g * &g.adjoint())).unwrap()
    }

    #[test]
    fn empty_cavity_drive_term() {
        let model = preset("empty", &[("cavity.n_max", 4.0)]).unwrap();
        let h = build_hamiltonian_rotating(&model).unwrap();
        let a = model.annihilation().unwrap();
        let f = model.drive.amplitude.re;
        let i = C64::new(0.0, 1.0);
        let expect = (&a - &a.adjoint()).scaled(i * f);
        assert!(h.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn kerr_term() {
        let model = preset("kerr", &[("cavity.n_max", 5.0), ("drive.f", 0.0)]).unwrap();
        let h = build_hamiltonian_rotating(&model).unwrap();
        // K n(n−1) on the diagonal
        for n in 0..5 {
            assert!((h.get(n, n).re - 0.05 * (n * n.saturating_sub(1)) as f64).abs() < 1e-14);
        }
        assert_eq!(preset("kerr", &[]).unwrap().intra, IntraSystem::Kerr { k: 0.05 });
    }

    #[test]
    fn resonant_maser_has_no_level_two_energy() {
        let model = preset("maser", &[("cavity.n_max", 3.0), ("drive.f", 0.0)]).unwrap();
        let h = build_hamiltonian_rotating(&model).unwrap();
        // vacuum ⊗ |2⟩ is index 1; vacuum ⊗ |3⟩ is index 2
        assert_eq!(h.get(1, 1).re, 0.0);
        assert_eq!(h.get(2, 2).re, 3e4);
    }

    #[test]
    fn thermo_hamiltonians() {
        let empty = preset("empty", &[("cavity.n_max", 3.0)]).unwrap();
        let h = build_thermo_hamiltonian(&empty).unwrap();
        assert!(h.max_abs_diff(&Operator::diag(&[0.0, 1e4, 2e4])) < 1e-12);

        let tls = preset("tls", &[("cavity.n_max", 2.0)]).unwrap();
        let h = build_thermo_hamiltonian(&tls).unwrap();
        assert!(h.max_abs_diff(&Operator::diag(&[0.0, 1e4, 1e4, 2e4])) < 1e-12);

        let maser = preset("maser", &[("cavity.n_max", 2.0)]).unwrap();
        let h = build_thermo_hamiltonian(&maser).unwrap();
        assert!(h.max_abs_diff(&Operator::diag(&[0.0, 1e4, 3e4, 1e4, 2e4, 4e4])) < 1e-12);
    }

    #[test]
    fn intra_thermo_hamiltonian_commutes_with_cavity() {
        for p in Preset::ALL {
            let model = preset(p.name(), &[("cavity.n_max", 6.0)]).unwrap();
            let a = model.annihilation().unwrap();
            let h = intra_thermo_hamiltonian(&model).unwrap();
            assert_eq!(a.commutator(&h).max_abs(), 0.0, "{p}");
        }
    }

    #[test]
    fn zero_temperature_cavity_channel() {
        let model = preset("empty", &[("cavity.n_max", 5.0), ("channels.cavity.n", 0.0)]).unwrap();
        let chans = build_channels(&model).unwrap();
        let a = model.annihilation().unwrap();
        assert!(chans[0].1.max_abs_diff(&dissipator_super(&a)) < 1e-15);
    }

    #[test]
    fn maser_hot_channel() {
        let model = preset("maser", &[("cavity.n_max", 3.0)]).unwrap();
        let chans = build_channels(&model).unwrap();
        let (hot, sup) = &chans[1];
        assert_eq!(hot.label, "hot");
        assert_eq!(hot.rate, 0.5);
        let l13 = model.embed_intra(&Operator::from_entries(3, &[(0, 2, C64::new(1.0, 0.0))]).unwrap());
        let expect = dissipator_super(&l13)
            .scaled(0.5 * (hot.occupation + 1.0))
            .add(&dissipator_super(&l13.adjoint()).scaled(0.5 * hot.occupation));
        assert!(sup.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn intra_channels_conserve_photons() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [Preset::Tls, Preset::Maser] {
            let model = preset(p.name(), &[("cavity.n_max", 4.0)]).unwrap();
            let n = model.number().unwrap();
            let a = model.annihilation().unwrap();
            for (c, sup) in build_channels(&model).unwrap() {
                if c.kind != ChannelKind::Intra {
                    continue;
                }
                for _ in 0..10 {
                    let rho = random_state(model.dim(), &mut rng);
                    let out = sup.apply(rho.operator()).unwrap();
                    assert!(n.trace_product(&out).norm() < 1e-10);
                    assert!(a.trace_product(&out).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn temperature_map() {
        let e = std::f64::consts::E;
        assert!((occupation_to_temperature(1.0 / (e - 1.0), 1.0).unwrap() - 1.0).abs() < 1e-14);
        let t = occupation_to_temperature(4.54, 1e4).unwrap();
        // 10⁴ / ln(1 + 1/4.54) = 50234.2199…
        assert!((t - 1e4 / (1.0f64 + 1.0 / 4.54).ln()).abs() < 1e-8);
        assert!((t - 50234.2199).abs() < 1e-3);
        assert!((t / 5.02e4 - 1.0).abs() < 1e-3);
        assert_eq!(occupation_to_temperature(0.0, 1.0).unwrap(), 0.0);
        assert!(occupation_to_temperature(-1.0, 1.0).is_err());
        let mut last = 0.0;
        for n in [0.1, 1.0, 10.0, 1e3, 1e6] {
            let t = occupation_to_temperature(n, 1.0).unwrap();
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn preset_parameters() {
        let maser = preset("maser", &[]).unwrap();
        assert_eq!(maser.channel("hot").unwrap().rate, 0.5);
        assert_eq!(maser.channel("cold").unwrap().rate, 100.0);
        assert_eq!(preset("empty", &[]).unwrap().intra, IntraSystem::None);
        assert!(matches!(preset("laser", &[]), Err(Error::UnknownPreset(_))));
        let m = preset("kerr", &[("drive.delta", 2.0)]).unwrap();
        assert_eq!(m.detuning(), 2.0);
        assert!(matches!(preset("kerr", &[("intra.g", 1.0)]), Err(Error::UnknownParameter(_))));
    }

    #[test]
    fn maser_requires_ordered_levels() {
        assert!(preset("maser", &[("intra.omega_3", 5e3)]).is_err());
    }

    #[test]
    fn hot_temperature_path() {
        let m = preset("maser", &[("channels.hot.T", 2e5)]).unwrap();
        let t = m.temperature(m.channel("hot").unwrap()).unwrap();
        assert!((t / 2e5 - 1.0).abs() < 1e-12);
        let cold = m.channel("cold").unwrap();
        assert_eq!(m.reference_frequency(cold), 2e4);
    }

    #[test]
    fn rotating_hamiltonian_hermitian_for_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in 0..1000 {
            let p = Preset::ALL[i % 4];
            let mut m = p.model();
            m.n_max = 4;
            m.drive.amplitude = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            m.set_parameter("drive.delta", rng.random_range(-5.0..5.0)).unwrap();
            match &mut m.intra {
                IntraSystem::Kerr { k } => *k = rng.random_range(-1.0..1.0),
                IntraSystem::Tls { g, .. } | IntraSystem::Maser { g, .. } => *g = rng.random_range(-1.0..1.0),
                IntraSystem::None => {}
            }
            let h = build_hamiltonian_rotating(&m).unwrap();
            assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs());
        }
    }

    proptest! {
        #[test]
        fn temperature_inverts_occupation(t in 1e-2f64..1e6, w in 1e-1f64..1e5) {
            let n = bose_occupation(w, t);
            prop_assume!(n > 1e-300);
            let back = occupation_to_temperature(n, w).unwrap();
            prop_assert!((back / t - 1.0).abs() < 1e-12);
        }
    }
}
