//! TOML run configuration. Every section is optional when a preset is named;
//! values given in a file override the preset, and command-line flags
//! override the file.

use std::collections::BTreeMap;
use std::path::Path;

use drivetherm::models::{BathChannel, ChannelKind, IntraSystem, ModelSpec, Preset, ReferenceFrequency};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intra: Option<IntraSection>,
    /// Replaces the preset's channel list when non-empty.
    #[serde(rename = "channel", default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<ChannelSection>,
    /// Extra `path = value` overrides, applied after the sections.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub set: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
}

/// Every frequency, rate, drive amplitude and temperature in the file is
/// divided by `kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub kappa: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    /// `Ω − ω_d`; ignored when `omega_d` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntraSection {
    /// `none`, `kerr`, `tls` or `maser`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_3: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub label: String,
    /// `cavity-accessible`, `cavity-inaccessible` or `intra`.
    pub kind: String,
    pub rate: f64,
    /// Bose occupation; give either this or `T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// `drive` (default), `fixed:<ω>` or `fixed-minus-drive:<ω>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// `[lower, upper]` level pairs for intra channels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    /// Column subset; all columns when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Logarithmic spacing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub log: bool,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.count == 0 {
            return Err(CliError::usage("grid count must be at least 1"));
        }
        if self.log && (self.start <= 0.0 || self.stop <= 0.0) {
            return Err(CliError::usage("logarithmic grid needs positive bounds"));
        }
        let at = |k: usize| {
            let s = if self.count == 1 { 0.0 } else { k as f64 / (self.count - 1) as f64 };
            if self.log {
                10f64.powf(self.start.log10() + s * (self.stop.log10() - self.start.log10()))
            } else {
                self.start + s * (self.stop - self.start)
            }
        };
        Ok((0..self.count).map(at).collect())
    }
}

impl std::str::FromStr for Grid {
    type Err = CliError;

    /// `start:stop:count`, optionally followed by `:log`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::usage(format!("grid `{s}` is not start:stop:count[:log]"));
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let log = match parts.get(3) {
            None => false,
            Some(&"log") => true,
            Some(_) => return Err(bad()),
        };
        Ok(Grid {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            stop: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
            log,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// `vacuum`, `thermal`, `coherent:<re>,<im>` or `file:<path>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn unit(&self) -> f64 {
        self.units.as_ref().map_or(1.0, |u| u.kappa)
    }

    /// Full description of `model`, with no preset reference.
    pub fn from_model(model: &ModelSpec) -> Self {
        let intra = match model.intra {
            IntraSystem::None => IntraSection { kind: Some("none".into()), ..IntraSection::default() },
            IntraSystem::Kerr { k } => IntraSection { kind: Some("kerr".into()), k: Some(k), ..IntraSection::default() },
            IntraSystem::Tls { omega_q, g } => IntraSection {
                kind: Some("tls".into()),
                g: Some(g),
                omega_q: Some(omega_q),
                ..IntraSection::default()
            },
            IntraSystem::Maser { omega_2, omega_3, g } => IntraSection {
                kind: Some("maser".into()),
                g: Some(g),
                omega_2: Some(omega_2),
                omega_3: Some(omega_3),
                ..IntraSection::default()
            },
        };
        Config {
            cavity: Some(CavitySection { omega: Some(model.omega_cavity), n_max: Some(model.n_max) }),
            drive: Some(DriveSection {
                f_re: Some(model.drive.amplitude.re),
                f_im: Some(model.drive.amplitude.im),
                omega_d: Some(model.drive.omega_d),
                ..DriveSection::default()
            }),
            intra: Some(intra),
            channels: model
                .channels
                .iter()
                .map(|c| ChannelSection {
                    label: c.label.clone(),
                    kind: c.kind.as_str().to_string(),
                    rate: c.rate,
                    n: Some(c.occupation),
                    t: None,
                    reference: Some(match c.reference {
                        ReferenceFrequency::Drive => "drive".to_string(),
                        ReferenceFrequency::Fixed(w) => format!("fixed:{w:e}"),
                        ReferenceFrequency::FixedMinusDrive(w) => format!("fixed-minus-drive:{w:e}"),
                    }),
                    transitions: c.transitions.iter().map(|&(l, u)| [l, u]).collect(),
                })
                .collect(),
            ..Config::default()
        }
    }

    /// Builds the model: preset (or none), then sections, channels and `set`.
    /// `preset` overrides the file's preset.
    pub fn model(&self, preset: Option<&str>) -> Result<ModelSpec, CliError> {
        let unit = self.unit();
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(CliError::usage("units.kappa must be positive"));
        }
        let scale = |x: f64| x / unit;
        let base = preset.or(self.preset.as_deref());
        let mut m = match base {
            Some(name) => name.parse::<Preset>().map_err(CliError::from)?.model(),
            None => {
                let missing = |what: &str| CliError::usage(format!("config: `{what}` is required without a preset"));
                let cavity = self.cavity.as_ref().ok_or_else(|| missing("cavity"))?;
                let omega = cavity.omega.ok_or_else(|| missing("cavity.omega"))?;
                let n_max = cavity.n_max.ok_or_else(|| missing("cavity.n_max"))?;
                let drive = self.drive.as_ref().ok_or_else(|| missing("drive"))?;
                if drive.omega_d.is_none() && drive.delta.is_none() {
                    return Err(missing("drive.omega_d or drive.delta"));
                }
                if self.channels.is_empty() {
                    return Err(missing("[[channel]]"));
                }
                ModelSpec {
                    omega_cavity: scale(omega),
                    n_max,
                    drive: drivetherm::DriveSpec { amplitude: C64::new(0.0, 0.0), omega_d: scale(omega) },
                    intra: IntraSystem::None,
                    channels: Vec::new(),
                }
            }
        };
        let set = |m: &mut ModelSpec, path: &str, v: f64| m.set_parameter(path, v).map_err(CliError::from);

        if let Some(c) = &self.cavity {
            if let Some(w) = c.omega {
                set(&mut m, "cavity.omega", scale(w))?;
            }
            if let Some(n) = c.n_max {
                set(&mut m, "cavity.n_max", n as f64)?;
            }
        }
        if let Some(d) = &self.drive {
            if let Some(f) = d.f {
                set(&mut m, "drive.f", scale(f))?;
            }
            if let Some(f) = d.f_re {
                set(&mut m, "drive.f_re", scale(f))?;
            }
            if let Some(f) = d.f_im {
                set(&mut m, "drive.f_im", scale(f))?;
            }
            match (d.omega_d, d.delta) {
                (Some(w), _) => set(&mut m, "drive.omega_d", scale(w))?,
                (None, Some(delta)) => set(&mut m, "drive.delta", scale(delta))?,
                (None, None) => {}
            }
        }
        if let Some(i) = &self.intra {
            apply_intra(&mut m, i, unit)?;
        }
        if !self.channels.is_empty() {
            m.channels = self.channels.iter().map(|c| channel(c, m.drive.omega_d, unit)).collect::<Result<_, _>>()?;
        }
        for (path, &v) in &self.set {
            set(&mut m, path, if dimensional(path) { scale(v) } else { v })?;
        }
        Ok(m)
    }
}

/// Whether a parameter path carries frequency units.
pub fn dimensional(path: &str) -> bool {
    !(path.ends_with(".n_max") || path.ends_with(".n") || path.ends_with(".occupation"))
}

fn apply_intra(m: &mut ModelSpec, i: &IntraSection, unit: f64) -> Result<(), CliError> {
    let scale = |x: f64| x / unit;
    let need = |v: Option<f64>, what: &str| {
        v.map(scale).ok_or_else(|| CliError::usage(format!("config: `intra.{what}` is required for this kind")))
    };
    let current = m.intra.name();
    if let Some(kind) = i.kind.as_deref() {
        if kind != current {
            m.intra = match kind {
                "none" => IntraSystem::None,
                "kerr" => IntraSystem::Kerr { k: need(i.k, "K")? },
                "tls" => IntraSystem::Tls { omega_q: i.omega_q.map_or(m.omega_cavity, scale), g: need(i.g, "g")? },
                "maser" => IntraSystem::Maser {
                    omega_2: need(i.omega_2, "omega_2")?,
                    omega_3: need(i.omega_3, "omega_3")?,
                    g: need(i.g, "g")?,
                },
                other => return Err(CliError::usage(format!("config: unknown intra kind `{other}`"))),
            };
            return Ok(());
        }
    }
    for (path, v) in [("K", i.k), ("g", i.g), ("omega_q", i.omega_q), ("omega_2", i.omega_2), ("omega_3", i.omega_3)] {
        if let Some(v) = v {
            m.set_parameter(&format!("intra.{path}"), scale(v)).map_err(CliError::from)?;
        }
    }
    Ok(())
}

fn channel(c: &ChannelSection, omega_d: f64, unit: f64) -> Result<BathChannel, CliError> {
    let kind: ChannelKind = c.kind.parse().map_err(CliError::from)?;
    let bad = |msg: String| CliError::usage(format!("config: channel `{}`: {msg}", c.label));
    let reference = match c.reference.as_deref().unwrap_or("drive") {
        "drive" => ReferenceFrequency::Drive,
        r => {
            let (tag, value) = r.split_once(':').ok_or_else(|| bad(format!("bad reference `{r}`")))?;
            let w: f64 = value.trim().parse().map_err(|_| bad(format!("bad reference `{r}`")))?;
            match tag {
                "fixed" => ReferenceFrequency::Fixed(w / unit),
                "fixed-minus-drive" => ReferenceFrequency::FixedMinusDrive(w / unit),
                _ => return Err(bad(format!("bad reference `{r}`"))),
            }
        }
    };
    let occupation = match (c.n, c.t) {
        (Some(n), None) => n,
        (None, Some(t)) => drivetherm::models::bose_occupation(reference.resolve(omega_d), t / unit),
        _ => return Err(bad("give exactly one of `n` and `T`".into())),
    };
    Ok(BathChannel {
        label: c.label.clone(),
        kind,
        rate: c.rate / unit,
        occupation,
        reference,
        transitions: c.transitions.iter().map(|&[l, u]| (l, u)).collect(),
    })
}
