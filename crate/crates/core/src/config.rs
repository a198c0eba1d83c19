//! Flat `key = value` run configuration.
//!
//! ```text
//! # free particle, unit noise
//! mass = 1
//! gamma = 0.5
//! w = 1                 # alternative to temperature
//! potential.kind = free
//! initial.x = 0
//! integrator.dt = 0.001
//! integrator.t_end = 5
//! ensemble.n_traj = 1000
//! ```
//!
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults. Vector values are comma separated.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::greenfn::{HomogeneousCoeffs, NoiseScale};
use crate::langevin::{FailurePolicy, IntegratorSpec, Scheme};
use crate::noise::{NoiseModel, SpectrumMode};
use crate::params::{PhysicalParams, DEFAULT_ALPHA};
use crate::potential::Potential;
use crate::state::PhaseState;
use crate::wigner::{gaussian_packet, WignerGaussian};

const KEYS: &[&str] = &[
    "mass",
    "gamma",
    "temperature",
    "w",
    "hbar",
    "kb",
    "alpha",
    "c",
    "potential.kind",
    "potential.omega",
    "potential.a",
    "potential.b",
    "potential.grid",
    "potential.values",
    "initial.x",
    "initial.p",
    "integrator.scheme",
    "integrator.dt",
    "integrator.t_end",
    "integrator.n_steps",
    "integrator.runaway_threshold",
    "noise.kind",
    "noise.order",
    "noise.cutoff",
    "ensemble.n_traj",
    "ensemble.seed",
    "ensemble.record_every",
    "ensemble.retain",
    "ensemble.failure",
    "packet.xbar",
    "packet.k",
    "packet.sigma",
    "semiclassical.c1",
    "semiclassical.c2",
    "semiclassical.scale",
];

/// Potential as named in a config, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Free,
    Harmonic { omega: f64 },
    Quartic { a: f64, b: f64 },
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl PotentialKind {
    pub fn build(&self, params: &PhysicalParams) -> Result<Potential> {
        Ok(match self {
            PotentialKind::Free => Potential::Free,
            PotentialKind::Harmonic { omega } => Potential::harmonic(params.mass(), *omega),
            PotentialKind::Quartic { a, b } => Potential::quartic(*a, *b),
            PotentialKind::Tabulated { grid, values } => Potential::tabulated(grid.clone(), values.clone())?,
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::Harmonic { .. } => "harmonic",
            PotentialKind::Quartic { .. } => "quartic",
            PotentialKind::Tabulated { .. } => "tabulated",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub params: PhysicalParams,
    pub potential_kind: PotentialKind,
    pub potential: Potential,
    pub initial: PhaseState,
    pub integrator: IntegratorSpec,
    pub noise: NoiseModel,
    pub n_traj: usize,
    pub seed: u64,
    pub record_every: usize,
    pub retain: usize,
    pub failure: FailurePolicy,
    pub packet: Option<WignerGaussian>,
    pub coeffs: HomogeneousCoeffs,
    pub scale: NoiseScale,
}

/// Raw `key → (line, value)` map of a config file.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key = value, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            if !KEYS.contains(&key) {
                return Err(Error::validation(key, format!("unknown key (line {line_no})")));
            }
            if entries.insert(key.to_string(), (line_no, value.to_string())).is_some() {
                return Err(Error::validation(key, format!("duplicate key (line {line_no})")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Overrides or adds a value, as a command-line flag would.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation(key, format!("expected a non-negative integer, got `{v}`"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| v.split(',').map(|s| parse_f64(key, s.trim())).collect())
            .transpose()
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::validation(key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::validation(key, format!("must be finite, got `{v}`")));
    }
    Ok(x)
}

/// Reads the physical parameters from a parsed config.
pub fn params_from(raw: &RawConfig) -> Result<PhysicalParams> {
    let mass = raw.f64_or("mass", 1.0)?;
    let gamma = raw.f64_or("gamma", 0.0)?;
    let hbar = raw.f64_or("hbar", 1.0)?;
    let kb = raw.f64_or("kb", 1.0)?;
    let mut params = match (raw.opt_f64("temperature")?, raw.opt_f64("w")?) {
        (Some(_), Some(_)) => return Err(Error::validation("w", "give either temperature or w, not both")),
        (None, Some(w)) => PhysicalParams::from_noise_strength(mass, gamma, w, hbar, kb)?,
        (t, None) => PhysicalParams::new(mass, gamma, t.unwrap_or(0.0), hbar, kb)?,
    };
    if let Some(a) = raw.opt_f64("alpha")? {
        params = params.with_alpha(a)?;
    }
    if let Some(c) = raw.opt_f64("c")? {
        params = params.with_lightspeed(c)?;
    }
    Ok(params)
}

/// Serializes parameters so that [`params_from`] restores them exactly.
pub fn params_to_string(p: &PhysicalParams) -> String {
    let mut s = format!(
        "mass = {}\ngamma = {}\ntemperature = {}\nhbar = {}\nkb = {}\n",
        p.mass(),
        p.gamma(),
        p.temperature(),
        p.hbar(),
        p.kb()
    );
    if p.alpha() != DEFAULT_ALPHA {
        s.push_str(&format!("alpha = {}\n", p.alpha()));
    }
    if let Some(c) = p.lightspeed() {
        s.push_str(&format!("c = {c}\n"));
    }
    s
}

fn potential_from(raw: &RawConfig) -> Result<PotentialKind> {
    let kind = raw.get("potential.kind").unwrap_or("free");
    let need = |key: &str| -> Result<f64> {
        raw.opt_f64(key)?
            .ok_or_else(|| Error::validation(key, format!("required for potential.kind = {kind}")))
    };
    Ok(match kind {
        "free" => PotentialKind::Free,
        "harmonic" => PotentialKind::Harmonic {
            omega: need("potential.omega")?,
        },
        "quartic" => PotentialKind::Quartic {
            a: need("potential.a")?,
            b: need("potential.b")?,
        },
        "tabulated" => {
            let grid = raw
                .list("potential.grid")?
                .ok_or_else(|| Error::validation("potential.grid", "required for a tabulated potential"))?;
            let values = raw
                .list("potential.values")?
                .ok_or_else(|| Error::validation("potential.values", "required for a tabulated potential"))?;
            PotentialKind::Tabulated { grid, values }
        }
        other => {
            return Err(Error::validation(
                "potential.kind",
                format!("unknown kind `{other}` (free, harmonic, quartic, tabulated)"),
            ))
        }
    })
}

fn noise_from(raw: &RawConfig) -> Result<NoiseModel> {
    let cutoff = raw.opt_f64("noise.cutoff")?;
    Ok(match raw.get("noise.kind").unwrap_or("white") {
        "white" => NoiseModel::White,
        "flat" => NoiseModel::Spectral {
            mode: SpectrumMode::Flat,
            cutoff,
        },
        "truncated" => NoiseModel::Spectral {
            mode: SpectrumMode::Truncated(raw.usize_or("noise.order", 1)? as u32),
            cutoff,
        },
        "coth" => NoiseModel::Spectral {
            mode: SpectrumMode::FullCoth,
            cutoff,
        },
        other => {
            return Err(Error::validation(
                "noise.kind",
                format!("unknown kind `{other}` (white, flat, truncated, coth)"),
            ))
        }
    })
}

fn integrator_from(raw: &RawConfig) -> Result<IntegratorSpec> {
    let scheme_name = raw.get("integrator.scheme").unwrap_or("split");
    let scheme = Scheme::parse(scheme_name).ok_or_else(|| {
        Error::validation(
            "integrator.scheme",
            format!("unknown scheme `{scheme_name}` (euler, split, third-order)"),
        )
    })?;
    let dt = raw.f64_or("integrator.dt", 1e-3)?;
    if dt <= 0.0 {
        return Err(Error::validation("integrator.dt", format!("must be > 0, got {dt}")));
    }
    let n_steps = match (raw.get("integrator.n_steps"), raw.opt_f64("integrator.t_end")?) {
        (Some(_), Some(_)) => {
            return Err(Error::validation(
                "integrator.t_end",
                "give either integrator.t_end or integrator.n_steps",
            ))
        }
        (Some(_), None) => raw.usize_or("integrator.n_steps", 0)?,
        (None, Some(t)) if t >= 0.0 => (t / dt).round() as usize,
        (None, Some(t)) => return Err(Error::validation("integrator.t_end", format!("must be >= 0, got {t}"))),
        (None, None) => (1.0 / dt).round() as usize,
    };
    let mut spec = IntegratorSpec::new(scheme, dt, n_steps)?;
    if let Some(th) = raw.opt_f64("integrator.runaway_threshold")? {
        spec = spec
            .with_runaway_threshold(th)
            .map_err(|_| Error::validation("integrator.runaway_threshold", "must be > 0"))?;
    }
    Ok(spec)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&load_raw(path)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let params = params_from(raw)?;
        let potential_kind = potential_from(raw)?;
        let potential = potential_kind.build(&params)?;
        let x = raw.list("initial.x")?;
        let p = raw.list("initial.p")?;
        let (x, p) = match (x, p) {
            (Some(x), Some(p)) => (x, p),
            (Some(x), None) => {
                let n = x.len();
                (x, vec![0.0; n])
            }
            (None, Some(p)) => (vec![0.0; p.len()], p),
            (None, None) => (vec![0.0], vec![0.0]),
        };
        let initial = PhaseState::new(x, p).map_err(|e| match e {
            Error::Validation { message, .. } => Error::validation("initial.p", message),
            e => e,
        })?;
        potential
            .check_dims(initial.dims())
            .map_err(|e| Error::validation("initial.x", e.to_string()))?;
        let failure = match raw.get("ensemble.failure").unwrap_or("fail-fast") {
            "fail-fast" => FailurePolicy::FailFast,
            "skip" | "skip-and-report" => FailurePolicy::SkipAndReport,
            other => {
                return Err(Error::validation(
                    "ensemble.failure",
                    format!("unknown policy `{other}` (fail-fast, skip)"),
                ))
            }
        };
        let n_traj = raw.usize_or("ensemble.n_traj", 1)?;
        if n_traj == 0 {
            return Err(Error::validation("ensemble.n_traj", "must be >= 1"));
        }
        let record_every = raw.usize_or("ensemble.record_every", 1)?;
        if record_every == 0 {
            return Err(Error::validation("ensemble.record_every", "must be >= 1"));
        }
        let seed = match raw.get("ensemble.seed") {
            None => 0,
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation("ensemble.seed", format!("expected an unsigned integer, got `{v}`")))?,
        };
        let packet = match raw.opt_f64("packet.sigma")? {
            None => None,
            Some(sigma) => Some(
                gaussian_packet(
                    raw.f64_or("packet.xbar", 0.0)?,
                    raw.f64_or("packet.k", 0.0)?,
                    sigma,
                    params.hbar(),
                )
                .map_err(|e| match e {
                    Error::Validation { field, message } => Error::validation(format!("packet.{field}"), message),
                    e => e,
                })?,
            ),
        };
        let scale = match raw.opt_f64("semiclassical.scale")? {
            Some(s) if s > 0.0 => NoiseScale::Explicit(s),
            Some(s) => return Err(Error::validation("semiclassical.scale", format!("must be > 0, got {s}"))),
            None => NoiseScale::FromTemperature,
        };
        Ok(Config {
            params,
            potential_kind,
            potential,
            initial,
            integrator: integrator_from(raw)?,
            noise: noise_from(raw)?,
            n_traj,
            seed,
            record_every,
            retain: raw.usize_or("ensemble.retain", 0)?,
            failure,
            packet,
            coeffs: HomogeneousCoeffs {
                c1: raw.f64_or("semiclassical.c1", 0.0)?,
                c2: raw.f64_or("semiclassical.c2", 0.0)?,
            },
            scale,
        })
    }
}

/// Reads and parses a config file; unreadable files are reported against
/// the `config` field.
pub fn load_raw(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation("config", format!("{}: {e}", path.display())))?;
    RawConfig::parse(&text)
}
