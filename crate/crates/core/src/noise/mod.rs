//! Bath noise.
//!
//! The bath enters the equation of motion through a Gaussian process
//! `η(t)` with `⟨η(t)η(t')⟩ = w δ(t - t')` in the white case. A white
//! process has no pointwise values, so a [`NoisePath`] stores what is
//! well defined on a grid: the per-step integrals
//! `Δη_k = ∫_{t_k}^{t_{k+1}} η(t) dt`, which are i.i.d. `N(0, w·dt)` for
//! white noise. Their running sum is the integrated noise, zero at the
//! start of the run.

mod periodogram;
mod spectrum;
mod synth;

pub use periodogram::{band_average, periodogram, BandEstimate};
pub use spectrum::{coth_series_coefficient, x_coth_x, SpectrumMode, SpectrumSpec};
pub use synth::{colored_path, ColoredSynth};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    White,
    Spectral(SpectrumMode),
}

impl NoiseKind {
    pub fn label(&self) -> String {
        match self {
            NoiseKind::White => "white".into(),
            NoiseKind::Spectral(m) => format!("spectral-{}", m.label()),
        }
    }
}

/// One discretized noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub t0: f64,
    pub dt: f64,
    pub dims: usize,
    /// Step-major: `increments[k * dims + i]` is component `i` of step `k`.
    pub increments: Vec<f64>,
    pub kind: NoiseKind,
    pub seed: u64,
    pub stream: u64,
}

impl NoisePath {
    /// An all-zero path, e.g. for deterministic runs.
    pub fn zeros(t0: f64, dt: f64, n: usize, dims: usize) -> Self {
        Self {
            t0,
            dt,
            dims,
            increments: vec![0.0; n * dims],
            kind: NoiseKind::White,
            seed: 0,
            stream: 0,
        }
    }

    pub fn n_steps(&self) -> usize {
        if self.dims == 0 {
            0
        } else {
            self.increments.len() / self.dims
        }
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dims..(k + 1) * self.dims]
    }

    /// Component `i` of every step.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.increments
            .iter()
            .skip(i)
            .step_by(self.dims)
            .copied()
            .collect()
    }

    /// Running sum `Σ_{j<k} Δη_j` for `k = 0..=n`; starts at zero.
    pub fn integrated(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for v in self.component(i) {
            acc += v;
            out.push(acc);
        }
        out
    }

    /// Same path multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.increments.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn check_grid(&self, dt: f64, n_steps: usize, dims: usize) -> Result<()> {
        if (self.dt - dt).abs() > 1e-12 * dt {
            return Err(Error::GridMismatch(format!(
                "noise dt {} vs integrator dt {}",
                self.dt, dt
            )));
        }
        if self.n_steps() != n_steps {
            return Err(Error::GridMismatch(format!(
                "noise has {} steps, integrator needs {}",
                self.n_steps(),
                n_steps
            )));
        }
        if self.dims != dims {
            return Err(Error::GridMismatch(format!(
                "noise has {} components, state has {}",
                self.dims, dims
            )));
        }
        Ok(())
    }
}

fn check_grid_args(n: usize, dt: f64, dims: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("n", "need at least one step"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
    }
    if dims == 0 {
        return Err(Error::validation("dims", "must be >= 1"));
    }
    Ok(())
}

/// Fills `out` with white increments of variance `w·dt`.
pub(crate) fn fill_white(w: f64, dt: f64, seed: u64, stream: u64, out: &mut [f64]) {
    if w == 0.0 {
        out.fill(0.0);
        return;
    }
    let sd = (w * dt).sqrt();
    let mut rng = StreamRng::new(seed, stream);
    for v in out.iter_mut() {
        *v = sd * rng.normal();
    }
}

/// White increments with per-component variance `w·dt`, deterministic in
/// `(seed, stream)`.
pub fn white_path(
    params: &PhysicalParams,
    n: usize,
    dt: f64,
    dims: usize,
    seed: u64,
    stream: u64,
) -> Result<NoisePath> {
    check_grid_args(n, dt, dims)?;
    let mut increments = vec![0.0; n * dims];
    fill_white(params.noise_strength(), dt, seed, stream, &mut increments);
    Ok(NoisePath {
        t0: 0.0,
        dt,
        dims,
        increments,
        kind: NoiseKind::White,
        seed,
        stream,
    })
}

/// How an ensemble draws noise for each member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    White,
    Spectral { mode: SpectrumMode, cutoff: Option<f64> },
}

impl NoiseModel {
    pub fn label(&self) -> String {
        match self {
            NoiseModel::White => "white".into(),
            NoiseModel::Spectral { mode, .. } => mode.label(),
        }
    }
}

/// A noise model bound to a grid, ready to produce paths for any stream.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    White { w: f64, dt: f64 },
    Colored(ColoredSynth),
}

impl NoiseSource {
    pub fn new(
        model: &NoiseModel,
        params: &PhysicalParams,
        n: usize,
        dt: f64,
        dims: usize,
    ) -> Result<Self> {
        match model {
            NoiseModel::White => Ok(NoiseSource::White {
                w: params.noise_strength(),
                dt,
            }),
            NoiseModel::Spectral { mode, cutoff } => {
                let mut spec = SpectrumSpec::new(*params, *mode);
                spec.cutoff = *cutoff;
                ColoredSynth::new(&spec, n, dt, dims).map(NoiseSource::Colored)
            }
        }
    }

    pub fn is_silent(&self) -> bool {
        match self {
            NoiseSource::White { w, .. } => *w == 0.0,
            NoiseSource::Colored(s) => s.is_silent(),
        }
    }

    /// Writes the increments of stream `stream` into `out` (`n * dims` long).
    pub fn fill(&self, seed: u64, stream: u64, out: &mut [f64]) {
        match self {
            NoiseSource::White { w, dt } => fill_white(*w, *dt, seed, stream, out),
            NoiseSource::Colored(s) => s.fill(seed, stream, out),
        }
    }
}
