//! Spectral synthesis of stationary colored noise.
//!
//! A circulant of length `N ≥ 2n` is filled with independent complex
//! Gaussians scaled by `√(S(ω_j) N / dt)`, Hermitian-symmetrised and
//! inverse transformed. The first `n` samples of the real result are
//! samples of `η`; multiplying by `dt` gives the step integrals.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_grid_args, NoiseKind, NoisePath, SpectrumSpec};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Clone)]
pub struct ColoredSynth {
    spec: SpectrumSpec,
    n: usize,
    dt: f64,
    dims: usize,
    fft_len: usize,
    amplitude: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for ColoredSynth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ColoredSynth")
            .field("mode", &self.spec.mode)
            .field("n", &self.n)
            .field("dt", &self.dt)
            .field("dims", &self.dims)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl ColoredSynth {
    pub const MIN_STEPS: usize = 8;

    pub fn new(spec: &SpectrumSpec, n: usize, dt: f64, dims: usize) -> Result<Self> {
        check_grid_args(n, dt, dims)?;
        if n < Self::MIN_STEPS {
            return Err(Error::validation(
                "n",
                format!("colored synthesis needs at least {} steps", Self::MIN_STEPS),
            ));
        }
        spec.validate()?;
        let cutoff = spec.cutoff_for(dt)?;
        let fft_len = (2 * n).next_power_of_two();
        let d_omega = 2.0 * std::f64::consts::PI / (fft_len as f64 * dt);
        let mut amplitude = Vec::with_capacity(fft_len / 2 + 1);
        for j in 0..=fft_len / 2 {
            let omega = j as f64 * d_omega;
            let s = if omega > cutoff * (1.0 + 1e-12) {
                0.0
            } else {
                spec.density(omega)?
            };
            if s < 0.0 {
                return Err(Error::validation(
                    "noise.order",
                    format!("truncated spectrum is negative at ω = {omega}; lower the order or the cutoff"),
                ));
            }
            amplitude.push((s * fft_len as f64 / dt).sqrt());
        }
        let ifft = FftPlanner::new().plan_fft_inverse(fft_len);
        Ok(Self {
            spec: *spec,
            n,
            dt,
            dims,
            fft_len,
            amplitude,
            ifft,
        })
    }

    pub fn is_silent(&self) -> bool {
        self.amplitude.iter().all(|&a| a == 0.0)
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    /// Writes `n * dims` step-major increments for `(seed, stream)`.
    pub fn fill(&self, seed: u64, stream: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n * self.dims);
        if self.is_silent() {
            out.fill(0.0);
            return;
        }
        let big_n = self.fft_len;
        let half = big_n / 2;
        let mut rng = StreamRng::new(seed, stream);
        let mut buf = vec![Complex64::new(0.0, 0.0); big_n];
        let norm = self.dt / big_n as f64;
        let root_half = std::f64::consts::FRAC_1_SQRT_2;
        for d in 0..self.dims {
            buf[0] = Complex64::new(self.amplitude[0] * rng.normal(), 0.0);
            for j in 1..half {
                let re = rng.normal() * root_half;
                let im = rng.normal() * root_half;
                let z = Complex64::new(re, im) * self.amplitude[j];
                buf[j] = z;
                buf[big_n - j] = z.conj();
            }
            buf[half] = Complex64::new(self.amplitude[half] * rng.normal(), 0.0);
            self.ifft.process(&mut buf);
            for k in 0..self.n {
                out[k * self.dims + d] = buf[k].re * norm;
            }
        }
    }

    pub fn generate(&self, seed: u64, stream: u64) -> NoisePath {
        let mut increments = vec![0.0; self.n * self.dims];
        self.fill(seed, stream, &mut increments);
        NoisePath {
            t0: 0.0,
            dt: self.dt,
            dims: self.dims,
            increments,
            kind: NoiseKind::Spectral(self.spec.mode),
            seed,
            stream,
        }
    }
}

/// One colored realization with the spectrum of `spec`.
pub fn colored_path(
    spec: &SpectrumSpec,
    n: usize,
    dt: f64,
    dims: usize,
    seed: u64,
    stream: u64,
) -> Result<NoisePath> {
    Ok(ColoredSynth::new(spec, n, dt, dims)?.generate(seed, stream))
}
