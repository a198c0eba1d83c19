use crate::error::{Error, Result};

/// A point `(x, p)` in phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::validation(
                "p",
                format!("position has {} components, momentum {}", x.len(), p.len()),
            ));
        }
        if x.is_empty() {
            return Err(Error::validation("x", "empty state"));
        }
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::validation("x", "non-finite phase-space entry"));
        }
        Ok(Self { x, p })
    }

    pub fn one_d(x: f64, p: f64) -> Self {
        Self {
            x: vec![x],
            p: vec![p],
        }
    }

    pub fn dims(&self) -> usize {
        self.x.len()
    }
}

/// Uniform time grid `t0, t0 + dt, …, t0 + n_steps·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::validation("t0", "must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Grid covering `[t0, t0 + duration]` with step `dt` (rounded to the
    /// nearest whole number of steps).
    pub fn spanning(t0: f64, duration: f64, dt: f64) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::validation("duration", "must be >= 0"));
        }
        let n = (duration / dt).round() as usize;
        Self::new(t0, dt, n)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// Output of a single integration: states on a uniform grid plus the
/// running integral `∫ ∇V(x(t')) dt'` used by Wigner transport.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<PhaseState>,
    pub accumulated_grad_v: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.states[0].dims()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Position series of component `i`.
    pub fn positions(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.x[i]).collect()
    }

    pub fn momenta(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.p[i]).collect()
    }
}
