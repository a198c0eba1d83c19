//! Physical constants of a run.
//!
//! Units are whatever the caller chooses. Nothing here assumes SI; the
//! fine-structure constant and light speed only matter when a run is
//! expressed relative to the Bohr temperature.

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0 / 137.036;

/// Mass, radiation-reaction time, temperature and the constants that
/// convert between them.
///
/// The noise strength `w = 2 M γ k_B T` is always recomputed from the
/// stored fields so it can never drift out of sync with them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    mass: f64,
    gamma: f64,
    temperature: f64,
    hbar: f64,
    kb: f64,
    alpha: f64,
    lightspeed: Option<f64>,
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    finite(field, v)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be >= 0, got {v}")))
    }
}

impl PhysicalParams {
    pub fn new(mass: f64, gamma: f64, temperature: f64, hbar: f64, kb: f64) -> Result<Self> {
        Ok(Self {
            mass: positive("mass", mass)?,
            gamma: non_negative("gamma", gamma)?,
            temperature: non_negative("temperature", temperature)?,
            hbar: positive("hbar", hbar)?,
            kb: positive("kb", kb)?,
            alpha: DEFAULT_ALPHA,
            lightspeed: None,
        })
    }

    /// `ħ = k_B = 1`.
    pub fn natural(mass: f64, gamma: f64, temperature: f64) -> Result<Self> {
        Self::new(mass, gamma, temperature, 1.0, 1.0)
    }

    /// Picks the temperature that produces noise strength `w` for the given
    /// mass and friction.
    pub fn from_noise_strength(mass: f64, gamma: f64, w: f64, hbar: f64, kb: f64) -> Result<Self> {
        non_negative("noise_strength", w)?;
        positive("mass", mass)?;
        positive("kb", kb)?;
        non_negative("gamma", gamma)?;
        let temperature = if w == 0.0 {
            0.0
        } else if gamma == 0.0 {
            return Err(Error::validation(
                "gamma",
                "a positive noise strength needs gamma > 0",
            ));
        } else {
            w / (2.0 * mass * gamma * kb)
        };
        Self::new(mass, gamma, temperature, hbar, kb)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = positive("alpha", alpha)?;
        Ok(self)
    }

    pub fn with_lightspeed(mut self, c: f64) -> Result<Self> {
        self.lightspeed = Some(positive("c", c)?);
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn kb(&self) -> f64 {
        self.kb
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn lightspeed(&self) -> Option<f64> {
        self.lightspeed
    }

    /// `k_B T`.
    pub fn thermal_energy(&self) -> f64 {
        self.kb * self.temperature
    }

    /// `w = 2 M γ k_B T`.
    pub fn noise_strength(&self) -> f64 {
        2.0 * self.mass * self.gamma * self.kb * self.temperature
    }

    /// `T_H = α² M c² / k_B`, defined only when a light speed was supplied.
    pub fn bohr_temperature(&self) -> Option<f64> {
        self.lightspeed
            .map(|c| self.alpha * self.alpha * self.mass * c * c / self.kb)
    }

    /// `√(T / T_H)`, the expansion parameter of the semiclassical ansatz.
    pub fn thermal_ratio_sqrt(&self) -> Option<f64> {
        self.bohr_temperature().map(|th| (self.temperature / th).sqrt())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = non_negative("gamma", gamma)?;
        Ok(self)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        self.temperature = non_negative("temperature", temperature)?;
        Ok(self)
    }
}
