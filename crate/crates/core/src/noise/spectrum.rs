use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Shape of the bath noise power density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumMode {
    /// White noise, `S(ω) = w`.
    Flat,
    /// `w · Σ_{k≤m} c_k x^{2k}`, the order-`m` high-temperature expansion of
    /// `x coth x` with `x = ħω / 2k_BT`.
    Truncated(u32),
    /// `w · x coth x`.
    FullCoth,
}

impl SpectrumMode {
    pub const MAX_ORDER: u32 = 20;

    pub fn label(&self) -> String {
        match self {
            SpectrumMode::Flat => "flat".into(),
            SpectrumMode::Truncated(m) => format!("truncated{m}"),
            SpectrumMode::FullCoth => "coth".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSpec {
    pub params: PhysicalParams,
    pub mode: SpectrumMode,
    /// Hard band limit. `None` means the grid's Nyquist frequency.
    pub cutoff: Option<f64>,
}

impl SpectrumSpec {
    pub fn new(params: PhysicalParams, mode: SpectrumMode) -> Self {
        Self {
            params,
            mode,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    /// Checks mode parameters and the temperature requirement.
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            SpectrumMode::Flat => {}
            SpectrumMode::Truncated(m) => {
                if m == 0 || m > SpectrumMode::MAX_ORDER {
                    return Err(Error::validation(
                        "noise.order",
                        format!("order must be in 1..={}, got {m}", SpectrumMode::MAX_ORDER),
                    ));
                }
                if self.params.temperature() == 0.0 {
                    return Err(Error::Unsupported(
                        "truncated spectrum at T = 0 (expansion in ħω/k_BT degenerates)".into(),
                    ));
                }
            }
            SpectrumMode::FullCoth => {
                if self.params.temperature() == 0.0 {
                    return Err(Error::Unsupported(
                        "coth spectrum at T = 0 (x coth x with x = ħω/2k_BT degenerates)".into(),
                    ));
                }
            }
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::validation("noise.cutoff", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Cutoff to use on a grid with step `dt`; errors if it exceeds Nyquist.
    pub fn cutoff_for(&self, dt: f64) -> Result<f64> {
        let nyquist = PI / dt;
        match self.cutoff {
            None => Ok(nyquist),
            Some(c) if c <= nyquist * (1.0 + 1e-12) => Ok(c),
            Some(c) => Err(Error::validation(
                "noise.cutoff",
                format!("{c} exceeds the Nyquist frequency {nyquist} of dt = {dt}"),
            )),
        }
    }

    /// Noise power density `S(ω)`, two-sided, so that `⟨η(t)η(t')⟩ = ∫ S e^{iω(t-t')} dω/2π`.
    pub fn density(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::validation("omega", "must be finite"));
        }
        self.validate()?;
        let w = self.params.noise_strength();
        let shape = match self.mode {
            SpectrumMode::Flat => 1.0,
            SpectrumMode::Truncated(m) => {
                let x = self.reduced_frequency(omega);
                coth_series(x, m)
            }
            SpectrumMode::FullCoth => x_coth_x(self.reduced_frequency(omega)),
        };
        Ok(w * shape)
    }

    fn reduced_frequency(&self, omega: f64) -> f64 {
        self.params.hbar() * omega / (2.0 * self.params.thermal_energy())
    }
}

/// `x coth x`, continuous through `x = 0`.
pub fn x_coth_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        1.0 + ax * ax / 3.0
    } else {
        ax / ax.tanh()
    }
}

/// Taylor coefficients of `x coth x = Σ c_k x^{2k}`:
/// `c_0 = 1`, `c_k = 2 (-1)^{k+1} ζ(2k) / π^{2k}`.
pub fn coth_series_coefficient(k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    2.0 * sign * zeta_even(k) / PI.powi(2 * k as i32)
}

fn zeta_even(k: u32) -> f64 {
    if k == 1 {
        return PI * PI / 6.0;
    }
    let s = 2 * k as i32;
    let n_terms = 2000u32;
    let head: f64 = (1..=n_terms).rev().map(|n| (n as f64).powi(-s)).sum();
    // Euler–Maclaurin tail from n_terms + 1 onward
    let n = n_terms as f64;
    let tail = n.powi(1 - s) / (s as f64 - 1.0) - 0.5 * n.powi(-s);
    head + tail
}

fn coth_series(x: f64, order: u32) -> f64 {
    let x2 = x * x;
    let mut acc = 0.0;
    let mut pow = 1.0;
    for k in 0..=order {
        acc += coth_series_coefficient(k) * pow;
        pow *= x2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w_gamma: f64, t: f64) -> PhysicalParams {
        PhysicalParams::natural(1.0, w_gamma, t).unwrap()
    }

    #[test]
    fn flat_is_w() {
        // w = 2 * 1 * 0.01 * 1 = 0.02
        let s = SpectrumSpec::new(params(0.01, 1.0), SpectrumMode::Flat);
        for om in [0.0, 1.0, -30.0] {
            assert!((s.density(om).unwrap() - 0.02).abs() < 1e-15);
        }
    }

    #[test]
    fn coth_low_frequency_limit() {
        let s = SpectrumSpec::new(params(0.5, 1.0), SpectrumMode::FullCoth);
        let w = 1.0;
        assert!((s.density(0.0).unwrap() - w).abs() < 1e-15);
        assert!((s.density(1e-9).unwrap() - w).abs() < 1e-12);
    }

    #[test]
    fn truncated_first_order_value() {
        // w = 1, ħ = 1, k_B T = 1, ω = 2: 1 + 4/12
        let s = SpectrumSpec::new(params(0.5, 1.0), SpectrumMode::Truncated(1));
        assert!((s.density(2.0).unwrap() - (1.0 + 4.0 / 12.0)).abs() < 1e-14);
    }

    #[test]
    fn series_coefficients_match_bernoulli_values() {
        // 1, 1/3, -1/45, 2/945, -1/4725
        let expected = [1.0, 1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0, -1.0 / 4725.0];
        for (k, e) in expected.iter().enumerate() {
            let c = coth_series_coefficient(k as u32);
            assert!((c - e).abs() < 1e-13 * e.abs().max(1e-3), "k={k}: {c} vs {e}");
        }
    }

    #[test]
    fn high_order_series_converges_to_coth() {
        let x: f64 = 0.8;
        let exact = x / x.tanh();
        assert!((coth_series(x, 12) - exact).abs() < 1e-9);
    }

    #[test]
    fn zero_temperature_coth_unsupported() {
        let s = SpectrumSpec::new(params(0.5, 0.0), SpectrumMode::FullCoth);
        assert!(matches!(s.density(1.0), Err(Error::Unsupported(_))));
        let s = SpectrumSpec::new(params(0.5, 0.0), SpectrumMode::Flat);
        assert_eq!(s.density(1.0).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_above_nyquist_rejected() {
        let s = SpectrumSpec::new(params(0.5, 1.0), SpectrumMode::Flat).with_cutoff(400.0);
        assert!(s.cutoff_for(0.01).is_err());
        assert_eq!(s.cutoff_for(0.001).unwrap(), 400.0);
        assert_eq!(
            SpectrumSpec::new(params(0.5, 1.0), SpectrumMode::Flat).cutoff_for(0.01).unwrap(),
            PI / 0.01
        );
    }
}
