//! Closed-form results for the free particle and the damped oscillator.
//!
//! These are transcriptions of the harmonic and free-particle formulas,
//! kept free of any simulation so they can serve as test oracles.
//! Times are measured from the start of the run, `τ = t − t_a`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::params::PhysicalParams;

const SERIES_BELOW: f64 = 1e-4;

/// `1 + sin(2z)/(2z)`, with its Taylor series near `z = 0`.
pub fn width_bracket(z: f64) -> f64 {
    let y = 2.0 * z;
    if y.abs() < SERIES_BELOW {
        let y2 = y * y;
        2.0 - y2 / 6.0 + y2 * y2 / 120.0
    } else {
        1.0 + y.sin() / y
    }
}

/// Free-particle position `x + pτ/M + (1/M)∫dη`.
///
/// With `noise`, the integral runs over its first `round(τ/dt)` steps.
pub fn free_solution(
    params: &PhysicalParams,
    x: f64,
    p: f64,
    tau: f64,
    noise: Option<&NoisePath>,
) -> Result<f64> {
    let m = params.mass();
    let mut out = x + p * tau / m;
    if let Some(path) = noise {
        if path.dims != 1 {
            return Err(Error::validation("noise", "free_solution is one-dimensional"));
        }
        let k = (tau / path.dt).round() as usize;
        if k > path.n_steps() {
            return Err(Error::GridMismatch(format!(
                "noise covers {} steps, τ needs {k}",
                path.n_steps()
            )));
        }
        let mut drift = 0.0;
        for v in &path.increments[..k] {
            drift += v;
        }
        out += drift / m;
    }
    Ok(out)
}

/// Noise-averaged oscillator orbit to lowest order in `γ`:
/// `e^{−γω²τ/2} [x_a cos ωτ + p/(1+γω) · sin ωτ/(Mω)]`.
pub fn harmonic_orbit(params: &PhysicalParams, omega: f64, x_a: f64, p: f64, tau: f64) -> f64 {
    let g = params.gamma();
    let m = params.mass();
    let wt = omega * tau;
    // sin(ωτ)/(Mω) → τ/M as ω → 0
    let sin_term = if wt.abs() < SERIES_BELOW {
        tau * (1.0 - wt * wt / 6.0) / m
    } else {
        wt.sin() / (m * omega)
    };
    (-g * omega * omega * tau / 2.0).exp() * (x_a * wt.cos() + p / (1.0 + g * omega) * sin_term)
}

/// Position variance of the damped oscillator,
/// `(w/2M²) τ e^{−γω²τ} [1 + sin 2ωτ/(2ωτ)]`.
///
/// Goes to the free value `wτ/M²` as `ω → 0`.
pub fn harmonic_width(params: &PhysicalParams, omega: f64, tau: f64) -> f64 {
    harmonic_width_with(params.noise_strength(), params.mass(), params.gamma(), omega, tau)
}

/// [`harmonic_width`] with explicit `w`, `M`, `γ`.
pub fn harmonic_width_with(w: f64, mass: f64, gamma: f64, omega: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    w / (2.0 * mass * mass) * tau * (-gamma * omega * omega * tau).exp() * width_bracket(omega * tau)
}

/// Free-particle width `wτ/M²`.
pub fn free_width(params: &PhysicalParams, tau: f64) -> f64 {
    params.noise_strength() * tau.max(0.0) / params.mass().powi(2)
}

/// Dimensionless width `f_γ(ωt) = ωt · e^{−γω·ωt} · [1 + sin 2ωt/(2ωt)]`,
/// so that `Var x = (w / 2M²ω) f_γ(ωt)`. `gamma_omega` is the product `γω`.
pub fn f_gamma(gamma_omega: f64, omega_t: f64) -> f64 {
    if omega_t <= 0.0 {
        return 0.0;
    }
    omega_t * (-gamma_omega * omega_t).exp() * width_bracket(omega_t)
}

/// Table of `f_γ` on a grid of `ωt`, one column per `γω`.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthCurve {
    pub gammas: Vec<f64>,
    pub omega_t: Vec<f64>,
    /// `values[g][k] = f_γ(omega_t[k])` for `gammas[g]`.
    pub values: Vec<Vec<f64>>,
}

impl WidthCurve {
    /// CSV with header `omega_t,f_gamma_<γ1>,…`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["omega_t".to_string()];
        header.extend(self.gammas.iter().map(|g| format!("f_gamma_{g}")));
        w.write_record(&header)?;
        for (k, t) in self.omega_t.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.values.iter().map(|col| col[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn width_curve(gammas: &[f64], omega_t: &[f64]) -> Result<WidthCurve> {
    if gammas.is_empty() {
        return Err(Error::validation("gammas", "need at least one value"));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::validation("gammas", format!("must be >= 0, got {g}")));
    }
    if let Some(t) = omega_t.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::validation("grid", format!("must be > 0, got {t}")));
    }
    Ok(WidthCurve {
        gammas: gammas.to_vec(),
        omega_t: omega_t.to_vec(),
        values: gammas
            .iter()
            .map(|&g| omega_t.iter().map(|&t| f_gamma(g, t)).collect())
            .collect(),
    })
}

/// Free Gaussian packet centre and width under the replacement
/// `x̄ → x̄ − pτ/M`, `σ → σ (1 + 2wτ/M²)`.
///
/// The centre moves backwards in time: it describes the backward-argument
/// Wigner estimate, not the forward density. The width rule reproduces
/// the transported profile exactly only for `σ = 1` in the units used.
pub fn packet_params(params: &PhysicalParams, sigma: f64, x_bar: f64, p: f64, tau: f64) -> (f64, f64) {
    let m = params.mass();
    let w = params.noise_strength();
    (x_bar - p * tau / m, sigma * (1.0 + 2.0 * w * tau / (m * m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::white_path;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit(w: f64, gamma: f64) -> PhysicalParams {
        if gamma == 0.0 {
            // w is irrelevant to orbit tests when γ = 0
            PhysicalParams::natural(1.0, 0.0, 0.0).unwrap()
        } else {
            PhysicalParams::from_noise_strength(1.0, gamma, w, 1.0, 1.0).unwrap()
        }
    }

    #[test]
    fn free_examples() {
        let p = unit(0.0, 0.0);
        assert_eq!(free_solution(&p, 0.3, 0.0, 5.0, None).unwrap(), 0.3);
        assert_eq!(free_solution(&p, 0.3, 1.0, 2.0, None).unwrap(), 2.3);
    }

    #[test]
    fn free_with_noise_adds_integral() {
        let p = unit(1.0, 0.5);
        let path = white_path(&p, 100, 0.01, 1, 1, 0).unwrap();
        let x = free_solution(&p, 0.0, 0.0, 1.0, Some(&path)).unwrap();
        let total: f64 = path.increments.iter().sum();
        assert!((x - total).abs() < 1e-14);
        assert!(free_solution(&p, 0.0, 0.0, 2.0, Some(&path)).is_err());
    }

    #[test]
    fn orbit_examples() {
        let p = unit(0.0, 0.0);
        for t in [0.0, 0.7, 3.0] {
            assert!((harmonic_orbit(&p, 1.3, 1.0, 0.0, t) - (1.3 * t).cos()).abs() < 1e-15);
        }
        let p = PhysicalParams::natural(1.0, 0.1, 0.0).unwrap();
        let v = harmonic_orbit(&p, 1.0, 1.0, 0.0, 2.0 * PI);
        assert!((v - (-0.1 * PI).exp()).abs() < 1e-12);
        assert!((v - 0.7304).abs() < 5e-5);
    }

    #[test]
    fn width_examples() {
        let p = unit(1.0, 0.5);
        let q = PhysicalParams::from_noise_strength(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(harmonic_width(&p, 1.0, 0.0), 0.0);
        // γ = 0 variant via explicit arguments
        let v = harmonic_width_with(1.0, 1.0, 0.0, 1.0, PI);
        assert!((v - PI / 2.0).abs() < 1e-12);
        assert!((harmonic_width(&q, 1e-9, 3.0) - free_width(&q, 3.0)).abs() < 1e-9);
    }

    #[test]
    fn free_limit_uniform() {
        let p = PhysicalParams::from_noise_strength(1.3, 0.2, 0.7, 1.0, 1.0).unwrap();
        for k in 1..=1000 {
            let t = k as f64 * 0.01;
            let r = harmonic_width(&p, 1e-4, t) / free_width(&p, t);
            assert!((r - 1.0).abs() <= 1e-6, "t={t}: {r}");
        }
    }

    #[test]
    fn f_gamma_small_time_slope_two() {
        for z in [1e-8, 1e-6, 1e-5, 2e-4] {
            assert!((f_gamma(0.3, z) / z - 2.0).abs() < 1e-3);
        }
        assert_eq!(f_gamma(0.0, 0.0), 0.0);
    }

    #[test]
    fn f_gamma_undamped_oscillation_has_period_pi() {
        // f_0(z) − z = sin(2z)/2 has period π in z
        for z in [0.3, 1.1, 2.5] {
            let a = f_gamma(0.0, z) - z;
            let b = f_gamma(0.0, z + PI) - (z + PI);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn f_gamma_decays_after_turnover() {
        let g = 0.2;
        // derivative ∝ (1 − γz) + cos 2z − γ sin 2z / 2 is negative once γz > 2.1
        let start = 3.0 / g;
        let mut prev = f_gamma(g, start);
        for k in 1..600 {
            let v = f_gamma(g, start + 0.1 * k as f64);
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn packet_examples() {
        let quiet = PhysicalParams::natural(1.0, 0.0, 0.0).unwrap();
        assert_eq!(packet_params(&quiet, 0.4, 1.5, 0.0, 3.0), (1.5, 0.4));
        let p = PhysicalParams::from_noise_strength(1.0, 0.1, 0.5, 1.0, 1.0).unwrap();
        let (_, s) = packet_params(&p, 0.7, 0.0, 0.0, 2.0);
        assert!((s - 2.1).abs() < 1e-12);
    }

    #[test]
    fn width_curve_csv() {
        let c = width_curve(&[0.0, 0.1], &[0.5, 1.0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega_t,f_gamma_0,f_gamma_0.1\n0.5,"));
        assert!(width_curve(&[0.1], &[0.0]).is_err());
        assert!(width_curve(&[], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn bracket_continuous_across_switch(z in 1e-6f64..1e-3) {
            let exact = 1.0 + (2.0 * z).sin() / (2.0 * z);
            prop_assert!((width_bracket(z) - exact).abs() < 1e-9);
        }

        #[test]
        fn oracles_are_pure(t in 0.0f64..50.0, om in 0.0f64..5.0) {
            let p = PhysicalParams::from_noise_strength(1.0, 0.05, 1.0, 1.0, 1.0).unwrap();
            prop_assert_eq!(harmonic_width(&p, om, t).to_bits(), harmonic_width(&p, om, t).to_bits());
            prop_assert_eq!(f_gamma(0.05, t).to_bits(), f_gamma(0.05, t).to_bits());
        }

        #[test]
        fn small_time_growth_is_brownian(t in 1e-4f64..1e-2) {
            let p = PhysicalParams::from_noise_strength(1.0, 0.05, 1.0, 1.0, 1.0).unwrap();
            let r = harmonic_width(&p, 1.0, t) / free_width(&p, t);
            prop_assert!((r - 1.0).abs() < 2.0 * t * t + 0.05 * t + 1e-12);
        }
    }
}
