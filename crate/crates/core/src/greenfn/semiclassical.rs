use super::green::GreenFunction;
use super::orbit::ClassicalOrbit;
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::params::PhysicalParams;

/// Relative size of `|x_cl|` below which `B = A / x_cl` is masked.
pub const MASK_EPS: f64 = 1e-6;
/// Relative size of `|x_cl|` below which `B` is bridged for the composite.
pub const BRIDGE_FRACTION: f64 = 0.1;

/// Homogeneous part `c₁ξ₁ + c₂ξ₂` added to the retarded `A`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HomogeneousCoeffs {
    pub c1: f64,
    pub c2: f64,
}

/// First-order friction correction `A = x_cl B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipation {
    pub a: Vec<f64>,
    /// `A / x_cl`, NaN where masked.
    pub b: Vec<f64>,
    pub masked: Vec<bool>,
    /// `B` with a linear bridge across near-zero crossings of `x_cl`.
    pub b_bridged: Vec<f64>,
}

impl Dissipation {
    /// `x_cl − γA`, the damped orbit to first order in `γ`, finite everywhere.
    pub fn damped_position(&self, orbit: &ClassicalOrbit, gamma: f64) -> Vec<f64> {
        orbit.x.iter().zip(&self.a).map(|(x, a)| x - gamma * a).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }
}

/// Solves `M Ä + V''(x_cl) A = V''(x_cl) ẋ_cl` by retarded quadrature,
/// `A(t) = ∫ G(t,t') Ω²(t') ẋ_cl(t') dt'`, plus `c₁ξ₁ + c₂ξ₂`, and forms
/// `B = A / x_cl`.
pub fn compute_b(green: &GreenFunction, orbit: &ClassicalOrbit, coeffs: HomogeneousCoeffs) -> Result<Dissipation> {
    if green.n_steps() != orbit.n_steps() || (green.dt - orbit.dt).abs() > 1e-12 * orbit.dt {
        return Err(Error::GridMismatch("orbit and Green function grids differ".into()));
    }
    let f: Vec<f64> = orbit.omega2.iter().zip(&orbit.v).map(|(w, v)| w * v).collect();
    let f_half: Vec<f64> = orbit.omega2_half.iter().zip(&orbit.v_half).map(|(w, v)| w * v).collect();
    let mut a = green.convolve(&f, &f_half);
    if coeffs != HomogeneousCoeffs::default() {
        for (k, ak) in a.iter_mut().enumerate() {
            *ak += coeffs.c1 * green.xi1[k] + coeffs.c2 * green.xi2[k];
        }
    }
    let amp = orbit.amplitude();
    let mut b = Vec::with_capacity(a.len());
    let mut masked = Vec::with_capacity(a.len());
    for (x, ak) in orbit.x.iter().zip(&a) {
        if *ak == 0.0 {
            b.push(0.0);
            masked.push(false);
        } else if x.abs() <= MASK_EPS * amp {
            b.push(f64::NAN);
            masked.push(true);
        } else {
            b.push(ak / x);
            masked.push(false);
        }
    }
    let b_bridged = bridge(&orbit.x, &a, &b, BRIDGE_FRACTION * amp);
    Ok(Dissipation { a, b, masked, b_bridged })
}

/// Replaces `B` by a straight line wherever `|x_cl| < threshold`,
/// joining the values just outside the window.
fn bridge(x: &[f64], a: &[f64], b: &[f64], threshold: f64) -> Vec<f64> {
    let n = x.len();
    let inside = |k: usize| x[k].abs() < threshold && a[k] != 0.0;
    let mut out = b.to_vec();
    let mut k = 0;
    while k < n {
        if !inside(k) {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && inside(k) {
            k += 1;
        }
        let left = start.checked_sub(1).map(|i| (i, b[i]));
        let right = (k < n).then(|| (k, b[k]));
        for (i, slot) in out.iter_mut().enumerate().take(k).skip(start) {
            *slot = match (left, right) {
                (Some((l, bl)), Some((r, br))) => bl + (br - bl) * (i - l) as f64 / (r - l) as f64,
                (Some((_, bl)), None) => bl,
                (None, Some((_, br))) => br,
                (None, None) => 0.0,
            };
        }
    }
    out
}

/// Size of the thermal term, `√(T/T_H)` or an explicit override.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseScale {
    #[default]
    FromTemperature,
    Explicit(f64),
}

impl NoiseScale {
    pub fn resolve(&self, params: &PhysicalParams) -> Result<f64> {
        match *self {
            NoiseScale::Explicit(s) if s.is_finite() && s >= 0.0 => Ok(s),
            NoiseScale::Explicit(s) => Err(Error::validation("scale", format!("must be >= 0, got {s}"))),
            NoiseScale::FromTemperature => params.thermal_ratio_sqrt().ok_or_else(|| {
                Error::validation(
                    "scale",
                    "Bohr temperature undefined without a speed of light; set lightspeed or pass an explicit scale",
                )
            }),
        }
    }
}

/// Rescales a path of the physical noise `η` to `η̃ = η / scale`.
pub fn normalize_noise(path: &NoisePath, scale: f64) -> Result<NoisePath> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::validation("scale", "must be > 0 to normalize noise"));
    }
    Ok(path.scaled(1.0 / scale))
}

/// Semiclassical position `x = e^{−γB}[x_cl + s·Q]`, `s = √(T/T_H)`.
///
/// Near zeros of `x_cl` the bridged `B` is used and the first-order
/// remainder `−γ(A − B x_cl)` is added, so the result reduces to
/// `x_cl − γA + s·Q` there instead of dividing by `x_cl`. Away from the
/// zeros the remainder vanishes identically.
pub fn composite_solution(
    orbit: &ClassicalOrbit,
    dissipation: &Dissipation,
    q: Option<&[f64]>,
    params: &PhysicalParams,
    scale: NoiseScale,
) -> Result<Vec<f64>> {
    let n = orbit.x.len();
    if dissipation.a.len() != n || q.is_some_and(|q| q.len() != n) {
        return Err(Error::GridMismatch("series lengths differ".into()));
    }
    let s = match q {
        Some(_) => scale.resolve(params)?,
        None => 0.0,
    };
    let gamma = params.gamma();
    Ok((0..n)
        .map(|k| {
            let x = orbit.x[k];
            let b = dissipation.b_bridged[k];
            let noise = q.map_or(0.0, |q| s * q[k]);
            let remainder = dissipation.a[k] - b * x;
            (-gamma * b).exp() * (x + noise) - gamma * remainder
        })
        .collect())
}
