use super::orbit::ClassicalOrbit;
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::state::TimeGrid;

/// Retarded Green function of `d²/dt² + Ω²(t)`,
/// `G(t, t') = ξ₁(t) ξ₂(t') − ξ₂(t) ξ₁(t')` for `t ≥ t'`.
///
/// `ξ₁(0) = 0, ξ̇₁(0) = 1` and `ξ₂(0) = 1, ξ̇₂(0) = 0`, so the Wronskian
/// `ξ₁ξ̇₂ − ξ̇₁ξ₂` is −1 and `∂_t G` jumps by 1 at `t = t'`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenFunction {
    pub t0: f64,
    pub dt: f64,
    pub omega2: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi1_dot: Vec<f64>,
    pub xi2: Vec<f64>,
    pub xi2_dot: Vec<f64>,
    /// Midpoint values `t_k + dt/2`, from quintic Hermite interpolation.
    pub(crate) omega2_half: Vec<f64>,
    pub(crate) xi1_half: Vec<f64>,
    pub(crate) xi1_dot_half: Vec<f64>,
    pub(crate) xi2_half: Vec<f64>,
    pub(crate) xi2_dot_half: Vec<f64>,
}

/// Quintic Hermite value and slope at the midpoint of `[0, h]` from
/// `(f, f', f'')` at both ends.
fn hermite_mid(h: f64, f0: [f64; 3], f1: [f64; 3]) -> (f64, f64) {
    let value = 0.5 * (f0[0] + f1[0]) + 5.0 * h / 32.0 * (f0[1] - f1[1]) + h * h / 64.0 * (f0[2] + f1[2]);
    let slope = 15.0 * (f1[0] - f0[0]) / (8.0 * h) - 7.0 * (f0[1] + f1[1]) / 16.0
        + h * (f1[2] - f0[2]) / 32.0;
    (value, slope)
}

fn homogeneous(dt: f64, w: &[f64], w_half: &[f64], y0: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let n = w.len() - 1;
    let mut q = Vec::with_capacity(n + 1);
    let mut qd = Vec::with_capacity(n + 1);
    let (mut a, mut b) = (y0[0], y0[1]);
    q.push(a);
    qd.push(b);
    for k in 0..n {
        let (w0, wm, w1) = (w[k], w_half[k], w[k + 1]);
        let k1a = b;
        let k1b = -w0 * a;
        let k2a = b + 0.5 * dt * k1b;
        let k2b = -wm * (a + 0.5 * dt * k1a);
        let k3a = b + 0.5 * dt * k2b;
        let k3b = -wm * (a + 0.5 * dt * k2a);
        let k4a = b + dt * k3b;
        let k4b = -w1 * (a + dt * k3a);
        a += dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        b += dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        q.push(a);
        qd.push(b);
    }
    (q, qd)
}

impl GreenFunction {
    /// Builds `G` from the frequency track of a classical orbit.
    pub fn from_orbit(orbit: &ClassicalOrbit) -> Result<Self> {
        Self::from_track(orbit.t0, orbit.dt, orbit.omega2.clone(), orbit.omega2_half.clone())
    }

    /// Builds `G` for an arbitrary `Ω²(t)`, sampled at grid points and midpoints.
    pub fn from_frequency(grid: &TimeGrid, omega2: impl Fn(f64) -> f64) -> Result<Self> {
        let full = (0..=grid.n_steps).map(|k| omega2(grid.time(k))).collect();
        let half = (0..grid.n_steps)
            .map(|k| omega2(grid.time(k) + 0.5 * grid.dt))
            .collect();
        Self::from_track(grid.t0, grid.dt, full, half)
    }

    fn from_track(t0: f64, dt: f64, omega2: Vec<f64>, omega2_half: Vec<f64>) -> Result<Self> {
        if omega2.len() < 2 || omega2_half.len() + 1 != omega2.len() {
            return Err(Error::validation("grid", "need at least one step with midpoint data"));
        }
        if omega2.iter().chain(&omega2_half).any(|w| !w.is_finite()) {
            return Err(Error::validation("omega2", "non-finite frequency"));
        }
        let (xi1, xi1_dot) = homogeneous(dt, &omega2, &omega2_half, [0.0, 1.0]);
        let (xi2, xi2_dot) = homogeneous(dt, &omega2, &omega2_half, [1.0, 0.0]);
        let n = omega2.len() - 1;
        let mut half = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for k in 0..n {
            for (s, (q, qd)) in [(&xi1, &xi1_dot), (&xi2, &xi2_dot)].into_iter().enumerate() {
                let (v, d) = hermite_mid(
                    dt,
                    [q[k], qd[k], -omega2[k] * q[k]],
                    [q[k + 1], qd[k + 1], -omega2[k + 1] * q[k + 1]],
                );
                half[2 * s].push(v);
                half[2 * s + 1].push(d);
            }
        }
        let [xi1_half, xi1_dot_half, xi2_half, xi2_dot_half] = half;
        Ok(Self {
            t0,
            dt,
            omega2,
            xi1,
            xi1_dot,
            xi2,
            xi2_dot,
            omega2_half,
            xi1_half,
            xi1_dot_half,
            xi2_half,
            xi2_dot_half,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.xi1.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// `G(t_k, t_j)`, zero for `j > k`.
    pub fn g(&self, k: usize, j: usize) -> f64 {
        if j > k {
            return 0.0;
        }
        self.xi1[k] * self.xi2[j] - self.xi2[k] * self.xi1[j]
    }

    /// `ξ₁ξ̇₂ − ξ̇₁ξ₂` on the grid; −1 up to integration error.
    pub fn wronskian(&self) -> Vec<f64> {
        (0..self.xi1.len())
            .map(|k| self.xi1[k] * self.xi2_dot[k] - self.xi1_dot[k] * self.xi2[k])
            .collect()
    }

    /// Solves `ü + Ω²u = f`, `u(t0) = u̇(t0) = 0`, as `u(t) = ∫ G(t,t') f(t') dt'`
    /// with Simpson's rule on each step.
    pub fn solve_forced(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n_steps();
        let fk: Vec<f64> = (0..=n).map(|k| f(self.time(k))).collect();
        let fh: Vec<f64> = (0..n).map(|k| f(self.time(k) + 0.5 * self.dt)).collect();
        self.convolve(&fk, &fh)
    }

    /// `∫_{t0}^{t_k} G(t_k, t') f(t') dt'` from samples of `f` at grid
    /// points and midpoints.
    pub(crate) fn convolve(&self, f: &[f64], f_half: &[f64]) -> Vec<f64> {
        let n = self.n_steps();
        let w = self.dt / 6.0;
        let (mut i1, mut i2) = (0.0, 0.0);
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for j in 0..n {
            i1 += w * (self.xi1[j] * f[j] + 4.0 * self.xi1_half[j] * f_half[j] + self.xi1[j + 1] * f[j + 1]);
            i2 += w * (self.xi2[j] * f[j] + 4.0 * self.xi2_half[j] * f_half[j] + self.xi2[j + 1] * f[j + 1]);
            out.push(self.xi1[j + 1] * i2 - self.xi2[j + 1] * i1);
        }
        out
    }
}

/// Noise response `Q(t) = (1/M) ∫ G(t, t') dη̃(t')/dt' dt'`.
///
/// `noise` holds step integrals of the normalized noise `η̃`. After
/// integrating by parts (`G(t,t) = 0`, `η̃` starts at zero) the kernel
/// acting on each step integral is `−∂_{t'}G`, evaluated at the step
/// midpoint:
/// `Q(t_k) = −(1/M) Σ_{j<k} ∂_{t'}G(t_k, t_j + dt/2) Δη̃_j`.
pub fn compute_q(green: &GreenFunction, noise: &NoisePath, mass: f64) -> Result<Vec<f64>> {
    noise.check_grid(green.dt, green.n_steps(), 1)?;
    let n = green.n_steps();
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for j in 0..n {
        let dw = noise.increments[j];
        s1 += green.xi1_dot_half[j] * dw;
        s2 += green.xi2_dot_half[j] * dw;
        // −∂_{t'}G(t, t') = ξ₂(t) ξ̇₁(t') − ξ₁(t) ξ̇₂(t')
        out.push((green.xi2[j + 1] * s1 - green.xi1[j + 1] * s2) / mass);
    }
    Ok(out)
}
