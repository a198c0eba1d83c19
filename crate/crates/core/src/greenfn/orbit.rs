use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::potential::Potential;
use crate::state::TimeGrid;

/// Noiseless one-dimensional orbit `M ẍ + V'(x) = 0` on a uniform grid.
///
/// Integrated with RK4 at half the grid step, so the orbit and its
/// frequency track `Ω² = V''(x)/M` are also known at every midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOrbit {
    pub t0: f64,
    pub dt: f64,
    pub mass: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub omega2: Vec<f64>,
    /// Values at `t_k + dt/2`, `k = 0..n_steps`.
    pub x_half: Vec<f64>,
    pub v_half: Vec<f64>,
    pub omega2_half: Vec<f64>,
}

impl ClassicalOrbit {
    pub fn n_steps(&self) -> usize {
        self.x.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.x.len()).map(|k| self.time(k)).collect()
    }

    /// `max |x_cl|` over the grid.
    pub fn amplitude(&self) -> f64 {
        self.x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            t0: self.t0,
            dt: self.dt,
            n_steps: self.n_steps(),
        }
    }
}

/// Integrates the classical orbit from `x(t0) = x_a`, `M ẋ(t0) = p`.
///
/// Fails with [`Error::Escape`] when the orbit leaves the finite range or
/// the tabulated domain of the potential.
pub fn solve_classical(
    params: &PhysicalParams,
    potential: &Potential,
    x_a: f64,
    p: f64,
    grid: &TimeGrid,
) -> Result<ClassicalOrbit> {
    potential.check_dims(1)?;
    if !(x_a.is_finite() && p.is_finite()) {
        return Err(Error::validation("x_a", "initial data must be finite"));
    }
    let m = params.mass();
    let h = 0.5 * grid.dt;
    let n = grid.n_steps;
    let force = |x: f64, t: f64| -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Escape { time: t });
        }
        match potential.eval_1d(x) {
            Ok((_, d1, _)) => Ok(-d1 / m),
            Err(Error::Domain { .. }) => Err(Error::Escape { time: t }),
            Err(e) => Err(e),
        }
    };
    let mut xs = Vec::with_capacity(2 * n + 1);
    let mut vs = Vec::with_capacity(2 * n + 1);
    let (mut x, mut v) = (x_a, p / m);
    xs.push(x);
    vs.push(v);
    for s in 0..2 * n {
        let t = grid.t0 + s as f64 * h;
        let k1x = v;
        let k1v = force(x, t)?;
        let k2x = v + 0.5 * h * k1v;
        let k2v = force(x + 0.5 * h * k1x, t)?;
        let k3x = v + 0.5 * h * k2v;
        let k3v = force(x + 0.5 * h * k2x, t)?;
        let k4x = v + h * k3v;
        let k4v = force(x + h * k3x, t)?;
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::Escape { time: t + h });
        }
        xs.push(x);
        vs.push(v);
    }
    let mut omega2 = Vec::with_capacity(2 * n + 1);
    for (s, &x) in xs.iter().enumerate() {
        let t = grid.t0 + s as f64 * h;
        let (_, _, d2) = potential.eval_1d(x).map_err(|_| Error::Escape { time: t })?;
        omega2.push(d2 / m);
    }
    let even = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<_>>();
    let odd = |v: &[f64]| v.iter().skip(1).step_by(2).copied().collect::<Vec<_>>();
    Ok(ClassicalOrbit {
        t0: grid.t0,
        dt: grid.dt,
        mass: m,
        x: even(&xs),
        v: even(&vs),
        omega2: even(&omega2),
        x_half: odd(&xs),
        v_half: odd(&vs),
        omega2_half: odd(&omega2),
    })
}
