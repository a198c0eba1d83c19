//! Stochastic equation of motion with radiation-reaction friction.
//!
//! The bath equation `M ẍ − M γ x⃛ + ∇V(x) = η̇` is integrated once,
//! `M ẋ − M γ ẍ = p − ∫∇V dt' + η(t)`, and the third-derivative friction is
//! order-reduced with the zeroth-order motion, `M γ ẍ ≈ −γ ∫ Hess V · ẋ`.
//! Writing `M ẋ = u + η` splits the velocity into a smooth part `u` and
//! the white noise itself, which gives the additive-noise system
//!
//! ```text
//! du = −[∇V(x) + (γ/M) Hess V(x) · u] dt
//! dx = (u/M) dt + dη_int / M
//! ```
//!
//! where `dη_int` are the step integrals stored in a [`NoisePath`]. The
//! friction acting on the noise part of the velocity is of order
//! `γ·√w` and is dropped. Trajectories report `u` as the momentum; the
//! instantaneous `M ẋ` carries the white noise and has no pathwise value.
//!
//! `DirectThirdOrder` keeps the unreduced equation (state `x, v`) and is
//! only useful for watching the runaway family appear.

mod ensemble;

pub use ensemble::{
    run_ensemble, EnsembleMoments, EnsembleResult, EnsembleSpec, FailurePolicy, InitialSampler,
    MomentRow, PointSampler, TrajectoryFailure,
};

use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::params::PhysicalParams;
use crate::potential::Potential;
use crate::state::{PhaseState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
    /// Kick–drift–kick with the noise displacement applied during the drift.
    /// The closing kick takes the friction term at its end point, which
    /// makes the scheme weakly second order.
    SplitStep,
    /// Unreduced third-order dynamics, with runaway solutions.
    DirectThirdOrder,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler",
            Scheme::SplitStep => "split",
            Scheme::DirectThirdOrder => "third-order",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euler" | "euler-maruyama" => Some(Scheme::EulerMaruyama),
            "split" | "split-step" => Some(Scheme::SplitStep),
            "third-order" | "direct" => Some(Scheme::DirectThirdOrder),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
    /// Abort threshold on `|ẍ|`, only consulted by `DirectThirdOrder`.
    pub runaway_threshold: f64,
}

impl IntegratorSpec {
    pub const DEFAULT_RUNAWAY_THRESHOLD: f64 = 1e8;

    pub fn new(scheme: Scheme, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Self {
            scheme,
            dt,
            n_steps,
            runaway_threshold: Self::DEFAULT_RUNAWAY_THRESHOLD,
        })
    }

    pub fn split(dt: f64, n_steps: usize) -> Result<Self> {
        Self::new(Scheme::SplitStep, dt, n_steps)
    }

    pub fn with_runaway_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::validation("runaway_threshold", "must be > 0"));
        }
        self.runaway_threshold = threshold;
        Ok(self)
    }

    pub fn order_reduction(&self) -> bool {
        !matches!(self.scheme, Scheme::DirectThirdOrder)
    }

    pub fn duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// Mutable integration state for one trajectory.
pub(crate) struct Stepper<'a> {
    params: &'a PhysicalParams,
    potential: &'a Potential,
    spec: IntegratorSpec,
    t0: f64,
    dims: usize,
    pub(crate) x: Vec<f64>,
    /// Smooth momentum `u`, or `M v` in third-order mode.
    pub(crate) u: Vec<f64>,
    /// Running `∫ ∇V dt`.
    pub(crate) acc: Vec<f64>,
    // third-order mode only: p − ∫∇V
    shifted_p: Vec<f64>,
    grad: Vec<f64>,
    hvp: Vec<f64>,
    grad_prev: Vec<f64>,
    trial_u: Vec<f64>,
    scratch_grad: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(
        params: &'a PhysicalParams,
        potential: &'a Potential,
        spec: IntegratorSpec,
        t0: f64,
        dims: usize,
    ) -> Result<Self> {
        potential.check_dims(dims)?;
        if spec.scheme == Scheme::DirectThirdOrder && params.gamma() == 0.0 {
            return Err(Error::validation(
                "gamma",
                "third-order mode needs gamma > 0 (the equation is singular at gamma = 0)",
            ));
        }
        Ok(Self {
            params,
            potential,
            spec,
            t0,
            dims,
            x: vec![0.0; dims],
            u: vec![0.0; dims],
            acc: vec![0.0; dims],
            shifted_p: vec![0.0; dims],
            grad: vec![0.0; dims],
            hvp: vec![0.0; dims],
            grad_prev: vec![0.0; dims],
            trial_u: vec![0.0; dims],
            scratch_grad: vec![0.0; dims],
            scratch: vec![0.0; dims * dims],
        })
    }

    /// Loads initial data `(x_a, p)` at `t0`.
    pub(crate) fn reset(&mut self, initial: &PhaseState) -> Result<()> {
        if initial.dims() != self.dims {
            return Err(Error::validation(
                "initial",
                format!("state has {} components, expected {}", initial.dims(), self.dims),
            ));
        }
        self.x.copy_from_slice(&initial.x);
        self.acc.fill(0.0);
        match self.spec.scheme {
            Scheme::DirectThirdOrder => {
                // M v − M γ a = p with a(t_a) = −∇V(x_a)/M
                self.potential.gradient_into(&self.x, &mut self.grad)?;
                let g = self.params.gamma();
                for i in 0..self.dims {
                    self.u[i] = initial.p[i] - g * self.grad[i];
                    self.shifted_p[i] = initial.p[i];
                }
            }
            _ => self.u.copy_from_slice(&initial.p),
        }
        Ok(())
    }

    pub(crate) fn state(&self) -> PhaseState {
        PhaseState {
            x: self.x.clone(),
            p: self.u.clone(),
        }
    }

    fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.spec.dt
    }

    #[inline]
    fn kick(&mut self, half_dt: f64, friction: f64) -> Result<()> {
        self.potential
            .grad_and_hvp(&self.x, &self.u, &mut self.grad, &mut self.hvp, &mut self.scratch)?;
        for i in 0..self.dims {
            self.u[i] -= half_dt * (self.grad[i] + friction * self.hvp[i]);
        }
        Ok(())
    }

    /// Closing half kick with the friction term taken at the end of the
    /// substep, `u' = u − h(∇V + f H u')`, solved by one fixed-point pass.
    /// Paired with the explicit opening kick this keeps the friction
    /// decay second order.
    #[inline]
    fn kick_closing(&mut self, half_dt: f64, friction: f64) -> Result<()> {
        self.potential
            .grad_and_hvp(&self.x, &self.u, &mut self.grad, &mut self.hvp, &mut self.scratch)?;
        if friction == 0.0 {
            for i in 0..self.dims {
                self.u[i] -= half_dt * self.grad[i];
            }
            return Ok(());
        }
        for i in 0..self.dims {
            self.trial_u[i] = self.u[i] - half_dt * (self.grad[i] + friction * self.hvp[i]);
        }
        self.potential.grad_and_hvp(
            &self.x,
            &self.trial_u,
            &mut self.scratch_grad,
            &mut self.hvp,
            &mut self.scratch,
        )?;
        for i in 0..self.dims {
            self.u[i] -= half_dt * (self.grad[i] + friction * self.hvp[i]);
        }
        Ok(())
    }

    /// Scalar form of the split step; same arithmetic, no slice loops.
    #[inline]
    fn step_split_1d(&mut self, k: usize, dw: f64) -> Result<()> {
        let dt = self.spec.dt;
        let h = 0.5 * dt;
        let m = self.params.mass();
        let friction = self.params.gamma() / m;
        let (mut x, mut u) = (self.x[0], self.u[0]);
        let (g0, hv0) = self.potential.grad_and_hvp_1d(x, u)?;
        u -= h * (g0 + friction * hv0);
        x += (dt * u + dw) / m;
        let (g1, hv1) = self.potential.grad_and_hvp_1d(x, u)?;
        if friction == 0.0 {
            u -= h * g1;
        } else {
            let trial = u - h * (g1 + friction * hv1);
            let (_, hv_trial) = self.potential.grad_and_hvp_1d(x, trial)?;
            u -= h * (g1 + friction * hv_trial);
        }
        self.acc[0] += h * (g0 + g1);
        self.x[0] = x;
        self.u[0] = u;
        if !(x.is_finite() && u.is_finite()) {
            return Err(Error::Integration {
                step: k + 1,
                time: self.time(k + 1),
                message: "non-finite state (overflow or runaway)".into(),
            });
        }
        Ok(())
    }

    /// Advances from step `k` to `k + 1` with noise integrals `dw`.
    #[inline]
    pub(crate) fn step(&mut self, k: usize, dw: &[f64]) -> Result<()> {
        if self.dims == 1 && self.spec.scheme == Scheme::SplitStep {
            return self.step_split_1d(k, dw[0]);
        }
        let dt = self.spec.dt;
        let m = self.params.mass();
        let friction = self.params.gamma() / m;
        match self.spec.scheme {
            Scheme::SplitStep => {
                self.kick(0.5 * dt, friction)?;
                self.grad_prev.copy_from_slice(&self.grad);
                for i in 0..self.dims {
                    self.x[i] += (dt * self.u[i] + dw[i]) / m;
                }
                self.kick_closing(0.5 * dt, friction)?;
                for i in 0..self.dims {
                    self.acc[i] += 0.5 * dt * (self.grad_prev[i] + self.grad[i]);
                }
            }
            Scheme::EulerMaruyama => {
                self.potential.grad_and_hvp(
                    &self.x,
                    &self.u,
                    &mut self.grad,
                    &mut self.hvp,
                    &mut self.scratch,
                )?;
                for i in 0..self.dims {
                    self.x[i] += (dt * self.u[i] + dw[i]) / m;
                    self.u[i] -= dt * (self.grad[i] + friction * self.hvp[i]);
                    self.acc[i] += dt * self.grad[i];
                }
            }
            Scheme::DirectThirdOrder => {
                // M γ dv = (M v − (p − ∫∇V)) dt − dη
                let g = self.params.gamma();
                self.potential.gradient_into(&self.x, &mut self.grad)?;
                let mut max_acc: f64 = 0.0;
                for i in 0..self.dims {
                    let dv = (dt * (self.u[i] - self.shifted_p[i]) - dw[i]) / (m * g);
                    max_acc = max_acc.max((dv / dt).abs());
                    self.x[i] += dt * self.u[i] / m;
                    self.u[i] += m * dv;
                    self.shifted_p[i] -= dt * self.grad[i];
                    self.acc[i] += dt * self.grad[i];
                }
                if !(max_acc <= self.spec.runaway_threshold) {
                    return Err(Error::Runaway {
                        step: k + 1,
                        time: self.time(k + 1),
                        acceleration: max_acc,
                        threshold: self.spec.runaway_threshold,
                    });
                }
            }
        }
        if self.x.iter().chain(&self.u).any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                step: k + 1,
                time: self.time(k + 1),
                message: "non-finite state (overflow or runaway)".into(),
            });
        }
        Ok(())
    }
}

/// Integrates one trajectory from `initial` driven by `noise`.
///
/// The noise grid must match `spec` exactly. The returned trajectory has
/// `n_steps + 1` states and carries the running `∫ ∇V dt'` (trapezoidal
/// for the split scheme, left-point otherwise).
pub fn integrate(
    params: &PhysicalParams,
    potential: &Potential,
    initial: &PhaseState,
    noise: &NoisePath,
    spec: &IntegratorSpec,
) -> Result<Trajectory> {
    let dims = initial.dims();
    noise.check_grid(spec.dt, spec.n_steps, dims)?;
    let mut stepper = Stepper::new(params, potential, *spec, noise.t0, dims)?;
    stepper.reset(initial)?;
    let mut states = Vec::with_capacity(spec.n_steps + 1);
    let mut acc = Vec::with_capacity(spec.n_steps + 1);
    states.push(stepper.state());
    acc.push(stepper.acc.clone());
    for k in 0..spec.n_steps {
        stepper.step(k, noise.step(k))?;
        states.push(stepper.state());
        acc.push(stepper.acc.clone());
    }
    Ok(Trajectory {
        t0: noise.t0,
        dt: spec.dt,
        states,
        accumulated_grad_v: Some(acc),
    })
}
