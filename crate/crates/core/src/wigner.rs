//! Wigner functions transported by the noisy dynamics.
//!
//! Two estimators are provided.
//!
//! * [`evaluate_transport`] and [`evaluate_grid`] average the initial
//!   Wigner function at the transported argument,
//!   `W(x, p; t) = ⟨W₀(x(t), p − ∫ ∇V(x(t')) dt')⟩_η`, where `x(t)` starts
//!   at `x` with momentum `p`. For free motion this moves a packet centre
//!   to `x̄ − pt/M`, i.e. backwards; estimates carry the tag
//!   [`CONVENTION`].
//! * [`evolve_ensemble_forward`] samples `W₀` and pushes the samples
//!   forward, giving the physical moments.
//!
//! For the free particle the two are related by reflecting the momentum:
//! the backward estimate of `W₀` at `(x, p)` equals the forward density of
//! the packet with `k → −k` at `(x, −p)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::langevin::{
    run_ensemble, EnsembleMoments, EnsembleResult, EnsembleSpec, InitialSampler, IntegratorSpec, Stepper,
};
use crate::noise::{NoiseModel, NoiseSource};
use crate::params::PhysicalParams;
use crate::potential::Potential;
use crate::rng::StreamRng;
use crate::state::PhaseState;

/// Label of the time-direction convention of the transport estimators.
pub const CONVENTION: &str = "backward-argument";

const CHUNK: usize = 256;

/// A Wigner function that can be evaluated pointwise.
pub trait PhaseSpaceDensity: Sync {
    fn dims(&self) -> usize;
    fn value(&self, x: &[f64], p: &[f64]) -> f64;
}

/// Gaussian packet
/// `W(x,p) = (1/πħ) exp[−(p−k)²σ/ħ² − (x−x̄)²/σ]`.
///
/// `σ` is twice the position variance; the momentum variance is `ħ²/2σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerGaussian {
    pub xbar: f64,
    pub k: f64,
    pub sigma: f64,
    pub hbar: f64,
}

pub fn gaussian_packet(xbar: f64, k: f64, sigma: f64, hbar: f64) -> Result<WignerGaussian> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::validation("sigma", format!("must be > 0, got {sigma}")));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::validation("hbar", format!("must be > 0, got {hbar}")));
    }
    if !(xbar.is_finite() && k.is_finite()) {
        return Err(Error::validation("xbar", "centre must be finite"));
    }
    Ok(WignerGaussian { xbar, k, sigma, hbar })
}

impl WignerGaussian {
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let dp = p - self.k;
        let dx = x - self.xbar;
        (-(dp * dp) * self.sigma / (self.hbar * self.hbar) - dx * dx / self.sigma).exp()
            / (std::f64::consts::PI * self.hbar)
    }

    pub fn position_sd(&self) -> f64 {
        (0.5 * self.sigma).sqrt()
    }

    pub fn momentum_sd(&self) -> f64 {
        self.hbar / (2.0 * self.sigma).sqrt()
    }

    /// Same packet with `k → −k`.
    pub fn reflected(&self) -> Self {
        Self { k: -self.k, ..*self }
    }
}

impl PhaseSpaceDensity for WignerGaussian {
    fn dims(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64], p: &[f64]) -> f64 {
        self.eval(x[0], p[0])
    }
}

impl InitialSampler for WignerGaussian {
    fn dims(&self) -> usize {
        1
    }
    fn sample(&self, rng: &mut StreamRng) -> PhaseState {
        let x = self.xbar + self.position_sd() * rng.normal();
        let p = self.k + self.momentum_sd() * rng.normal();
        PhaseState::one_d(x, p)
    }
}

/// Settings shared by the transport estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSpec {
    pub integrator: IntegratorSpec,
    pub noise: NoiseModel,
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// Contiguous sample batches kept for batch-means error estimates.
    pub batches: usize,
}

impl TransportSpec {
    pub fn new(integrator: IntegratorSpec, n_samples: usize, seed: u64) -> Self {
        Self {
            integrator,
            noise: NoiseModel::White,
            n_samples,
            seed,
            workers: 1,
            batches: 1,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn time(&self) -> f64 {
        self.integrator.duration()
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples", "must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::validation("workers", "must be >= 1"));
        }
        if self.batches == 0 || self.batches > self.n_samples {
            return Err(Error::validation("batches", "must be between 1 and n_samples"));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of `W(x, p; t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerEstimate {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
    pub value: f64,
    /// Sample standard deviation over `√n_samples`.
    pub stderr: f64,
    pub n_samples: usize,
    /// Samples dropped because their trajectory failed.
    pub failures: usize,
}

/// Estimates on a rectangular `x × p` grid (1-D), x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub t: f64,
    pub seed: u64,
    /// `estimates[i * ps.len() + j]` is the query `(xs[i], ps[j])`.
    pub estimates: Vec<WignerEstimate>,
    /// `batch_means[b][q]`: mean over batch `b` for query `q`.
    pub batch_means: Vec<Vec<f64>>,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> &WignerEstimate {
        &self.estimates[i * self.ps.len() + j]
    }

    /// `Σ W Δx Δp` with trapezoid weights.
    pub fn normalization(&self) -> f64 {
        let wx = trapezoid_weights(&self.xs);
        let wp = trapezoid_weights(&self.ps);
        let mut s = 0.0;
        for (i, a) in wx.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                s += a * b * self.at(i, j).value;
            }
        }
        s
    }

    /// Profile along `x` at momentum index `j`.
    pub fn x_profile(&self, j: usize) -> Vec<f64> {
        (0..self.xs.len()).map(|i| self.at(i, j).value).collect()
    }
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Mean and width parameter `σ = 2·Var` of a sampled profile, using
/// `values` as weights.
pub fn profile_width(xs: &[f64], values: &[f64]) -> (f64, f64) {
    let total: f64 = values.iter().sum();
    let mean = xs.iter().zip(values).map(|(x, v)| x * v).sum::<f64>() / total;
    let var = xs.iter().zip(values).map(|(x, v)| (x - mean).powi(2) * v).sum::<f64>() / total;
    (mean, 2.0 * var)
}

#[derive(Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(&mut self, o: &Welford) {
        if o.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }
}

struct ChunkStats {
    /// `(batch, per-query accumulators)` in batch order.
    batches: Vec<(usize, Vec<Welford>)>,
    failures: Vec<usize>,
}

struct Transport<'a> {
    w0: &'a dyn PhaseSpaceDensity,
    params: &'a PhysicalParams,
    potential: &'a Potential,
    source: Option<NoiseSource>,
    spec: &'a TransportSpec,
    queries: &'a [PhaseState],
}

impl Transport<'_> {
    fn chunk(&self, start: usize, end: usize) -> Result<ChunkStats> {
        let dims = self.w0.dims();
        let n_steps = self.spec.integrator.n_steps;
        let nq = self.queries.len();
        let mut stepper = Stepper::new(self.params, self.potential, self.spec.integrator, 0.0, dims)?;
        let mut noise = vec![0.0; n_steps * dims];
        let mut shifted = vec![0.0; dims];
        let mut out = ChunkStats {
            batches: Vec::new(),
            failures: vec![0; nq],
        };
        for s in start..end {
            let batch = s * self.spec.batches / self.spec.n_samples;
            if out.batches.last().is_none_or(|(b, _)| *b != batch) {
                out.batches.push((batch, vec![Welford::default(); nq]));
            }
            if let Some(src) = &self.source {
                src.fill(self.spec.seed, s as u64, &mut noise);
            }
            let acc = &mut out.batches.last_mut().unwrap().1;
            for (q, query) in self.queries.iter().enumerate() {
                stepper.reset(query)?;
                let mut ok = true;
                for k in 0..n_steps {
                    if stepper.step(k, &noise[k * dims..(k + 1) * dims]).is_err() {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    out.failures[q] += 1;
                    continue;
                }
                for i in 0..dims {
                    shifted[i] = query.p[i] - stepper.acc[i];
                }
                acc[q].push(self.w0.value(&stepper.x, &shifted));
            }
        }
        Ok(out)
    }
}

/// Estimates `W` at each query, sharing every noise realization across
/// all queries.
pub fn evaluate_queries(
    w0: &dyn PhaseSpaceDensity,
    queries: &[PhaseState],
    params: &PhysicalParams,
    potential: &Potential,
    spec: &TransportSpec,
) -> Result<(Vec<WignerEstimate>, Vec<Vec<f64>>)> {
    spec.validate()?;
    let dims = w0.dims();
    potential.check_dims(dims)?;
    for q in queries {
        if q.dims() != dims {
            return Err(Error::validation("query", "dimension differs from the Wigner function"));
        }
    }
    let t = spec.time();
    let nq = queries.len();
    if spec.integrator.n_steps == 0 {
        let est = queries
            .iter()
            .map(|q| WignerEstimate {
                x: q.x.clone(),
                p: q.p.clone(),
                t,
                value: w0.value(&q.x, &q.p),
                stderr: 0.0,
                n_samples: spec.n_samples,
                failures: 0,
            })
            .collect::<Vec<_>>();
        let means = vec![est.iter().map(|e| e.value).collect(); spec.batches];
        return Ok((est, means));
    }
    let source = NoiseSource::new(&spec.noise, params, spec.integrator.n_steps, spec.integrator.dt, dims)?;
    let job = Transport {
        w0,
        params,
        potential,
        source: (!source.is_silent()).then_some(source),
        spec,
        queries,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::validation("workers", e.to_string()))?;
    let ranges: Vec<(usize, usize)> = (0..spec.n_samples)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(spec.n_samples)))
        .collect();
    let chunks: Vec<Result<ChunkStats>> =
        pool.install(|| ranges.par_iter().map(|&(s, e)| job.chunk(s, e)).collect());

    let mut per_batch = vec![vec![Welford::default(); nq]; spec.batches];
    let mut failures = vec![0usize; nq];
    for chunk in chunks {
        let chunk = chunk?;
        for (b, acc) in chunk.batches {
            for (t, a) in per_batch[b].iter_mut().zip(&acc) {
                t.merge(a);
            }
        }
        for (f, c) in failures.iter_mut().zip(&chunk.failures) {
            *f += c;
        }
    }
    let mut total = vec![Welford::default(); nq];
    for batch in &per_batch {
        for (t, a) in total.iter_mut().zip(batch) {
            t.merge(a);
        }
    }
    let mut estimates = Vec::with_capacity(nq);
    for (q, acc) in total.iter().enumerate() {
        if acc.n == 0.0 {
            return Err(Error::Integration {
                step: 0,
                time: t,
                message: format!("all {} samples failed for query {q}", spec.n_samples),
            });
        }
        let var = if acc.n > 1.0 { acc.m2 / (acc.n - 1.0) } else { 0.0 };
        estimates.push(WignerEstimate {
            x: queries[q].x.clone(),
            p: queries[q].p.clone(),
            t,
            value: acc.mean,
            stderr: (var / acc.n).sqrt(),
            n_samples: acc.n as usize,
            failures: failures[q],
        });
    }
    let batch_means = per_batch
        .iter()
        .map(|b| b.iter().map(|w| w.mean).collect())
        .collect();
    Ok((estimates, batch_means))
}

/// Single-point estimate of `W(x, p; t)`, `t = n_steps · dt`.
pub fn evaluate_transport(
    w0: &dyn PhaseSpaceDensity,
    query: &PhaseState,
    params: &PhysicalParams,
    potential: &Potential,
    spec: &TransportSpec,
) -> Result<WignerEstimate> {
    let (mut est, _) = evaluate_queries(w0, std::slice::from_ref(query), params, potential, spec)?;
    Ok(est.remove(0))
}

/// Estimates `W` on the grid `xs × ps` (one-dimensional systems).
pub fn evaluate_grid(
    w0: &dyn PhaseSpaceDensity,
    xs: &[f64],
    ps: &[f64],
    params: &PhysicalParams,
    potential: &Potential,
    spec: &TransportSpec,
) -> Result<WignerGrid> {
    if w0.dims() != 1 {
        return Err(Error::validation("dims", "grid evaluation is one-dimensional"));
    }
    if xs.is_empty() || ps.is_empty() {
        return Err(Error::validation("grid", "empty axis"));
    }
    let queries: Vec<PhaseState> = xs
        .iter()
        .flat_map(|&x| ps.iter().map(move |&p| PhaseState::one_d(x, p)))
        .collect();
    let (estimates, batch_means) = evaluate_queries(w0, &queries, params, potential, spec)?;
    Ok(WignerGrid {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        t: spec.time(),
        seed: spec.seed,
        estimates,
        batch_means,
    })
}

/// Samples `W₀` and evolves the samples forward under the noisy dynamics.
pub fn evolve_ensemble_forward(
    sampler: &dyn InitialSampler,
    params: &PhysicalParams,
    potential: &Potential,
    noise: &NoiseModel,
    integrator: &IntegratorSpec,
    ensemble: &EnsembleSpec,
) -> Result<EnsembleResult> {
    run_ensemble(params, potential, sampler, noise, integrator, ensemble)
}

/// Gaussian density with the ensemble mean and covariance at record `k`
/// (first component), evaluated at `(x, p)`.
pub fn gaussian_density_from_moments(moments: &EnsembleMoments, k: usize, x: f64, p: f64) -> f64 {
    let r = moments.row(k, 0);
    let det = r.var_x * r.var_p - r.cov_xp * r.cov_xp;
    let dx = x - r.mean_x;
    let dp = p - r.mean_p;
    let q = (r.var_p * dx * dx - 2.0 * r.cov_xp * dx * dp + r.var_x * dp * dp) / det;
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

/// Ensemble momentum variance of the first component.
pub fn momentum_width(moments: &EnsembleMoments) -> Vec<f64> {
    moments.var_p(0)
}

/// Momentum spread from the printed harmonic relation
/// `Var p(t) = M²ω⁴ ∫ Var x(s) ds` (trapezoid over the recorded times),
/// together with the ratio MC / relation. Diagnostic only.
pub fn oracle_momentum_width(moments: &EnsembleMoments, mass: f64, omega: f64) -> Vec<(f64, f64, f64)> {
    let var_x = moments.var_x(0);
    let var_p = moments.var_p(0);
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(var_x.len());
    for k in 0..var_x.len() {
        if k > 0 {
            integral += 0.5 * (moments.times[k] - moments.times[k - 1]) * (var_x[k] + var_x[k - 1]);
        }
        let relation = mass * mass * omega.powi(4) * integral;
        let ratio = if relation > 0.0 { var_p[k] / relation } else { f64::NAN };
        out.push((moments.times[k], relation, ratio));
    }
    out
}

/// Period-averaged `Var p` and `M²ω²·Var x` at each time whose centred
/// window of one period `2π/ω` fits in the record: `(t, ⟨Var p⟩, M²ω²⟨Var x⟩)`.
pub fn virial_momentum_width(moments: &EnsembleMoments, mass: f64, omega: f64) -> Vec<(f64, f64, f64)> {
    let times = &moments.times;
    if times.len() < 3 {
        return Vec::new();
    }
    let dt = times[1] - times[0];
    let half = ((std::f64::consts::PI / omega) / dt).round() as usize;
    let var_x = moments.var_x(0);
    let var_p = moments.var_p(0);
    let window_mean = |v: &[f64], k: usize| {
        let s = &v[k - half..=k + half];
        // trapezoid over the window
        let inner: f64 = s[1..s.len() - 1].iter().sum();
        (inner + 0.5 * (s[0] + s[s.len() - 1])) / (s.len() - 1) as f64
    };
    (half..times.len().saturating_sub(half))
        .map(|k| {
            (
                times[k],
                window_mean(&var_p, k),
                mass * mass * omega * omega * window_mean(&var_x, k),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langevin::Scheme;

    fn quiet() -> PhysicalParams {
        PhysicalParams::natural(1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn packet_shape() {
        let w = gaussian_packet(0.5, -1.0, 0.7, 1.3).unwrap();
        assert!((w.eval(0.5, -1.0) - 1.0 / (std::f64::consts::PI * 1.3)).abs() < 1e-15);
        assert_eq!(w.eval(0.5 + 0.4, 0.2), w.eval(0.5 - 0.4, 0.2));
        assert!(gaussian_packet(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(gaussian_packet(0.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn packet_normalized() {
        let w = gaussian_packet(0.2, 0.3, 0.8, 1.0).unwrap();
        let (sx, sp) = (w.position_sd(), w.momentum_sd());
        let n = 601;
        let xs: Vec<f64> = (0..n).map(|i| w.xbar - 6.0 * sx + 12.0 * sx * i as f64 / (n - 1) as f64).collect();
        let ps: Vec<f64> = (0..n).map(|i| w.k - 6.0 * sp + 12.0 * sp * i as f64 / (n - 1) as f64).collect();
        let (wx, wp) = (trapezoid_weights(&xs), trapezoid_weights(&ps));
        let mut s = 0.0;
        for (i, x) in xs.iter().enumerate() {
            for (j, p) in ps.iter().enumerate() {
                s += wx[i] * wp[j] * w.eval(*x, *p);
            }
        }
        assert!((s - 1.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn zero_time_is_initial_value() {
        let w = gaussian_packet(0.0, 0.0, 1.0, 1.0).unwrap();
        let spec = TransportSpec::new(IntegratorSpec::split(0.1, 0).unwrap(), 10, 1);
        let q = PhaseState::one_d(0.3, -0.2);
        let e = evaluate_transport(&w, &q, &quiet(), &Potential::Free, &spec).unwrap();
        assert_eq!(e.value, w.eval(0.3, -0.2));
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn free_deterministic_shift() {
        let w = gaussian_packet(0.0, 0.5, 1.0, 1.0).unwrap();
        let spec = TransportSpec::new(IntegratorSpec::split(0.05, 40).unwrap(), 3, 1);
        for (x, p) in [(0.1, 0.5), (-0.7, 1.2)] {
            let e = evaluate_transport(&w, &PhaseState::one_d(x, p), &quiet(), &Potential::Free, &spec).unwrap();
            assert!((e.value - w.eval(x + 2.0 * p, p)).abs() < 1e-14);
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn grid_workers_agree() {
        let w = gaussian_packet(0.0, 0.0, 1.0, 1.0).unwrap();
        let params = PhysicalParams::from_noise_strength(1.0, 0.1, 0.5, 1.0, 1.0).unwrap();
        let integ = IntegratorSpec::new(Scheme::SplitStep, 0.1, 10).unwrap();
        let run = |workers| {
            let spec = TransportSpec::new(integ, 700, 3).with_workers(workers).with_batches(4);
            evaluate_grid(&w, &[-1.0, 0.0, 1.0], &[-0.5, 0.5], &params, &Potential::harmonic(1.0, 1.0), &spec)
                .unwrap()
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a.batch_means.len(), 4);
    }

    #[test]
    fn profile_width_of_gaussian() {
        let xs: Vec<f64> = (0..401).map(|i| -10.0 + 0.05 * i as f64).collect();
        let v: Vec<f64> = xs.iter().map(|x| (-(x - 1.0) * (x - 1.0) / 3.0).exp()).collect();
        let (m, s) = profile_width(&xs, &v);
        assert!((m - 1.0).abs() < 1e-10 && (s - 3.0).abs() < 1e-8);
    }
}
