//! Parallel ensembles with a reduction that does not depend on scheduling.
//!
//! Trajectory `j` always draws its noise from stream `j` of the base seed
//! and its initial condition from a disjoint stream, so the set of
//! trajectories is fixed by the seed alone. Trajectories are grouped into
//! fixed chunks; each chunk is reduced sequentially and the chunk results
//! are merged in index order. The arithmetic is the same for any number
//! of workers, which makes the output bit-identical.

use rayon::prelude::*;

use super::{IntegratorSpec, Stepper};
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseSource};
use crate::params::PhysicalParams;
use crate::potential::Potential;
use crate::rng::{StreamRng, SAMPLER_STREAM_BIT};
use crate::state::{PhaseState, Trajectory};

const CHUNK: usize = 64;
const WAVE: usize = 32;

/// Draws initial phase-space points for ensemble members.
pub trait InitialSampler: Sync {
    fn dims(&self) -> usize;
    fn sample(&self, rng: &mut StreamRng) -> PhaseState;
    /// True when every draw returns the same point.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Every member starts at the same point.
#[derive(Debug, Clone)]
pub struct PointSampler(pub PhaseState);

impl InitialSampler for PointSampler {
    fn dims(&self) -> usize {
        self.0.dims()
    }
    fn sample(&self, _rng: &mut StreamRng) -> PhaseState {
        self.0.clone()
    }
    fn is_deterministic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    #[default]
    FailFast,
    /// Drop failed members from the statistics and list them.
    SkipAndReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    pub base_seed: u64,
    pub workers: usize,
    /// Record moments every `record_every` steps (the last step is always kept).
    pub record_every: usize,
    /// Keep full trajectories of the first `retain` members.
    pub retain: usize,
    pub failure: FailurePolicy,
}

impl EnsembleSpec {
    pub fn new(n_traj: usize, base_seed: u64) -> Self {
        Self {
            n_traj,
            base_seed,
            workers: 1,
            record_every: 1,
            retain: 0,
            failure: FailurePolicy::FailFast,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_retain(mut self, retain: usize) -> Self {
        self.retain = retain;
        self
    }

    pub fn with_failure(mut self, failure: FailurePolicy) -> Self {
        self.failure = failure;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::validation("n_traj", "must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::validation("workers", "must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(Error::validation("record_every", "must be >= 1"));
        }
        Ok(())
    }
}

/// Moments of one component at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentRow {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    pub se_mean_x: f64,
    pub se_mean_p: f64,
    pub se_var_x: f64,
    pub se_var_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFailure {
    pub index: usize,
    pub message: String,
}

/// Per-time, per-component moments across the ensemble.
///
/// Variances use the `n - 1` denominator; with a single sample they are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMoments {
    pub dims: usize,
    pub times: Vec<f64>,
    /// Steps at which the rows were recorded.
    pub steps: Vec<usize>,
    /// `rows[k * dims + i]`.
    pub rows: Vec<MomentRow>,
    pub n_samples: usize,
}

impl EnsembleMoments {
    pub fn row(&self, k: usize, i: usize) -> &MomentRow {
        &self.rows[k * self.dims + i]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn series(&self, i: usize, f: impl Fn(&MomentRow) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.row(k, i))).collect()
    }

    pub fn mean_x(&self, i: usize) -> Vec<f64> {
        self.series(i, |r| r.mean_x)
    }

    pub fn mean_p(&self, i: usize) -> Vec<f64> {
        self.series(i, |r| r.mean_p)
    }

    pub fn var_x(&self, i: usize) -> Vec<f64> {
        self.series(i, |r| r.var_x)
    }

    pub fn var_p(&self, i: usize) -> Vec<f64> {
        self.series(i, |r| r.var_p)
    }

    pub fn se_var_x(&self, i: usize) -> Vec<f64> {
        self.series(i, |r| r.se_var_x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub moments: EnsembleMoments,
    pub trajectories: Vec<Trajectory>,
    pub failures: Vec<TrajectoryFailure>,
}

/// Streaming central moments (Welford/Pébay) for one `(x, p)` pair.
#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    n: f64,
    mx: f64,
    mp: f64,
    m2x: f64,
    m2p: f64,
    cxp: f64,
    m3x: f64,
    m4x: f64,
    m3p: f64,
    m4p: f64,
}

fn push_moments(n: f64, delta: f64, mean: &mut f64, m2: &mut f64, m3: &mut f64, m4: &mut f64) {
    let dn = delta / n;
    let dn2 = dn * dn;
    let t1 = delta * dn * (n - 1.0);
    *mean += dn;
    *m4 += t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * *m2 - 4.0 * dn * *m3;
    *m3 += t1 * dn * (n - 2.0) - 3.0 * dn * *m2;
    *m2 += t1;
}

#[allow(clippy::too_many_arguments)]
fn merge_moments(
    na: f64,
    nb: f64,
    mean: &mut f64,
    m2: &mut f64,
    m3: &mut f64,
    m4: &mut f64,
    b_mean: f64,
    b_m2: f64,
    b_m3: f64,
    b_m4: f64,
) {
    let n = na + nb;
    let d = b_mean - *mean;
    let d2 = d * d;
    let m4n = *m4
        + b_m4
        + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
        + 6.0 * d2 * (na * na * b_m2 + nb * nb * *m2) / (n * n)
        + 4.0 * d * (na * b_m3 - nb * *m3) / n;
    let m3n = *m3
        + b_m3
        + d2 * d * na * nb * (na - nb) / (n * n)
        + 3.0 * d * (na * b_m2 - nb * *m2) / n;
    *m2 += b_m2 + d2 * na * nb / n;
    *mean += d * nb / n;
    *m3 = m3n;
    *m4 = m4n;
}

impl Accum {
    fn push(&mut self, x: f64, p: f64) {
        self.n += 1.0;
        let n = self.n;
        let dx = x - self.mx;
        let dp = p - self.mp;
        // co-moment uses the pre-update x deviation and post-update p mean
        push_moments(n, dx, &mut self.mx, &mut self.m2x, &mut self.m3x, &mut self.m4x);
        push_moments(n, dp, &mut self.mp, &mut self.m2p, &mut self.m3p, &mut self.m4p);
        self.cxp += dx * (p - self.mp);
    }

    fn merge(&mut self, o: &Accum) {
        if o.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.n, o.n);
        let n = na + nb;
        let dx = o.mx - self.mx;
        let dp = o.mp - self.mp;
        self.cxp += o.cxp + dx * dp * na * nb / n;
        merge_moments(na, nb, &mut self.mx, &mut self.m2x, &mut self.m3x, &mut self.m4x, o.mx, o.m2x, o.m3x, o.m4x);
        merge_moments(na, nb, &mut self.mp, &mut self.m2p, &mut self.m3p, &mut self.m4p, o.mp, o.m2p, o.m3p, o.m4p);
        self.n = n;
    }

    fn row(&self) -> MomentRow {
        let n = self.n;
        if n < 2.0 {
            return MomentRow {
                mean_x: self.mx,
                mean_p: self.mp,
                ..Default::default()
            };
        }
        let var_x = self.m2x / (n - 1.0);
        let var_p = self.m2p / (n - 1.0);
        // sd of the sample variance from the fourth central moment
        let se_var = |m2: f64, m4: f64| {
            let (c2, c4) = (m2 / n, m4 / n);
            ((c4 - c2 * c2).max(0.0) / n).sqrt()
        };
        MomentRow {
            mean_x: self.mx,
            mean_p: self.mp,
            var_x,
            var_p,
            cov_xp: self.cxp / (n - 1.0),
            se_mean_x: (var_x / n).sqrt(),
            se_mean_p: (var_p / n).sqrt(),
            se_var_x: se_var(self.m2x, self.m4x),
            se_var_p: se_var(self.m2p, self.m4p),
        }
    }
}

struct ChunkOutput {
    acc: Vec<Accum>,
    retained: Vec<(usize, Trajectory)>,
    failures: Vec<(usize, Error)>,
}

struct Plan {
    steps: Vec<usize>,
}

impl Plan {
    fn new(n_steps: usize, every: usize) -> Self {
        let mut steps: Vec<usize> = (0..=n_steps).step_by(every).collect();
        if *steps.last().unwrap() != n_steps {
            steps.push(n_steps);
        }
        Self { steps }
    }
}

struct Job<'a> {
    params: &'a PhysicalParams,
    potential: &'a Potential,
    sampler: &'a dyn InitialSampler,
    noise: &'a NoiseSource,
    spec: IntegratorSpec,
    plan: &'a Plan,
    ens: &'a EnsembleSpec,
    dims: usize,
}

impl Job<'_> {
    fn run_chunk(&self, start: usize, end: usize) -> ChunkOutput {
        let dims = self.dims;
        let n_rec = self.plan.steps.len();
        let mut acc = vec![Accum::default(); n_rec * dims];
        let mut retained = Vec::new();
        let mut failures = Vec::new();
        let mut noise_buf = vec![0.0; self.spec.n_steps * dims];
        let mut rec = vec![0.0; n_rec * dims * 2];
        let mut stepper = match Stepper::new(self.params, self.potential, self.spec, 0.0, dims) {
            Ok(s) => s,
            Err(e) => {
                failures.push((start, e));
                return ChunkOutput { acc, retained, failures };
            }
        };
        for j in start..end {
            let keep = j < self.ens.retain;
            match self.run_one(j, &mut stepper, &mut noise_buf, &mut rec, keep) {
                Ok(traj) => {
                    for r in 0..n_rec {
                        for i in 0..dims {
                            let o = (r * dims + i) * 2;
                            acc[r * dims + i].push(rec[o], rec[o + 1]);
                        }
                    }
                    if let Some(t) = traj {
                        retained.push((j, t));
                    }
                }
                Err(e) => {
                    failures.push((j, e));
                    if self.ens.failure == FailurePolicy::FailFast {
                        break;
                    }
                }
            }
        }
        ChunkOutput { acc, retained, failures }
    }

    fn run_one(
        &self,
        j: usize,
        stepper: &mut Stepper,
        noise_buf: &mut [f64],
        rec: &mut [f64],
        keep: bool,
    ) -> Result<Option<Trajectory>> {
        let dims = self.dims;
        let seed = self.ens.base_seed;
        let mut rng = StreamRng::new(seed, SAMPLER_STREAM_BIT | j as u64);
        let initial = self.sampler.sample(&mut rng);
        self.noise.fill(seed, j as u64, noise_buf);
        stepper.reset(&initial)?;
        let mut states = Vec::new();
        let mut grads = Vec::new();
        if keep {
            states.reserve(self.spec.n_steps + 1);
            states.push(stepper.state());
            grads.push(stepper.acc.clone());
        }
        let mut next_rec = 0;
        let mut store = |k: usize, st: &Stepper, next_rec: &mut usize| {
            if *next_rec < self.plan.steps.len() && self.plan.steps[*next_rec] == k {
                for i in 0..dims {
                    let o = (*next_rec * dims + i) * 2;
                    rec[o] = st.x[i];
                    rec[o + 1] = st.u[i];
                }
                *next_rec += 1;
            }
        };
        store(0, stepper, &mut next_rec);
        for k in 0..self.spec.n_steps {
            stepper.step(k, &noise_buf[k * dims..(k + 1) * dims])?;
            store(k + 1, stepper, &mut next_rec);
            if keep {
                states.push(stepper.state());
                grads.push(stepper.acc.clone());
            }
        }
        Ok(keep.then(|| Trajectory {
            t0: 0.0,
            dt: self.spec.dt,
            states,
            accumulated_grad_v: Some(grads),
        }))
    }
}

/// Runs `ens.n_traj` independent trajectories and reduces their moments.
///
/// Trajectory `j` uses noise stream `j` of `ens.base_seed`. Results are
/// identical for any `ens.workers`.
pub fn run_ensemble(
    params: &PhysicalParams,
    potential: &Potential,
    sampler: &dyn InitialSampler,
    noise: &NoiseModel,
    spec: &IntegratorSpec,
    ens: &EnsembleSpec,
) -> Result<EnsembleResult> {
    ens.validate()?;
    let dims = sampler.dims();
    potential.check_dims(dims)?;
    let source = NoiseSource::new(noise, params, spec.n_steps.max(1), spec.dt, dims)?;
    let plan = Plan::new(spec.n_steps, ens.record_every);
    let job = Job {
        params,
        potential,
        sampler,
        noise: &source,
        spec: *spec,
        plan: &plan,
        ens,
        dims,
    };

    // Without noise or spread in the initial data every member is identical.
    let n_run = if source.is_silent() && sampler.is_deterministic() {
        1
    } else {
        ens.n_traj
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ens.workers)
        .build()
        .map_err(|e| Error::validation("workers", e.to_string()))?;

    let chunks: Vec<(usize, usize)> = (0..n_run)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(n_run)))
        .collect();
    let n_rec = plan.steps.len();
    let mut total = vec![Accum::default(); n_rec * dims];
    let mut retained = Vec::new();
    let mut failures: Vec<TrajectoryFailure> = Vec::new();

    for wave in chunks.chunks(WAVE) {
        let outputs: Vec<ChunkOutput> =
            pool.install(|| wave.par_iter().map(|&(s, e)| job.run_chunk(s, e)).collect());
        for out in outputs {
            for (t, a) in total.iter_mut().zip(&out.acc) {
                t.merge(a);
            }
            retained.extend(out.retained);
            for (index, err) in out.failures {
                if ens.failure == FailurePolicy::FailFast {
                    return Err(Error::Trajectory {
                        index,
                        source: Box::new(err),
                    });
                }
                failures.push(TrajectoryFailure {
                    index,
                    message: err.to_string(),
                });
            }
        }
    }

    if n_run == 1 && ens.n_traj > 1 && failures.is_empty() {
        // replicate the single deterministic member
        for a in total.iter_mut() {
            a.n = ens.n_traj as f64;
        }
        if let Some((_, t)) = retained.first().cloned() {
            retained.extend((1..ens.retain.min(ens.n_traj)).map(|j| (j, t.clone())));
        }
    }

    let n_samples = total.first().map_or(0, |a| a.n as usize);
    if n_samples == 0 {
        return Err(Error::Integration {
            step: 0,
            time: 0.0,
            message: format!("all {} trajectories failed", ens.n_traj),
        });
    }
    retained.sort_by_key(|(j, _)| *j);
    let moments = EnsembleMoments {
        dims,
        times: plan.steps.iter().map(|&k| k as f64 * spec.dt).collect(),
        steps: plan.steps.clone(),
        rows: total.iter().map(Accum::row).collect(),
        n_samples,
    };
    Ok(EnsembleResult {
        moments,
        trajectories: retained.into_iter().map(|(_, t)| t).collect(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(xs: &[(f64, f64)]) -> (f64, f64, f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mx = xs.iter().map(|v| v.0).sum::<f64>() / n;
        let mp = xs.iter().map(|v| v.1).sum::<f64>() / n;
        let vx = xs.iter().map(|v| (v.0 - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let vp = xs.iter().map(|v| (v.1 - mp).powi(2)).sum::<f64>() / (n - 1.0);
        let c = xs.iter().map(|v| (v.0 - mx) * (v.1 - mp)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|v| (v.0 - mx).powi(4)).sum::<f64>() / n;
        (mx, mp, vx, vp, c, m4)
    }

    proptest! {
        #[test]
        fn streaming_and_merged_moments_agree(
            xs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60),
            split in 1usize..59,
        ) {
            let split = split.min(xs.len() - 1);
            let mut whole = Accum::default();
            xs.iter().for_each(|v| whole.push(v.0, v.1));
            let mut a = Accum::default();
            let mut b = Accum::default();
            xs[..split].iter().for_each(|v| a.push(v.0, v.1));
            xs[split..].iter().for_each(|v| b.push(v.0, v.1));
            a.merge(&b);
            let (mx, mp, vx, vp, c, m4) = naive(&xs);
            for acc in [whole, a] {
                let r = acc.row();
                let tol = 1e-9;
                prop_assert!((r.mean_x - mx).abs() < tol);
                prop_assert!((r.mean_p - mp).abs() < tol);
                prop_assert!((r.var_x - vx).abs() < tol * (1.0 + vx));
                prop_assert!((r.var_p - vp).abs() < tol * (1.0 + vp));
                prop_assert!((r.cov_xp - c).abs() < tol * (1.0 + vx + vp));
                prop_assert!((acc.m4x / acc.n - m4).abs() < 1e-7 * (1.0 + m4));
            }
        }
    }

    #[test]
    fn single_member_has_zero_variance() {
        let params = PhysicalParams::from_noise_strength(1.0, 0.1, 1.0, 1.0, 1.0).unwrap();
        let spec = IntegratorSpec::split(0.01, 100).unwrap();
        let res = run_ensemble(
            &params,
            &Potential::harmonic(1.0, 1.0),
            &PointSampler(PhaseState::one_d(1.0, 0.0)),
            &NoiseModel::White,
            &spec,
            &EnsembleSpec::new(1, 5).with_retain(1),
        )
        .unwrap();
        let t = &res.trajectories[0];
        for (k, &step) in res.moments.steps.iter().enumerate() {
            let r = res.moments.row(k, 0);
            assert_eq!(r.var_x, 0.0);
            assert_eq!(r.var_p, 0.0);
            assert_eq!(r.mean_x, t.states[step].x[0]);
            assert_eq!(r.mean_p, t.states[step].p[0]);
        }
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let params = PhysicalParams::from_noise_strength(1.0, 0.1, 0.5, 1.0, 1.0).unwrap();
        let spec = IntegratorSpec::split(0.01, 200).unwrap();
        let run = |w| {
            run_ensemble(
                &params,
                &Potential::quartic(1.0, 0.2),
                &PointSampler(PhaseState::one_d(0.5, 0.0)),
                &NoiseModel::White,
                &spec,
                &EnsembleSpec::new(300, 42).with_workers(w).with_record_every(20),
            )
            .unwrap()
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a, run(16));
    }

    #[test]
    fn record_grid_keeps_last_step() {
        let p = Plan::new(10, 4);
        assert_eq!(p.steps, vec![0, 4, 8, 10]);
    }

    struct SpreadSampler;

    impl InitialSampler for SpreadSampler {
        fn dims(&self) -> usize {
            1
        }
        fn sample(&self, rng: &mut StreamRng) -> PhaseState {
            PhaseState::one_d(2.0 * rng.uniform(), 0.0)
        }
    }

    #[test]
    fn failures_follow_policy() {
        // members starting beyond the barrier at |x| = 1 escape and overflow
        let params = PhysicalParams::natural(1.0, 0.0, 0.0).unwrap();
        let spec = IntegratorSpec::split(0.05, 4000).unwrap();
        let pot = Potential::quartic(1.0, -1.0);
        let run = |policy| {
            run_ensemble(
                &params,
                &pot,
                &SpreadSampler,
                &NoiseModel::White,
                &spec,
                &EnsembleSpec::new(100, 1).with_failure(policy).with_record_every(100),
            )
        };
        assert!(matches!(run(FailurePolicy::FailFast), Err(Error::Trajectory { .. })));
        let res = run(FailurePolicy::SkipAndReport).unwrap();
        assert!(!res.failures.is_empty());
        assert_eq!(res.moments.n_samples + res.failures.len(), 100);
        assert!(res.moments.var_x(0).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn all_failed_is_an_error() {
        let params = PhysicalParams::natural(1.0, 0.0, 0.0).unwrap();
        let spec = IntegratorSpec::split(0.1, 5000).unwrap();
        let r = run_ensemble(
            &params,
            &Potential::quartic(-1.0, -1.0),
            &PointSampler(PhaseState::one_d(1.0, 0.0)),
            &NoiseModel::White,
            &spec,
            &EnsembleSpec::new(4, 1).with_failure(FailurePolicy::SkipAndReport),
        );
        assert!(r.is_err());
    }

    #[test]
    fn rejects_empty_ensemble() {
        let params = PhysicalParams::natural(1.0, 0.0, 0.0).unwrap();
        let spec = IntegratorSpec::split(0.1, 5).unwrap();
        let r = run_ensemble(
            &params,
            &Potential::Free,
            &PointSampler(PhaseState::one_d(0.0, 0.0)),
            &NoiseModel::White,
            &spec,
            &EnsembleSpec::new(0, 1),
        );
        assert!(matches!(r, Err(Error::Validation { .. })));
    }
}
