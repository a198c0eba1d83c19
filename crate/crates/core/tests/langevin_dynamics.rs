//! Integrator and ensemble properties beyond single-module unit tests.

use proptest::prelude::*;
use thermal_langevin::langevin::{
    integrate, run_ensemble, EnsembleSpec, IntegratorSpec, PointSampler, Scheme,
};
use thermal_langevin::noise::{NoiseModel, NoisePath, SpectrumMode};
use thermal_langevin::{PhaseState, PhysicalParams, Potential};

/// One-step map `z → A z + b Δη` of a scheme on a linear force, read off
/// the integrator itself by probing with basis states and a unit kick.
fn one_step_map(params: &PhysicalParams, pot: &Potential, scheme: Scheme, dt: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let spec = IntegratorSpec::new(scheme, dt, 1).unwrap();
    let quiet = NoisePath::zeros(0.0, dt, 1, 1);
    let col = |x: f64, p: f64| {
        let s = integrate(params, pot, &PhaseState::one_d(x, p), &quiet, &spec).unwrap();
        [s.last().x[0], s.last().p[0]]
    };
    let (c0, c1) = (col(1.0, 0.0), col(0.0, 1.0));
    let mut kick = NoisePath::zeros(0.0, dt, 1, 1);
    kick.increments[0] = 1.0;
    let b = integrate(params, pot, &PhaseState::one_d(0.0, 0.0), &kick, &spec).unwrap();
    ([[c0[0], c1[0]], [c0[1], c1[1]]], [b.last().x[0], b.last().p[0]])
}

/// Exact `Var x(T)` of the discrete scheme from covariance propagation.
fn discrete_var_x(params: &PhysicalParams, pot: &Potential, scheme: Scheme, dt: f64, t: f64) -> f64 {
    let (a, b) = one_step_map(params, pot, scheme, dt);
    let q = params.noise_strength() * dt;
    let mut c = [[0.0; 2]; 2];
    for _ in 0..(t / dt).round() as usize {
        let mut ac = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ac[i][j] = a[i][0] * c[0][j] + a[i][1] * c[1][j];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = ac[i][0] * a[j][0] + ac[i][1] * a[j][1] + q * b[i] * b[j];
            }
        }
    }
    c[0][0]
}

#[test]
fn weak_second_moment_converges_at_scheme_order() {
    let params = PhysicalParams::from_noise_strength(1.0, 0.05, 0.3, 1.0, 1.0).unwrap();
    let pot = Potential::harmonic(1.0, 1.0);
    let t = 4.0;
    for (scheme, order) in [(Scheme::SplitStep, 2.0), (Scheme::EulerMaruyama, 1.0)] {
        let v: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| discrete_var_x(&params, &pot, scheme, dt, t))
            .collect();
        let observed = ((v[0] - v[1]) / (v[1] - v[2])).abs().log2();
        assert!((observed - order).abs() < 0.25, "{scheme:?}: order {observed}");
    }
}

#[test]
fn harmonic_momentum_width_follows_virial_relation() {
    let omega = 1.0;
    let mass = 1.0;
    let params = PhysicalParams::from_noise_strength(mass, 0.01, 0.1, 1.0, 1.0).unwrap();
    let pot = Potential::harmonic(mass, omega);
    let dt = 1e-2;
    let spec = IntegratorSpec::split(dt, 2000).unwrap();
    let ens = EnsembleSpec::new(4000, 17).with_record_every(5);
    let sampler = PointSampler(PhaseState::one_d(0.0, 0.0));
    let res = run_ensemble(&params, &pot, &sampler, &NoiseModel::White, &spec, &ens).unwrap();
    let rows =
        thermal_langevin::wigner::virial_momentum_width(&res.moments, mass, omega);
    let late: Vec<_> = rows.iter().filter(|r| r.0 >= 5.0 / omega).collect();
    assert!(!late.is_empty());
    for (t, var_p, relation) in late {
        assert!((var_p / relation - 1.0).abs() < 0.1, "t={t}: {var_p} vs {relation}");
    }
}

#[test]
fn colored_ensembles_are_worker_invariant() {
    let params = PhysicalParams::new(1.0, 0.2, 0.7, 1.0, 1.0).unwrap();
    let pot = Potential::quartic(1.0, 0.5);
    let noise = NoiseModel::Spectral {
        mode: SpectrumMode::Truncated(1),
        cutoff: None,
    };
    let spec = IntegratorSpec::split(0.01, 300).unwrap();
    let sampler = PointSampler(PhaseState::one_d(0.5, 0.0));
    let run = |w| {
        let ens = EnsembleSpec::new(300, 4).with_workers(w).with_record_every(30);
        run_ensemble(&params, &pot, &sampler, &noise, &spec, &ens).unwrap().moments
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(16));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn silent_ensemble_reproduces_single_trajectory(
        x in -2.0f64..2.0, p in -2.0f64..2.0, gamma in 0.0f64..0.5, n in 2usize..50,
    ) {
        let params = PhysicalParams::natural(1.0, gamma, 0.0).unwrap();
        let pot = Potential::quartic(1.0, 0.3);
        let spec = IntegratorSpec::split(0.01, 200).unwrap();
        let start = PhaseState::one_d(x, p);
        let traj = integrate(&params, &pot, &start, &NoisePath::zeros(0.0, 0.01, 200, 1), &spec).unwrap();
        let ens = EnsembleSpec::new(n, 1).with_record_every(200);
        let res = run_ensemble(&params, &pot, &PointSampler(start), &NoiseModel::White, &spec, &ens).unwrap();
        let last = res.moments.row(res.moments.len() - 1, 0);
        prop_assert_eq!(last.mean_x, traj.last().x[0]);
        prop_assert_eq!(last.mean_p, traj.last().p[0]);
        prop_assert_eq!(last.var_x, 0.0);
        prop_assert_eq!(res.moments.n_samples, n);
    }

    #[test]
    fn variances_are_nonnegative_and_covariance_bounded(seed in 0u64..1000, w in 0.01f64..2.0) {
        let params = PhysicalParams::from_noise_strength(1.0, 0.3, w, 1.0, 1.0).unwrap();
        let spec = IntegratorSpec::split(0.02, 100).unwrap();
        let ens = EnsembleSpec::new(64, seed).with_record_every(10);
        let sampler = PointSampler(PhaseState::one_d(0.0, 0.0));
        let res = run_ensemble(&params, &Potential::harmonic(1.0, 1.0), &sampler, &NoiseModel::White, &spec, &ens).unwrap();
        for k in 0..res.moments.len() {
            let r = res.moments.row(k, 0);
            prop_assert!(r.var_x >= 0.0 && r.var_p >= 0.0);
            prop_assert!(r.cov_xp * r.cov_xp <= r.var_x * r.var_p * (1.0 + 1e-9) + 1e-300);
        }
    }
}
