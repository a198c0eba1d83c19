//! Plugging in user potentials: a closure-backed double well and the same
//! well sampled into a spline table.

use std::sync::Arc;

use thermal_langevin::langevin::{run_ensemble, EnsembleSpec, IntegratorSpec, PointSampler};
use thermal_langevin::noise::NoiseModel;
use thermal_langevin::potential::CallablePotential;
use thermal_langevin::{PhaseState, PhysicalParams, Potential};

fn well(x: f64) -> f64 {
    0.25 * x.powi(4) - 0.5 * x * x
}

fn main() -> thermal_langevin::Result<()> {
    let closure = Potential::Callable(CallablePotential {
        dims: Some(1),
        value: Arc::new(|x| well(x[0])),
        gradient: Arc::new(|x, g| g[0] = x[0].powi(3) - x[0]),
        hessian: Arc::new(|x, h| h[0] = 3.0 * x[0] * x[0] - 1.0),
    });
    let grid: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
    let values = grid.iter().map(|&x| well(x)).collect();
    let table = Potential::tabulated(grid, values)?;

    let params = PhysicalParams::from_noise_strength(1.0, 0.2, 0.2, 1.0, 1.0)?;
    let spec = IntegratorSpec::split(1e-3, 5000)?;
    let ens = EnsembleSpec::new(2000, 9).with_record_every(5000);
    let start = PointSampler(PhaseState::one_d(1.0, 0.0));
    for (name, pot) in [("closure", &closure), ("table", &table)] {
        let res = run_ensemble(&params, pot, &start, &NoiseModel::White, &spec, &ens)?;
        let r = res.moments.row(res.moments.len() - 1, 0);
        println!("{name:<8} t = 5: mean x {:.4}, var x {:.4}", r.mean_x, r.var_x);
    }
    Ok(())
}
