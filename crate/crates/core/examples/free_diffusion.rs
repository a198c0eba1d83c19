//! Brownian spreading of a free particle: `Var x` grows as `w t / M²`.

use thermal_langevin::analytic::free_width;
use thermal_langevin::langevin::{run_ensemble, EnsembleSpec, IntegratorSpec, PointSampler};
use thermal_langevin::noise::NoiseModel;
use thermal_langevin::{PhaseState, PhysicalParams, Potential};

fn main() -> thermal_langevin::Result<()> {
    let params = PhysicalParams::from_noise_strength(1.0, 0.1, 1.0, 1.0, 1.0)?;
    let spec = IntegratorSpec::split(1e-3, 3000)?;
    let ens = EnsembleSpec::new(5000, 11).with_record_every(500);
    let sampler = PointSampler(PhaseState::one_d(0.0, 0.0));
    let res = run_ensemble(&params, &Potential::Free, &sampler, &NoiseModel::White, &spec, &ens)?;

    println!("{:>6} {:>10} {:>10} {:>8}", "t", "var_x", "w t/M^2", "se");
    let m = &res.moments;
    for k in 0..m.len() {
        let r = m.row(k, 0);
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>8.4}",
            m.times[k],
            r.var_x,
            free_width(&params, m.times[k]),
            r.se_var_x
        );
    }
    Ok(())
}
