//! Without friction and noise, transport is Liouville flow: a harmonic
//! packet rotates rigidly in phase space and its covariance determinant is
//! conserved.

use thermal_langevin::langevin::{run_ensemble, EnsembleSpec, IntegratorSpec};
use thermal_langevin::noise::NoiseModel;
use thermal_langevin::wigner::gaussian_packet;
use thermal_langevin::{PhysicalParams, Potential};

fn main() -> thermal_langevin::Result<()> {
    let params = PhysicalParams::natural(1.0, 0.0, 0.0)?;
    let packet = gaussian_packet(1.0, 0.5, 0.7, 1.0)?;
    let period = 2.0 * std::f64::consts::PI;
    let steps = 2000;
    let spec = IntegratorSpec::split(period / steps as f64, 20 * steps)?;
    let ens = EnsembleSpec::new(20_000, 2).with_record_every(5 * steps);
    let res = run_ensemble(&params, &Potential::harmonic(1.0, 1.0), &packet, &NoiseModel::White, &spec, &ens)?;
    for (k, t) in res.moments.times.iter().enumerate() {
        let r = res.moments.row(k, 0);
        let det = r.var_x * r.var_p - r.cov_xp * r.cov_xp;
        println!("periods {:>4.0}: mean ({:+.4}, {:+.4})  det {:.6}", t / period, r.mean_x, r.mean_p, det);
    }
    Ok(())
}
