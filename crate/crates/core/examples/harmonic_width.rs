//! Damped oscillator in a white bath: Monte Carlo `Var x(t)` against the
//! closed-form width, plus the dimensionless curves `f_γ(ωt)`.

use thermal_langevin::analytic::{harmonic_width, width_curve};
use thermal_langevin::langevin::{run_ensemble, EnsembleSpec, IntegratorSpec, PointSampler};
use thermal_langevin::noise::NoiseModel;
use thermal_langevin::{PhaseState, PhysicalParams, Potential};

fn main() -> thermal_langevin::Result<()> {
    let omega = 1.0;
    let params = PhysicalParams::from_noise_strength(1.0, 0.01, 0.1, 1.0, 1.0)?;
    let spec = IntegratorSpec::split(1e-3, 10_000)?;
    let ens = EnsembleSpec::new(4000, 5).with_record_every(1000);
    let sampler = PointSampler(PhaseState::one_d(0.0, 0.0));
    let pot = Potential::harmonic(1.0, omega);
    let res = run_ensemble(&params, &pot, &sampler, &NoiseModel::White, &spec, &ens)?;
    let m = &res.moments;
    println!("{:>5} {:>9} {:>9}", "t", "mc", "closed");
    for k in 1..m.len() {
        let t = m.times[k];
        println!("{t:>5.1} {:>9.4} {:>9.4}", m.row(k, 0).var_x, harmonic_width(&params, omega, t));
    }

    let grid: Vec<f64> = (1..=6).map(|k| 5.0 * k as f64).collect();
    let curve = width_curve(&[0.0, 0.02, 0.05], &grid)?;
    println!();
    curve.write_csv(std::io::stdout())?;
    Ok(())
}
