//! Semiclassical composite `x = e^{−γB}(x_cl + sQ) − γ(A − B x_cl)` against
//! a direct integration driven by the same noise path.

use thermal_langevin::greenfn::{
    composite_solution, compute_b, compute_q, normalize_noise, solve_classical, GreenFunction, HomogeneousCoeffs,
    NoiseScale,
};
use thermal_langevin::langevin::{integrate, IntegratorSpec};
use thermal_langevin::noise::white_path;
use thermal_langevin::{PhaseState, PhysicalParams, Potential, TimeGrid};

fn main() -> thermal_langevin::Result<()> {
    let omega = 1.0;
    let dt = 1e-3;
    let n = (5.0 * 2.0 * std::f64::consts::PI / omega / dt) as usize;
    let scale = 0.03;
    let params = PhysicalParams::from_noise_strength(1.0, 0.01, 1e-3, 1.0, 1.0)?;
    let pot = Potential::harmonic(1.0, omega);
    let grid = TimeGrid::new(0.0, dt, n)?;

    let orbit = solve_classical(&params, &pot, 1.0, 0.0, &grid)?;
    let green = GreenFunction::from_orbit(&orbit)?;
    let diss = compute_b(&green, &orbit, HomogeneousCoeffs { c1: 0.5, c2: 0.0 })?;
    let path = white_path(&params, n, dt, 1, 7, 0)?;
    let q = compute_q(&green, &normalize_noise(&path, scale)?, params.mass())?;
    let composite = composite_solution(&orbit, &diss, Some(&q), &params, NoiseScale::Explicit(scale))?;
    let direct = integrate(&params, &pot, &PhaseState::one_d(1.0, 0.0), &path, &IntegratorSpec::split(dt, n)?)?;

    let rms = (composite
        .iter()
        .zip(&direct.states)
        .map(|(c, s)| (c - s.x[0]).powi(2))
        .sum::<f64>()
        / composite.len() as f64)
        .sqrt();
    println!("RMS composite - direct = {rms:.3e} ({:.3}% of amplitude)", 100.0 * rms / orbit.amplitude());
    println!("masked B points: {}", diss.masked_count());
    Ok(())
}
