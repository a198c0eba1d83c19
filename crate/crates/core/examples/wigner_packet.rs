//! Transport a free Gaussian Wigner packet through a noisy bath and read the
//! width of its position profile.

use thermal_langevin::langevin::IntegratorSpec;
use thermal_langevin::wigner::{evaluate_grid, gaussian_packet, profile_width, TransportSpec, CONVENTION};
use thermal_langevin::{PhysicalParams, Potential};

fn main() -> thermal_langevin::Result<()> {
    let params = PhysicalParams::from_noise_strength(1.0, 0.1, 0.25, 1.0, 1.0)?;
    let packet = gaussian_packet(0.0, 0.0, 1.0, 1.0)?;
    let spec = TransportSpec::new(IntegratorSpec::split(0.02, 100)?, 4000, 1);
    let xs: Vec<f64> = (0..41).map(|i| -6.0 + 0.3 * i as f64).collect();
    let ps: Vec<f64> = (0..27).map(|i| -3.9 + 0.3 * i as f64).collect();
    let grid = evaluate_grid(&packet, &xs, &ps, &params, &Potential::Free, &spec)?;

    let j0 = ps.len() / 2;
    let (mean, sigma) = profile_width(&xs, &grid.x_profile(j0));
    println!("convention: {CONVENTION}");
    println!("t = {}: normalization {:.4}", grid.t, grid.normalization());
    println!("x-profile at p = {}: centre {mean:.4}, sigma {sigma:.4}", ps[j0]);
    Ok(())
}
