//! Growth rate of the linearized Green function: stable, inverted, and
//! parametrically driven (Mathieu) frequencies.

use thermal_langevin::greenfn::{growth_rate, GreenFunction};
use thermal_langevin::TimeGrid;

fn main() -> thermal_langevin::Result<()> {
    let grid = TimeGrid::new(0.0, 2e-3, 40_000)?;
    let cases: [(&str, Box<dyn Fn(f64) -> f64>); 4] = [
        ("stable  ω² = 1", Box::new(|_| 1.0)),
        ("inverted ω² = -0.49", Box::new(|_| -0.49)),
        ("Mathieu on tongue", Box::new(|t| 1.0 + 0.2 * (2.0 * t).cos())),
        ("Mathieu off tongue", Box::new(|t| 1.0 + 0.2 * (3.1 * t).cos())),
    ];
    for (name, omega2) in cases {
        let g = GreenFunction::from_frequency(&grid, omega2)?;
        let est = growth_rate(&g);
        println!(
            "{name:<22} rate {:>8.5} ± {:.5}  unstable: {}",
            est.rate,
            est.stderr,
            est.is_unstable(0.01)
        );
    }
    Ok(())
}
