//! Quantum-corrected bath spectrum: synthesize a path and compare its
//! band-averaged periodogram with `S(ω) = w·x coth x`, `x = ħω/2k_BT`.

use thermal_langevin::noise::{band_average, colored_path, periodogram, SpectrumMode, SpectrumSpec};
use thermal_langevin::PhysicalParams;

fn main() -> thermal_langevin::Result<()> {
    let params = PhysicalParams::new(1.0, 0.5, 1.0, 1.0, 1.0)?;
    let dt = 0.05;
    let n = 1 << 16;
    for mode in [SpectrumMode::Truncated(1), SpectrumMode::FullCoth] {
        let spec = SpectrumSpec::new(params, mode);
        let path = colored_path(&spec, n, dt, 1, 3, 0)?;
        let table = periodogram(&path.increments, dt);
        let target: Vec<(f64, f64)> = table.iter().map(|&(w, _)| (w, spec.density(w).unwrap())).collect();
        println!("{}:", mode.label());
        for (e, s) in band_average(&table, 8).iter().zip(band_average(&target, 8)) {
            println!("  omega {:>7.3}  periodogram {:>8.4}  S {:>8.4}", e.omega, e.power, s.power);
        }
    }
    Ok(())
}
