//! The direct third-order equation admits runaway solutions; the
//! order-reduced schemes do not. The guard turns the blow-up into an error.

use thermal_langevin::langevin::{integrate, IntegratorSpec, Scheme};
use thermal_langevin::noise::NoisePath;
use thermal_langevin::{Error, PhaseState, PhysicalParams, Potential};

fn main() -> thermal_langevin::Result<()> {
    let params = PhysicalParams::natural(1.0, 0.05, 0.0)?;
    let pot = Potential::harmonic(1.0, 1.0);
    let start = PhaseState::one_d(1.0, 0.0);
    let n = 20_000;
    let noise = NoisePath::zeros(0.0, 1e-3, n, 1);
    for scheme in [Scheme::SplitStep, Scheme::DirectThirdOrder] {
        let spec = IntegratorSpec::new(scheme, 1e-3, n)?;
        match integrate(&params, &pot, &start, &noise, &spec) {
            Ok(traj) => println!("{:<12} x(t = {}) = {:.6}", scheme.label(), traj.time(n), traj.last().x[0]),
            Err(e @ Error::Runaway { .. }) => println!("{:<12} {e}", scheme.label()),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
