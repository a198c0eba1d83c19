//! One-dimensional semiclassical expansion around the classical orbit.
//!
//! The position is written as `x = e^{−γB}[x_cl + √(T/T_H) Q]`. To first
//! order, `Q` and `A = x_cl B` obey the linearized equation around the
//! orbit, `M ÿ + V''(x_cl) y = source`, and both are retarded quadratures
//! of its Green function `G`, assembled from two homogeneous solutions.

mod green;
mod growth;
mod orbit;
mod semiclassical;

pub use green::{compute_q, GreenFunction};
pub use growth::{growth_rate, GrowthEstimate};
pub use orbit::{solve_classical, ClassicalOrbit};
pub use semiclassical::{
    composite_solution, compute_b, normalize_noise, Dissipation, HomogeneousCoeffs, NoiseScale,
    BRIDGE_FRACTION, MASK_EPS,
};

/// Same as [`GreenFunction::from_orbit`].
pub fn build_green(orbit: &ClassicalOrbit) -> crate::Result<GreenFunction> {
    GreenFunction::from_orbit(orbit)
}
