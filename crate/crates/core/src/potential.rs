//! External potentials `V(x)` with analytic first and second derivatives.
//!
//! Every potential is a triple of evaluators (value, gradient, Hessian).
//! The built-ins cover the free particle, the isotropic oscillator, an
//! isotropic quartic well and a 1-D cubic-spline table; arbitrary
//! potentials can be plugged in through [`CallablePotential`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// User-supplied potential. `hessian` writes a row-major `d × d` matrix.
#[derive(Clone)]
pub struct CallablePotential {
    pub dims: Option<usize>,
    pub value: Arc<ValueFn>,
    pub gradient: Arc<VectorFn>,
    pub hessian: Arc<VectorFn>,
}

impl fmt::Debug for CallablePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallablePotential")
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

/// Natural cubic spline through `(grid[i], values[i])`, differentiated
/// analytically so the gradient and curvature are exactly those of the
/// interpolant.
#[derive(Debug, Clone)]
pub struct SplineTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    // second derivatives at the knots
    curvature: Vec<f64>,
}

impl SplineTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 3 {
            return Err(Error::validation("potential.grid", "need at least 3 knots"));
        }
        if values.len() != n {
            return Err(Error::validation(
                "potential.values",
                format!("{} values for {} knots", values.len(), n),
            ));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::validation("potential.grid", "non-finite entry"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "potential.grid",
                "knots must be strictly increasing",
            ));
        }

        // Tridiagonal solve for the natural spline (zero end curvature).
        let mut curvature = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = grid[i] - grid[i - 1];
            let h1 = grid[i + 1] - grid[i];
            let lower = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
            if i > 1 {
                let m = lower / diag[i - 1];
                diag[i] -= m * upper[i - 1];
                rhs[i] -= m * rhs[i - 1];
            }
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { curvature[i + 1] } else { 0.0 };
            curvature[i] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Self {
            grid,
            values,
            curvature,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// `(v, v', v'')` of the interpolant at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { x, lo, hi });
        }
        let i = match self.grid.partition_point(|&g| g <= x) {
            0 => 0,
            k => (k - 1).min(self.grid.len() - 2),
        };
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2v = a * m0 + b * m1;
        Ok((v, dv, d2v))
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    Free,
    /// `V = M ω² |x|² / 2`.
    Harmonic { mass: f64, omega: f64 },
    /// `V = a |x|²/2 + b |x|⁴/4`.
    Quartic { a: f64, b: f64 },
    /// 1-D cubic-spline table.
    Tabulated(SplineTable),
    Callable(CallablePotential),
}

/// Value, gradient and row-major Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSample {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl Potential {
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Potential::Harmonic { mass, omega }
    }

    pub fn quartic(a: f64, b: f64) -> Self {
        Potential::Quartic { a, b }
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        SplineTable::new(grid, values).map(Potential::Tabulated)
    }

    /// Required dimension, if the potential fixes one.
    pub fn dims(&self) -> Option<usize> {
        match self {
            Potential::Tabulated(_) => Some(1),
            Potential::Callable(c) => c.dims,
            _ => None,
        }
    }

    pub fn check_dims(&self, d: usize) -> Result<()> {
        match self.dims() {
            Some(n) if n != d => Err(Error::validation(
                "dims",
                format!("potential is {n}-dimensional, state is {d}-dimensional"),
            )),
            _ if d == 0 => Err(Error::validation("dims", "dimension must be >= 1")),
            _ => Ok(()),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        self.check_dims(x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("x", "non-finite position"));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(match self {
            Potential::Free => 0.0,
            Potential::Harmonic { mass, omega } => 0.5 * mass * omega * omega * norm2(x),
            Potential::Quartic { a, b } => {
                let r2 = norm2(x);
                0.5 * a * r2 + 0.25 * b * r2 * r2
            }
            Potential::Tabulated(t) => t.eval(x[0])?.0,
            Potential::Callable(c) => (c.value)(x),
        })
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Potential::Free => out.fill(0.0),
            Potential::Harmonic { mass, omega } => {
                let k = mass * omega * omega;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = k * xi;
                }
            }
            Potential::Quartic { a, b } => {
                let k = a + b * norm2(x);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = k * xi;
                }
            }
            Potential::Tabulated(t) => out[0] = t.eval(x[0])?.1,
            Potential::Callable(c) => (c.gradient)(x, out),
        }
        Ok(())
    }

    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = x.len();
        match self {
            Potential::Free => out.fill(0.0),
            Potential::Harmonic { mass, omega } => {
                out.fill(0.0);
                for i in 0..d {
                    out[i * d + i] = mass * omega * omega;
                }
            }
            Potential::Quartic { a, b } => {
                let k = a + b * norm2(x);
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = 2.0 * b * x[i] * x[j] + if i == j { k } else { 0.0 };
                    }
                }
            }
            Potential::Tabulated(t) => out[0] = t.eval(x[0])?.2,
            Potential::Callable(c) => (c.hessian)(x, out),
        }
        Ok(())
    }

    /// Full `(v, ∇V, Hess V)` triple with input validation.
    pub fn eval(&self, x: &[f64]) -> Result<PotentialSample> {
        let d = x.len();
        let value = self.value(x)?;
        let mut gradient = vec![0.0; d];
        let mut hessian = vec![0.0; d * d];
        self.gradient_into(x, &mut gradient)?;
        self.hessian_into(x, &mut hessian)?;
        Ok(PotentialSample {
            value,
            gradient,
            hessian,
        })
    }

    /// 1-D shortcut returning `(v, v', v'')`.
    pub fn eval_1d(&self, x: f64) -> Result<(f64, f64, f64)> {
        let s = self.eval(&[x])?;
        Ok((s.value, s.gradient[0], s.hessian[0]))
    }

    /// One-dimensional `(V'(x), V''(x)·u)` without touching the heap.
    #[inline]
    pub(crate) fn grad_and_hvp_1d(&self, x: f64, u: f64) -> Result<(f64, f64)> {
        Ok(match self {
            Potential::Free => (0.0, 0.0),
            Potential::Harmonic { mass, omega } => {
                let k = mass * omega * omega;
                (k * x, k * u)
            }
            Potential::Quartic { a, b } => {
                let k = a + b * (x * x);
                (k * x, k * u + 2.0 * b * x * (x * u))
            }
            Potential::Tabulated(t) => {
                let (_, dv, d2v) = t.eval(x)?;
                (dv, d2v * u)
            }
            Potential::Callable(c) => {
                let (mut g, mut h) = ([0.0], [0.0]);
                (c.gradient)(&[x], &mut g);
                (c.hessian)(&[x], &mut h);
                (g[0], h[0] * u)
            }
        })
    }

    /// Writes `∇V(x)` into `grad` and `Hess V(x) · u` into `hvp`.
    ///
    /// `scratch` must hold at least `d²` entries; it is only touched by
    /// potentials without a closed-form Hessian-vector product.
    #[inline]
    pub(crate) fn grad_and_hvp(
        &self,
        x: &[f64],
        u: &[f64],
        grad: &mut [f64],
        hvp: &mut [f64],
        scratch: &mut [f64],
    ) -> Result<()> {
        match self {
            Potential::Free => {
                grad.fill(0.0);
                hvp.fill(0.0);
            }
            Potential::Harmonic { mass, omega } => {
                let k = mass * omega * omega;
                for i in 0..x.len() {
                    grad[i] = k * x[i];
                    hvp[i] = k * u[i];
                }
            }
            Potential::Quartic { a, b } => {
                let k = a + b * norm2(x);
                let xu: f64 = x.iter().zip(u).map(|(p, q)| p * q).sum();
                for i in 0..x.len() {
                    grad[i] = k * x[i];
                    hvp[i] = k * u[i] + 2.0 * b * x[i] * xu;
                }
            }
            Potential::Tabulated(t) => {
                let (_, dv, d2v) = t.eval(x[0])?;
                grad[0] = dv;
                hvp[0] = d2v * u[0];
            }
            Potential::Callable(c) => {
                let d = x.len();
                (c.gradient)(x, grad);
                let h = &mut scratch[..d * d];
                (c.hessian)(x, h);
                for i in 0..d {
                    hvp[i] = (0..d).map(|j| h[i * d + j] * u[j]).sum();
                }
            }
        }
        Ok(())
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_check(pot: &Potential, x: &[f64], scale: f64) {
        let d = x.len();
        let h = 1e-5 * scale;
        let tol = |mag: f64| 10.0 * h * h * mag.max(1.0) + 1e-9 * mag.max(1.0);
        let s = pot.eval(x).unwrap();
        for i in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (pot.value(&xp).unwrap() - pot.value(&xm).unwrap()) / (2.0 * h);
            assert!(
                (fd - s.gradient[i]).abs() <= tol(s.gradient[i].abs()),
                "grad[{i}] {} vs fd {fd}",
                s.gradient[i]
            );
            let gp = pot.eval(&xp).unwrap().gradient;
            let gm = pot.eval(&xm).unwrap().gradient;
            for j in 0..d {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                let an = s.hessian[j * d + i];
                assert!((fd - an).abs() <= tol(an.abs()), "hess[{j},{i}] {an} vs fd {fd}");
            }
        }
    }

    #[test]
    fn harmonic_triple() {
        let p = Potential::harmonic(1.0, 2.0);
        assert_eq!(p.eval_1d(1.0).unwrap(), (2.0, 4.0, 4.0));
        assert_eq!(p.eval_1d(0.0).unwrap(), (0.0, 0.0, 4.0));
    }

    #[test]
    fn free_triple() {
        assert_eq!(Potential::Free.eval_1d(3.7).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tabulated_domain_error() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let vals = grid.iter().map(|x| x * x).collect();
        let p = Potential::tabulated(grid, vals).unwrap();
        assert!(matches!(p.eval_1d(1.5), Err(Error::Domain { .. })));
        assert!(p.eval_1d(1.0).is_ok());
    }

    #[test]
    fn spline_reproduces_knots_and_is_smooth() {
        let grid: Vec<f64> = (0..41).map(|i| -2.0 + i as f64 * 0.1).collect();
        let vals: Vec<f64> = grid.iter().map(|x: &f64| x.cos()).collect();
        let t = SplineTable::new(grid.clone(), vals.clone()).unwrap();
        for (g, v) in grid.iter().zip(&vals) {
            assert!((t.eval(*g).unwrap().0 - v).abs() < 1e-13);
        }
        // interior accuracy of a natural spline on cos
        let (v, dv, _) = t.eval(0.33).unwrap();
        assert!((v - 0.33f64.cos()).abs() < 1e-5);
        assert!((dv + 0.33f64.sin()).abs() < 1e-3);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let grid: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let p = Potential::tabulated(grid.clone(), grid).unwrap();
        assert!(p.eval(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn callable_matches_builtin() {
        let c = Potential::Callable(CallablePotential {
            dims: Some(2),
            value: Arc::new(|x| 0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1])),
            gradient: Arc::new(|x, g| {
                g[0] = x[0];
                g[1] = 4.0 * x[1];
            }),
            hessian: Arc::new(|_, h| h.copy_from_slice(&[1.0, 0.0, 0.0, 4.0])),
        });
        fd_check(&c, &[0.3, -0.7], 1.0);
        let (mut g, mut hv, mut s) = ([0.0; 2], [0.0; 2], [0.0; 4]);
        c.grad_and_hvp(&[1.0, 1.0], &[2.0, 3.0], &mut g, &mut hv, &mut s).unwrap();
        assert_eq!(hv, [2.0, 12.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn builtins_match_finite_differences(
            x in prop::collection::vec(-2.0f64..2.0, 1..4),
            a in -1.0f64..2.0,
            b in 0.0f64..1.0,
        ) {
            fd_check(&Potential::harmonic(1.3, 0.7), &x, 1.0);
            fd_check(&Potential::quartic(a, b), &x, 1.0);
            fd_check(&Potential::Free, &x, 1.0);
        }

        // v''' of a cubic spline jumps at the knots, so sample inside intervals
        #[test]
        fn spline_matches_finite_differences(i in 2usize..78, frac in 0.05f64..0.95) {
            let x = -2.0 + 0.05 * (i as f64 + frac);
            let grid: Vec<f64> = (0..81).map(|i| -2.0 + i as f64 * 0.05).collect();
            let vals = grid.iter().map(|g: &f64| g.powi(4) - g * g).collect();
            fd_check(&Potential::tabulated(grid, vals).unwrap(), &[x], 1.0);
        }

        #[test]
        fn hvp_agrees_with_dense_hessian(
            x in prop::collection::vec(-2.0f64..2.0, 3),
            u in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let p = Potential::quartic(0.5, 0.3);
            let s = p.eval(&x).unwrap();
            let (mut g, mut hv, mut scratch) = ([0.0; 3], [0.0; 3], [0.0; 9]);
            p.grad_and_hvp(&x, &u, &mut g, &mut hv, &mut scratch).unwrap();
            for i in 0..3 {
                let dense: f64 = (0..3).map(|j| s.hessian[i * 3 + j] * u[j]).sum();
                prop_assert!((dense - hv[i]).abs() < 1e-12);
                prop_assert!((g[i] - s.gradient[i]).abs() < 1e-14);
            }
        }
    }
}
