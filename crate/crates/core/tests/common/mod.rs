//! Independent ODE oracles shared by the integration tests.

/// Plain RK4 for `ü = f(t) − Ω²(t) u`, sampled every `sub` fine steps.
pub fn rk4_forced(omega2: &dyn Fn(f64) -> f64, f: &dyn Fn(f64) -> f64, dt: f64, n: usize, sub: usize) -> Vec<f64> {
    let h = dt / sub as f64;
    let rhs = |t: f64, u: f64, v: f64| (v, f(t) - omega2(t) * u);
    let (mut u, mut v) = (0.0, 0.0);
    let mut out = vec![0.0];
    for k in 0..n * sub {
        let t = k as f64 * h;
        let (a1, b1) = rhs(t, u, v);
        let (a2, b2) = rhs(t + h / 2.0, u + h / 2.0 * a1, v + h / 2.0 * b1);
        let (a3, b3) = rhs(t + h / 2.0, u + h / 2.0 * a2, v + h / 2.0 * b2);
        let (a4, b4) = rhs(t + h, u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if (k + 1) % sub == 0 {
            out.push(u);
        }
    }
    out
}

/// Largest Floquet exponent from the monodromy matrix over one period.
pub fn floquet_exponent(omega2: &dyn Fn(f64) -> f64, period: f64, steps: usize) -> f64 {
    let h = period / steps as f64;
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for col in cols.iter_mut() {
        let [mut u, mut v] = *col;
        for k in 0..steps {
            let t = k as f64 * h;
            let acc = |t: f64, u: f64| -omega2(t) * u;
            let (a1, b1) = (v, acc(t, u));
            let (a2, b2) = (v + h / 2.0 * b1, acc(t + h / 2.0, u + h / 2.0 * a1));
            let (a3, b3) = (v + h / 2.0 * b2, acc(t + h / 2.0, u + h / 2.0 * a2));
            let (a4, b4) = (v + h * b3, acc(t + h, u + h * a3));
            u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        *col = [u, v];
    }
    // eigenvalues of [[a, b], [c, d]] with det 1
    let tr = cols[0][0] + cols[1][1];
    let det = cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1];
    let disc = tr * tr / 4.0 - det;
    if disc <= 0.0 {
        0.0
    } else {
        (tr.abs() / 2.0 + disc.sqrt()).ln() / period
    }
}
