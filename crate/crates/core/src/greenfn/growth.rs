use super::green::GreenFunction;

const MAX_SAMPLES: usize = 1500;
/// Entries of `G` smaller than this fraction of `|ξ₁ξ₂| + |ξ₂ξ₁|` are
/// dominated by cancellation error and left out of the supremum.
const CANCELLATION_FLOOR: f64 = 1e-8;

/// Least-squares exponential growth rate of `sup_{t'} |G(t, t')|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEstimate {
    pub rate: f64,
    pub stderr: f64,
    /// 95 % interval `rate ± 1.96·stderr`.
    pub ci95: (f64, f64),
    pub n_points: usize,
    /// Too few usable points for a fit; `rate` is 0 and the interval unbounded.
    pub degenerate: bool,
}

impl GrowthEstimate {
    /// Growth is significant when the whole interval lies above `threshold`.
    pub fn is_unstable(&self, threshold: f64) -> bool {
        !self.degenerate && self.ci95.0 > threshold
    }
}

/// Fits `log max_{s ≤ t} sup_{t' ≤ s} |G(s, t')|` against `t` over the last
/// three quarters of the grid.
///
/// The envelope is evaluated on a decimated grid of at most 1500 times.
/// For growing solutions `G(t, t')` with `t'` near `t` is a difference of
/// two huge products; those entries are skipped, which does not affect the
/// supremum as it is attained away from the diagonal.
/// Bounded `G` gives a rate near zero; parametric resonance or an
/// inverted potential gives the exponent of the fastest-growing solution.
pub fn growth_rate(green: &GreenFunction) -> GrowthEstimate {
    let n = green.n_steps();
    let stride = (n + 1).div_ceil(MAX_SAMPLES).max(1);
    let mut idx: Vec<usize> = (0..=n).step_by(stride).collect();
    if *idx.last().unwrap() != n {
        idx.push(n);
    }
    let mut running = 0.0f64;
    let mut points = Vec::with_capacity(idx.len());
    let t_start = green.time(0) + 0.25 * (green.time(n) - green.time(0));
    for (i, &k) in idx.iter().enumerate() {
        let sup = idx[..=i]
            .iter()
            .filter_map(|&j| {
                let g = green.g(k, j).abs();
                let scale = (green.xi1[k] * green.xi2[j]).abs() + (green.xi2[k] * green.xi1[j]).abs();
                (g >= CANCELLATION_FLOOR * scale).then_some(g)
            })
            .fold(0.0, f64::max);
        running = running.max(sup);
        let t = green.time(k);
        if t >= t_start && running > 0.0 && running.is_finite() {
            points.push((t, running.ln()));
        }
    }
    fit(&points)
}

fn fit(points: &[(f64, f64)]) -> GrowthEstimate {
    let k = points.len();
    let degenerate = GrowthEstimate {
        rate: 0.0,
        stderr: f64::INFINITY,
        ci95: (f64::NEG_INFINITY, f64::INFINITY),
        n_points: k,
        degenerate: true,
    };
    if k < 3 {
        return degenerate;
    }
    let kf = k as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return degenerate;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let rate = sxy / sxx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - my - rate * (p.0 - mt)).powi(2))
        .sum();
    let stderr = (ssr / (kf - 2.0) / sxx).sqrt();
    GrowthEstimate {
        rate,
        stderr,
        ci95: (rate - 1.96 * stderr, rate + 1.96 * stderr),
        n_points: k,
        degenerate: false,
    }
}
