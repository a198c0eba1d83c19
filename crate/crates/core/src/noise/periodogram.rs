use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Averaged power over a contiguous block of frequency bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEstimate {
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Mean angular frequency of the bins in the band.
    pub omega: f64,
    pub power: f64,
    pub n_bins: usize,
}

/// Raw periodogram of a series of step integrals.
///
/// Returns `(ω_j, P_j)` for `j = 0..=n/2` with
/// `P_j = |Σ_k Δη_k e^{-iω_j t_k}|² / (n·dt)`, whose expectation is the
/// two-sided density `S(ω_j)` of `η`.
pub fn periodogram(increments: &[f64], dt: f64) -> Vec<(f64, f64)> {
    let n = increments.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = increments.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let scale = 1.0 / (n as f64 * dt);
    (0..=n / 2)
        .map(|j| (j as f64 * d_omega, buf[j].norm_sqr() * scale))
        .collect()
}

/// Splits bins `1..len` into `n_bands` contiguous groups of equal size and
/// averages each. Works for any `(ω, value)` table, so the same banding
/// can be applied to a periodogram and to the target density.
pub fn band_average(table: &[(f64, f64)], n_bands: usize) -> Vec<BandEstimate> {
    if table.len() < 2 || n_bands == 0 {
        return Vec::new();
    }
    let bins = &table[1..];
    let per_band = (bins.len() / n_bands).max(1);
    bins.chunks(per_band)
        .filter(|c| c.len() == per_band)
        .map(|c| {
            let k = c.len() as f64;
            BandEstimate {
                omega_lo: c[0].0,
                omega_hi: c[c.len() - 1].0,
                omega: c.iter().map(|b| b.0).sum::<f64>() / k,
                power: c.iter().map(|b| b.1).sum::<f64>() / k,
                n_bins: c.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft() {
        let dt = 0.05;
        let x: Vec<f64> = (0..37).map(|k| ((k * k) as f64 * 0.37).sin() + 0.1 * k as f64).collect();
        let p = periodogram(&x, dt);
        let n = x.len();
        for (j, &(om, pw)) in p.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, v) in x.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            let direct = (re * re + im * im) / (n as f64 * dt);
            assert!((pw - direct).abs() < 1e-10 * direct.max(1.0));
            assert!((om - 2.0 * std::f64::consts::PI * j as f64 / (n as f64 * dt)).abs() < 1e-12);
        }
    }

    #[test]
    fn bands_cover_equal_counts() {
        let table: Vec<(f64, f64)> = (0..101).map(|j| (j as f64, 2.0)).collect();
        let b = band_average(&table, 10);
        assert_eq!(b.len(), 10);
        assert!(b.iter().all(|e| e.n_bins == 10 && e.power == 2.0));
        assert_eq!(b[0].omega_lo, 1.0);
    }
}
