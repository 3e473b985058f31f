//! Cumulative quadrature on uniform samples.

/// Running integrals `int_0^{t_m} f` for `m = 0..len`, Simpson's rule on even
/// prefixes, the 3/8 rule on the last three intervals of odd prefixes and a
/// quadratic fit on the first interval.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let simpson = |a: usize, b: usize| {
        (a..b).step_by(2).map(|i| h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2])).sum::<f64>()
    };
    let mut out = Vec::with_capacity(f.len());
    for m in 0..f.len() {
        let v = match m {
            0 => 0.0,
            1 if f.len() > 2 => h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]),
            1 => 0.5 * h * (f[0] + f[1]),
            m if m % 2 == 0 => simpson(0, m),
            m => simpson(0, m - 3) + 3.0 * h / 8.0 * (f[m - 3] + 3.0 * f[m - 2] + 3.0 * f[m - 1] + f[m]),
        };
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_cubics_exactly_beyond_one_interval() {
        let h = 0.1;
        let f: Vec<f64> = (0..12).map(|i| {
            let t = i as f64 * h;
            t * t * t - 2.0 * t + 1.0
        }).collect();
        let c = cumulative_simpson(&f, h);
        for (m, v) in c.iter().enumerate().skip(2) {
            let t = m as f64 * h;
            assert!((v - (t.powi(4) / 4.0 - t * t + t)).abs() < 1e-12, "{m}");
        }
    }
}
