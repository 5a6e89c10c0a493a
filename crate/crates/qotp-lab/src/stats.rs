//! Binomial confidence intervals and a uniformity test.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// One-sided 99.9% normal quantile.
pub const Z999: f64 = 3.090_232_306_167_813;

/// Pearson statistic of `observed` against the uniform distribution over its bins.
pub fn chi_square_uniform(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let e = total as f64 / observed.len() as f64;
    observed.iter().map(|&o| (o as f64 - e).powi(2) / e).sum()
}

/// Upper quantile of χ² with `df` degrees of freedom at normal quantile `z`
/// (Wilson–Hilferty).
pub fn chi_square_critical(df: usize, z: f64) -> f64 {
    let k = df as f64;
    let c = 2.0 / (9.0 * k);
    k * (1.0 - c + z * c.sqrt()).powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_reference_values() {
        assert_eq!(chi_square_uniform(&[25, 25, 25, 25]), 0.0);
        assert!((chi_square_uniform(&[30, 20]) - 2.0).abs() < 1e-12);
        // tabulated 99.9% points: df 3 → 16.266, df 15 → 37.697; the approximation errs high
        for (df, table) in [(3, 16.266), (15, 37.697)] {
            let q = chi_square_critical(df, Z999);
            assert!(q >= table && q / table - 1.0 < 0.02, "df {df}: {q}");
        }
    }

    #[test]
    fn wilson_reference_values() {
        // 0/100 has upper limit z²/(n+z²)
        let (lo, hi) = wilson(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (100.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.403_831_7).abs() < 1e-6 && (hi - 0.596_168_3).abs() < 1e-6);
    }
}
