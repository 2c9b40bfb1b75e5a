//! Small numeric helpers shared across modules: standard-normal CDF/PDF
//! and streaming mean/variance summaries.

use std::f64::consts::PI;

/// Standard normal CDF, Φ(x) = ½ erfc(−x/√2).
///
/// `libm::erfc` is the FDLIBM rational approximation, accurate to well
/// below 1e-12 absolute error over the whole range.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal PDF, φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Mean of a nonempty slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 when fewer than 2 values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_known_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-12);
        assert!((normal_cdf(-1.96) - 0.024997895148220435).abs() < 1e-12);
    }

    #[test]
    fn pdf_at_zero() {
        assert!((normal_pdf(0.0) - 0.3989422804014327).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((sample_std(&[0.0, 1.0]) - (0.5f64).sqrt()).abs() < 1e-15);
        assert_eq!(sample_std(&[4.0]), 0.0);
    }
}
