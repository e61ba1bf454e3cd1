//! Special-function wrappers shared by the test statistics.

pub(crate) use statrs::function::erf::erfc;

/// Regularized upper incomplete gamma function Q(a, x).
pub(crate) fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(a, x)
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with two independent implementations
    // (scipy.special.gammaincc and mpmath.gammainc), including the large
    // shape parameters the serial and approximate-entropy statistics need.
    #[test]
    fn igamc_matches_reference_values() {
        let cases = [
            (16384.0, 16300.0, 0.74369194765043),
            (16384.0, 16384.0, 0.4989610874592239),
            (16384.0, 16500.0, 0.18227674031392938),
            (8192.0, 8100.0, 0.8453304868594047),
            (512.0, 520.0, 0.35701780306569947),
            (2.5, 1.2, 0.7914741205943246),
            (1.5, 2.4412287316, 0.18060931823973828),
            (2.0, 0.8, 0.8087921354109989),
            (1.0, 0.4, 0.6703200460356394),
            (4.0, 3.6, 0.5152161104661482),
        ];
        for (a, x, expected) in cases {
            let got = igamc(a, x);
            assert!(
                (got - expected).abs() < 1e-10,
                "igamc({a}, {x}) = {got}, expected {expected}"
            );
        }
        assert_eq!(igamc(3.0, 0.0), 1.0);
    }

    #[test]
    fn normal_cdf_basics() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.2649110641) - 0.8970483946398182).abs() < 1e-10);
        assert!(normal_cdf(-8.0) < 1e-14);
    }
}
