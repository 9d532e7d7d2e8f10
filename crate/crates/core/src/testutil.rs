use statrs::function::gamma::ln_gamma;

/// `I₁(x)/I₀(x)` from the power series, summed in the log domain. Slow but
/// independent of any quadrature.
pub fn bessel_ratio_i1_i0(x: f64) -> f64 {
    let log_half = (0.5 * x).ln();
    let term = |k: usize, nu: usize| -> f64 {
        (2 * k + nu) as f64 * log_half - ln_gamma(k as f64 + 1.0) - ln_gamma((k + nu) as f64 + 1.0)
    };
    let sum = |nu: usize| -> f64 {
        let logs: Vec<f64> = (0..(200 + 4 * x as usize)).map(|k| term(k, nu)).collect();
        let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        peak + logs.iter().map(|l| (l - peak).exp()).sum::<f64>().ln()
    };
    (sum(1) - sum(0)).exp()
}

#[test]
fn bessel_ratio_reference_values() {
    assert!((bessel_ratio_i1_i0(10.0) - 0.948_599_825_954_845_9).abs() < 1e-12);
    assert!((bessel_ratio_i1_i0(1.0) - 0.446_389_965_896_534_6).abs() < 1e-12);
}
