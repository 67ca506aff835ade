//! Small special-function helpers: log-gamma and log-binomial.
//!
//! Binomial coefficients appear inside logs up to n = 10^6, so they are always
//! evaluated through `ln_gamma` rather than factorials.

/// Natural log of the gamma function, Lanczos approximation (g = 7, 9 terms).
///
/// Accurate to ~1e-13 relative over the positive axis, which is plenty for
/// log-binomials of desk-scale and simulation-scale arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// ln C(n, k); 0 when k == 0 or k == n.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "ln_binomial requires k <= n, got k = {k}, n = {n}");
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact C(n, k) as u128, saturating at u128::MAX on overflow.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        // Gamma(1/2) = sqrt(pi), Gamma(1) = Gamma(2) = 1, Gamma(5) = 24
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
        assert!(ln_gamma(1.0).abs() < 1e-12);
        assert!(ln_gamma(2.0).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(101.0) - (2..=100).map(|k| (k as f64).ln()).sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn ln_binomial_matches_exact() {
        for n in 0..=30usize {
            for k in 0..=n {
                let exact = binomial_u128(n, k) as f64;
                let rel = (ln_binomial(n, k) - exact.ln()).abs();
                assert!(rel < 1e-11, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn ln_binomial_large_n_finite() {
        let v = ln_binomial(1_000_000, 3);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn binomial_u128_small_table() {
        assert_eq!(binomial_u128(6, 2), 15);
        assert_eq!(binomial_u128(10, 5), 252);
        assert_eq!(binomial_u128(3, 5), 0);
    }
}
