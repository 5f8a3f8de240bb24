//! Scalar special functions and Gauss-Legendre nodes.

use std::f64::consts::PI;

/// Lanczos approximation (g = 7, 9 terms) to `ln Γ(x)` for `x > 0`.
///
/// Relative accuracy ~1e−13 over the range used here (arguments ≥ 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection; not exercised by the library but keeps the function total
        // on (0, ∞).
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln C(n, k)` via `ln Γ`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "ln_binomial: k = {k} out of range for n = {n}");
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes ascending, `Σ w = 2`, exact for polynomials of degree `≤ 2n − 1`.
/// Newton iteration on the three-term Legendre recurrence; the classical
/// Chebyshev-based initial guess converges in a handful of steps.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    // P_n(z) and P_n'(z) from the three-term recurrence.
    let eval = |z: f64| -> (f64, f64) {
        let mut p0 = 1.0;
        let mut p1 = 0.0;
        for j in 0..n {
            let p2 = p1;
            p1 = p0;
            p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
        }
        (p0, n as f64 * (z * p0 - p1) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, pp) = eval(z);
            let dz = p / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        // Recompute the derivative at the converged node: using a value left
        // over from before the last Newton update costs ~1e-14 in Σw.
        let (_, pp) = eval(z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        // ln Γ(11) = ln 10!
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_binomial_matches_exact_products() {
        // C(10,5) = 252, C(20,7) = 77520, computed exactly by integer product.
        let exact = |n: u64, k: u64| -> f64 {
            let mut v = 1u128;
            for i in 0..k {
                v = v * (n - i) as u128 / (i + 1) as u128;
            }
            (v as f64).ln()
        };
        assert!((ln_binomial(10, 5) - exact(10, 5)).abs() < 1e-12);
        assert!((ln_binomial(20, 7) - exact(20, 7)).abs() < 1e-12);
        assert!((ln_binomial(60, 30) - exact(60, 30)).abs() < 1e-10);
        // Large argument stays finite and symmetric.
        let big = ln_binomial(10_000, 5_000);
        assert!(big.is_finite());
        assert_eq!(big, ln_binomial(10_000, 5_000));
    }

    #[test]
    fn gauss_legendre_basic_exactness() {
        let (x, w) = gauss_legendre(8);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        // Degree 14 monomial: ∫ t^14 dt = 2/15 (exact for 8 nodes, degree ≤ 15).
        let m14: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
        // Odd monomial integrates to zero by symmetry.
        let m13: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(13)).sum();
        assert!(m13.abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_single_node() {
        let (x, w) = gauss_legendre(1);
        assert!(x[0].abs() < 1e-15);
        assert!((w[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_smooth_integrand() {
        // ∫ e^t dt over [-1,1] = 2 sinh 1.
        let (x, w) = gauss_legendre(20);
        let v: f64 = x.iter().zip(&w).map(|(t, w)| w * t.exp()).sum();
        assert!((v - 2.0 * 1f64.sinh()).abs() < 1e-14);
    }
}
