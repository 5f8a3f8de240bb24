//! Toeplitz determinants on the circle: the exactly-solvable analogue of the
//! spherical functionals.
//!
//! For a real trigonometric polynomial `φ` put `g = e^φ` and let `T_n(g)` be
//! the `(n+1)×(n+1)` Toeplitz matrix with entries `ĝ_{j−k}` (hats with respect
//! to `dθ/2π`, so `T_n(1) = I`). The circle analogue of `B_n` is
//!
//! ```text
//! b_n(φ) = log det T_n(e^φ) ,
//! ```
//!
//! the log-Gram-determinant of the sections `e^{ikθ}`, `k = 0..n`, paired with
//! weight `e^φ`. The strong Szegő limit theorem gives
//!
//! ```text
//! b_n(φ) − (n+1)·φ̂_0  ↑  Σ_{k≥1} k·|φ̂_k|²   (n → ∞) ,
//! ```
//!
//! monotonically from below; the `n = 0` instance is the first Lebedev-Milin
//! inequality. The lab measures the gap sequence because it is the solved
//! model of the open spherical question: there, the same structure is
//! conjectured with the Dirichlet energy in place of the Szegő constant.

use crate::linalg::{cholesky, Cmatrix};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::f64::consts::TAU;

/// Real trigonometric polynomial `φ(θ) = a₀ + Σ_{k=1}^{K} (a_k cos kθ + b_k sin kθ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleFunction {
    a0: f64,
    /// `a[i]`, `b[i]` belong to frequency `k = i+1`.
    a: Vec<f64>,
    b: Vec<f64>,
}

impl CircleFunction {
    /// Build from `a₀` and `(k, a_k, b_k)` terms; `k = 0` is rejected (use
    /// `a0`), duplicate frequencies accumulate.
    pub fn from_terms(a0: f64, terms: &[(usize, f64, f64)]) -> Result<CircleFunction> {
        let k_max = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mut a = vec![0.0; k_max];
        let mut b = vec![0.0; k_max];
        for &(k, ak, bk) in terms {
            if k == 0 {
                return Err(Error::InvalidArgument(
                    "frequency 0 belongs in the constant term".into(),
                ));
            }
            if !(ak.is_finite() && bk.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
            a[k - 1] += ak;
            b[k - 1] += bk;
        }
        Ok(CircleFunction { a0, a, b })
    }

    /// Random trig polynomial with `a_k, b_k ~ N(0, (amplitude/k)²)`,
    /// reproducible from the seed.
    pub fn random_trig(k_max: usize, amplitude: f64, seed: u64) -> Result<CircleFunction> {
        if k_max == 0 || !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "random_trig wants k_max ≥ 1 and amplitude > 0, got ({k_max}, {amplitude})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(k_max);
        let mut b = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let g: f64 = StandardNormal.sample(&mut rng);
            a.push(amplitude * g / k as f64);
            let g: f64 = StandardNormal.sample(&mut rng);
            b.push(amplitude * g / k as f64);
        }
        Ok(CircleFunction { a0: 0.0, a, b })
    }

    #[inline]
    pub fn k_max(&self) -> usize {
        self.a.len()
    }

    /// Fourier coefficient `φ̂_k = (a_k − i·b_k)/2` for `k > 0`, conjugate for
    /// `k < 0`, `a₀` at `k = 0`; zero beyond the band.
    pub fn hat(&self, k: isize) -> Complex64 {
        if k == 0 {
            return Complex64::new(self.a0, 0.0);
        }
        let idx = k.unsigned_abs() - 1;
        if idx >= self.a.len() {
            return Complex64::ZERO;
        }
        let half = Complex64::new(0.5 * self.a[idx], -0.5 * self.b[idx]);
        if k > 0 {
            half
        } else {
            half.conj()
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.a0;
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            let (s, c) = ((i + 1) as f64 * theta).sin_cos();
            v += a * c + b * s;
        }
        v
    }

    /// `φ̂_0`.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.a0
    }

    /// Same function with the constant term shifted by `c`.
    pub fn with_constant(&self, c: f64) -> CircleFunction {
        CircleFunction { a0: self.a0 + c, a: self.a.clone(), b: self.b.clone() }
    }
}

/// The strong Szegő constant `Σ_{k≥1} k·|φ̂_k|² = Σ_k k·(a_k² + b_k²)/4`.
pub fn strong_szego_constant(phi: &CircleFunction) -> f64 {
    phi.a
        .iter()
        .zip(&phi.b)
        .enumerate()
        .map(|(i, (a, b))| (i + 1) as f64 * 0.25 * (a * a + b * b))
        .sum()
}

/// The `H^{1/2}` seminorm `Σ_{k∈ℤ} |k|·|φ̂_k|²`, twice the Szegő constant —
/// the circle's stand-in for the spherical Dirichlet energy.
pub fn circle_energy(phi: &CircleFunction) -> f64 {
    2.0 * strong_szego_constant(phi)
}

/// Toeplitz matrix `T_n(e^φ)` from a trapezoid discretization with `m_pts`
/// points (spectrally accurate for smooth periodic integrands).
fn toeplitz_matrix(n: usize, phi: &CircleFunction, m_pts: usize) -> Cmatrix {
    let g: Vec<f64> = (0..m_pts)
        .map(|p| phi.eval(TAU * p as f64 / m_pts as f64).exp())
        .collect();
    // ĝ_m for m = 0..=n.
    let mut hats = vec![Complex64::ZERO; n + 1];
    for (m, hat) in hats.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for (p, gv) in g.iter().enumerate() {
            let ang = -TAU * (m * p % m_pts) as f64 / m_pts as f64;
            acc += Complex64::from_polar(*gv, ang);
        }
        *hat = acc / m_pts as f64;
    }
    Cmatrix::from_fn(n + 1, |i, j| {
        if i >= j {
            hats[i - j]
        } else {
            hats[j - i].conj()
        }
    })
}

fn prefix_log_dets(n: usize, phi: &CircleFunction, m_pts: usize) -> Result<Vec<f64>> {
    let t = toeplitz_matrix(n, phi, m_pts);
    let l = cholesky(&t)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for j in 0..=n {
        acc += 2.0 * l.at(j, j).re.ln();
        out.push(acc);
    }
    Ok(out)
}

const TOEPLITZ_N_CAP: usize = 1024;

fn check_n(n: usize) -> Result<()> {
    if n > TOEPLITZ_N_CAP {
        return Err(Error::InvalidArgument(format!(
            "Toeplitz size capped at n ≤ {TOEPLITZ_N_CAP} (cubic Cholesky cost), got {n}"
        )));
    }
    Ok(())
}

/// All of `b_0(φ), …, b_{n}(φ)` from a single Cholesky factorization: the
/// leading principal minors of `T_n` are the lower-order determinants, so the
/// prefix sums of `2·ln L_jj` give the whole sequence. The discretization is
/// doubled until the sequence is stable to `1e−11`.
pub fn toeplitz_b_prefix(n: usize, phi: &CircleFunction) -> Result<Vec<f64>> {
    check_n(n)?;
    let mut m_pts = 256.max(8 * (n + 1 + phi.k_max())).next_power_of_two();
    let mut prev = prefix_log_dets(n, phi, m_pts)?;
    for _ in 0..8 {
        m_pts *= 2;
        let next = prefix_log_dets(n, phi, m_pts)?;
        let diff = prev
            .iter()
            .zip(&next)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0f64, f64::max);
        if diff <= 1e-11 * (1.0 + next.last().unwrap().abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureTooCoarse(
        "Toeplitz symbol discretization did not stabilize after 8 doublings".into(),
    ))
}

/// `b_n(φ) = log det T_n(e^φ)`.
pub fn toeplitz_b(n: usize, phi: &CircleFunction) -> Result<f64> {
    Ok(*toeplitz_b_prefix(n, phi)?.last().unwrap())
}

/// The Szegő gap `Σ_{k≥1} k|φ̂_k|² + (n+1)·φ̂_0 − b_n(φ)`: nonnegative,
/// nonincreasing in `n`, and `→ 0`.
pub fn szego_gap(n: usize, phi: &CircleFunction) -> Result<f64> {
    Ok(strong_szego_constant(phi) + (n + 1) as f64 * phi.mean() - toeplitz_b(n, phi)?)
}

/// Gap sequence for `n = 0..=n_max` in one factorization.
#[derive(Clone, Debug, Serialize)]
pub struct SzegoScan {
    pub n_max: usize,
    pub szego_constant: f64,
    /// `b_n(φ)` for `n = 0..=n_max`.
    pub b: Vec<f64>,
    /// `szego_constant + (n+1)·φ̂_0 − b_n`.
    pub gap: Vec<f64>,
}

pub fn monotonicity_scan(phi: &CircleFunction, n_max: usize) -> Result<SzegoScan> {
    let b = toeplitz_b_prefix(n_max, phi)?;
    let e = strong_szego_constant(phi);
    let gap = b
        .iter()
        .enumerate()
        .map(|(n, bn)| e + (n + 1) as f64 * phi.mean() - bn)
        .collect();
    Ok(SzegoScan { n_max, szego_constant: e, b, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::log_det_from_cholesky;
    use crate::quad1d;

    #[test]
    fn constants_are_exact() {
        let c = CircleFunction::from_terms(0.7, &[]).unwrap();
        for n in [0usize, 3, 10] {
            let b = toeplitz_b(n, &c).unwrap();
            assert!((b - 0.7 * (n + 1) as f64).abs() < 1e-11, "n = {n}: {b}");
        }
        assert_eq!(strong_szego_constant(&c), 0.0);
        assert!(szego_gap(4, &c).unwrap().abs() < 1e-10);
    }

    #[test]
    fn shift_covariance() {
        let phi = CircleFunction::random_trig(3, 0.5, 7).unwrap();
        let n = 5;
        let base = toeplitz_b(n, &phi).unwrap();
        let shifted = toeplitz_b(n, &phi.with_constant(0.3)).unwrap();
        assert!((shifted - base - 0.3 * (n + 1) as f64).abs() < 1e-9);
        // The gap is shift invariant.
        let g0 = szego_gap(n, &phi).unwrap();
        let g1 = szego_gap(n, &phi.with_constant(0.3)).unwrap();
        assert!((g0 - g1).abs() < 1e-9);
    }

    #[test]
    fn entries_match_adaptive_quadrature_oracle() {
        // φ = 2cosθ: assemble T_8(e^φ) from independent 1-D adaptive
        // quadratures of ∫ e^{2cosθ}·e^{−imθ} dθ/2π and compare determinants.
        let phi = CircleFunction::from_terms(0.0, &[(1, 2.0, 0.0)]).unwrap();
        let n = 8;
        let mut hats = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let v = quad1d::integrate_adaptive(
                |th: f64| (2.0 * th.cos()).exp() * (m as f64 * th).cos(),
                0.0,
                TAU,
                1e-13,
            ) / TAU;
            hats.push(Complex64::new(v, 0.0));
        }
        let t = Cmatrix::from_fn(n + 1, |i, j| {
            let d = if i >= j { i - j } else { j - i };
            hats[d]
        });
        let oracle = log_det_from_cholesky(&cholesky(&t).unwrap());
        let fast = toeplitz_b(n, &phi).unwrap();
        assert!((fast - oracle).abs() < 1e-9, "{fast} vs {oracle}");
    }

    #[test]
    fn gap_is_nonnegative_monotone_and_vanishing() {
        for seed in [1u64, 2, 3] {
            let phi = CircleFunction::random_trig(3, 0.6, seed).unwrap();
            let scan = monotonicity_scan(&phi, 24).unwrap();
            assert_eq!(scan.gap.len(), 25);
            assert!(scan.gap[0] > 0.0, "Lebedev-Milin strict for non-constant φ");
            for n in 0..scan.gap.len() {
                assert!(scan.gap[n] >= -1e-10, "gap[{n}] = {}", scan.gap[n]);
                if n > 0 {
                    assert!(
                        scan.gap[n] <= scan.gap[n - 1] + 1e-10,
                        "gap increased at {n}"
                    );
                }
            }
            assert!(scan.gap[24] < 1e-6, "tail gap {}", scan.gap[24]);
        }
    }

    #[test]
    fn small_amplitude_gap_matches_quadratic_formula() {
        // To second order in s, gap_n(s·φ) = s²·Σ_{k>n} (k−n−1)·|φ̂_k|².
        // For φ = cos 3θ (so |φ̂_3|² = 1/4): gap_0 ≈ s²/2, gap_1 ≈ s²/4, and
        // gap_2 is higher order.
        let phi = CircleFunction::from_terms(0.0, &[(3, 1e-3, 0.0)]).unwrap();
        let s2 = 1e-6;
        let g0 = szego_gap(0, &phi).unwrap();
        let g1 = szego_gap(1, &phi).unwrap();
        let g2 = szego_gap(2, &phi).unwrap();
        assert!((g0 - 0.5 * s2).abs() < 1e-2 * s2, "g0 = {g0}");
        assert!((g1 - 0.25 * s2).abs() < 1e-2 * s2, "g1 = {g1}");
        assert!(g2.abs() < 1e-3 * s2, "g2 = {g2}");
    }

    #[test]
    fn prefix_agrees_with_individual_determinants() {
        let phi = CircleFunction::random_trig(2, 0.4, 11).unwrap();
        let prefix = toeplitz_b_prefix(6, &phi).unwrap();
        for n in [0usize, 3, 6] {
            let single = toeplitz_b(n, &phi).unwrap();
            assert!((prefix[n] - single).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn validation_errors() {
        assert!(CircleFunction::from_terms(0.0, &[(0, 1.0, 0.0)]).is_err());
        assert!(CircleFunction::random_trig(0, 1.0, 1).is_err());
        assert!(CircleFunction::random_trig(2, -1.0, 1).is_err());
        let phi = CircleFunction::from_terms(0.0, &[(1, 0.1, 0.0)]).unwrap();
        assert!(toeplitz_b(TOEPLITZ_N_CAP + 1, &phi).is_err());
        // hat() symmetry.
        let f = CircleFunction::from_terms(0.25, &[(2, 0.3, -0.4)]).unwrap();
        assert_eq!(f.hat(2).conj(), f.hat(-2));
        assert_eq!(f.hat(5), Complex64::ZERO);
        assert!((f.eval(0.3) - (0.25 + 0.3 * 0.6f64.cos() - 0.4 * 0.6f64.sin())).abs() < 1e-15);
    }
}
