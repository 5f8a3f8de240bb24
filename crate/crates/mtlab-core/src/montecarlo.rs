//! The determinantal point process attached to `H⁰(O(n))` and Monte-Carlo
//! estimation of `B_n`.
//!
//! `n+1` points on the sphere carry the joint density (with respect to
//! `μ^{⊗(n+1)}`)
//!
//! ```text
//! K_n(x_0, …, x_n) = exp(c_n) · Π_{i<j} sin²(d(x_i, x_j)/2) ,
//! ```
//!
//! the determinantal process of the coherent-state projection kernel. In the
//! stereographic chart this is `Π|z_i−z_j|²·Π(1+|z_i|²)^{−n}` — each point
//! appears in exactly `n` chordal factors, which absorbs the weights and makes
//! the rotation invariance manifest. By the Andréief identity,
//!
//! ```text
//! E[ exp(Σ_i φ(x_i)) ] = det⟨α_i, α_j⟩_φ = exp(B_n(φ)) ,
//! ```
//!
//! so sampling the process gives an estimator of `B_n` that never touches a
//! Gram matrix — an end-to-end check of the quadrature pipeline.
//!
//! Exact sampling uses the spherical ensemble: the eigenvalues of `B⁻¹A` for
//! independent complex Ginibre matrices `A, B`, pushed to the sphere, realize
//! precisely this process. A single-site Metropolis chain is kept as a slow,
//! independent cross-check.

use crate::funcspace::{self, BandLimitedFunction};
use crate::sphere::{sin2_half_distance, QuadratureRule, SpherePoint};
use crate::special::{ln_binomial, ln_factorial};
use crate::{parallel, Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::TAU;

/// An ordered tuple of sphere points (the process itself is exchangeable).
#[derive(Clone, Debug)]
pub struct PointConfiguration {
    points: Vec<SpherePoint>,
}

impl PointConfiguration {
    pub fn new(points: Vec<SpherePoint>) -> PointConfiguration {
        PointConfiguration { points }
    }

    #[inline]
    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `c_n = (n+1)·ln(n+1) + Σ_k ln C(n,k) − ln (n+1)!`, the log-normalization of
/// the density: expanding `det[(1+z_i·conj(z_j))ⁿ]` by Cauchy-Binet turns the
/// projection-kernel determinant into the Vandermonde form above.
pub fn kn_log_prefactor(n: usize) -> f64 {
    let binom: f64 = (0..=n).map(|k| ln_binomial(n, k)).sum();
    (n + 1) as f64 * ((n + 1) as f64).ln() + binom - ln_factorial(n + 1)
}

/// Log of the joint density at a configuration. Returns `−∞` when two points
/// coincide (the process almost surely never produces that).
pub fn kn_log_density(n: usize, config: &PointConfiguration) -> Result<f64> {
    if config.len() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "K_{n} wants {} points, got {}",
            n + 1,
            config.len()
        )));
    }
    let pts = config.points();
    let mut log_pairs = 0.0;
    for i in 0..pts.len() {
        for j in 0..i {
            log_pairs += sin2_half_distance(&pts[i], &pts[j]).ln();
        }
    }
    Ok(kn_log_prefactor(n) + log_pairs)
}

/// Integrate the density over `μ^{⊗(n+1)}` by tensor-product quadrature and
/// return the result (1 exactly, up to quadrature rounding). The density is a
/// polynomial of degree `2n` on the sphere in each variable, so a rule of
/// degree `≥ 2n` integrates it exactly. Cost is `nodes^{n+1}`, hence `n ≤ 3`.
pub fn normalization_check(n: usize, rule: &QuadratureRule) -> Result<f64> {
    if n > 3 {
        return Err(Error::InvalidArgument(format!(
            "normalization check is tensor-product (nodes^(n+1)): n ≤ 3, got {n}"
        )));
    }
    if rule.degree() < 2 * n {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < 2n = {}",
            rule.degree(),
            2 * n
        )));
    }
    let pts = rule.nodes();
    let w = rule.weights();
    let m = pts.len();
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            s[i * m + j] = sin2_half_distance(&pts[i], &pts[j]);
        }
    }
    let pref = kn_log_prefactor(n).exp();
    let total = match n {
        0 => w.iter().sum::<f64>(),
        1 => {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += w[i] * w[j] * s[i * m + j];
                }
            }
            acc
        }
        2 => {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let wij = w[i] * w[j] * s[i * m + j];
                    let mut inner = 0.0;
                    for k in 0..m {
                        inner += w[k] * s[i * m + k] * s[j * m + k];
                    }
                    acc += wij * inner;
                }
            }
            acc
        }
        _ => parallel::map_reduce_range(
            0..m,
            1,
            &|range: std::ops::Range<usize>| {
                let mut acc = 0.0;
                for i in range {
                    for j in 0..m {
                        let wij = w[i] * w[j] * s[i * m + j];
                        if wij == 0.0 {
                            continue;
                        }
                        for k in 0..m {
                            let wijk = wij * w[k] * s[i * m + k] * s[j * m + k];
                            let mut inner = 0.0;
                            for l in 0..m {
                                inner +=
                                    w[l] * s[i * m + l] * s[j * m + l] * s[k * m + l];
                            }
                            acc += wijk * inner;
                        }
                    }
                }
                acc
            },
            &|a, b| a + b,
        ),
    };
    Ok(pref * total)
}

/// Draw configuration `index` of the stream identified by `seed`: eigenvalues
/// of `B⁻¹A` for iid complex Ginibre `A, B` of size `n+1`, pushed to the
/// sphere stereographically. Distinct `(seed, index)` pairs use disjoint
/// ChaCha streams, so any subset of indices can be drawn independently and in
/// parallel with bitwise-reproducible results.
pub fn sample_stream(n: usize, seed: u64, index: u64) -> PointConfiguration {
    let dim = n + 1;
    for attempt in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index.wrapping_mul(16).wrapping_add(attempt));
        let mut ginibre = || {
            DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
        };
        let a = ginibre();
        let b = ginibre();
        let Some(m) = b.lu().solve(&a) else { continue };
        let Some(schur) = m.try_schur(1e-13, 400) else { continue };
        let Some(eig) = schur.eigenvalues() else { continue };
        let points = eig.iter().map(|z| SpherePoint::from_z(*z)).collect();
        return PointConfiguration::new(points);
    }
    // Ginibre matrices are almost surely invertible and complex Schur always
    // converges in practice; eight straight failures means broken arithmetic.
    panic!("spherical ensemble: persistent linear-algebra failure");
}

/// Convenience wrapper for a single draw.
pub fn sample(n: usize, seed: u64) -> PointConfiguration {
    sample_stream(n, seed, 0)
}

/// Monte-Carlo estimate of `B_n(φ)`.
#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub n: usize,
    pub samples: usize,
    /// `log` of the empirical mean of `exp(Σ_i φ(x_i))`.
    pub b_estimate: f64,
    /// Delta-method standard error of the log-mean.
    pub std_error: f64,
}

/// Streaming log-sum-exp state: tracks `max`, `Σ e^{x−max}` and `Σ e^{2(x−max)}`.
#[derive(Clone, Copy)]
struct LseState {
    max: f64,
    s1: f64,
    s2: f64,
    count: u64,
}

impl LseState {
    const EMPTY: LseState = LseState { max: f64::NEG_INFINITY, s1: 0.0, s2: 0.0, count: 0 };

    fn push(&mut self, x: f64) {
        if x > self.max {
            let r = (self.max - x).exp(); // 0 when the state was empty
            self.s1 = self.s1 * r + 1.0;
            self.s2 = self.s2 * r * r + 1.0;
            self.max = x;
        } else {
            let r = (x - self.max).exp();
            self.s1 += r;
            self.s2 += r * r;
        }
        self.count += 1;
    }

    fn merge(a: LseState, b: LseState) -> LseState {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let max = a.max.max(b.max);
        let (ra, rb) = ((a.max - max).exp(), (b.max - max).exp());
        LseState {
            max,
            s1: a.s1 * ra + b.s1 * rb,
            s2: a.s2 * ra * ra + b.s2 * rb * rb,
            count: a.count + b.count,
        }
    }
}

/// Estimate `B_n(φ) = log E[exp(Σφ(x_i))]` from `samples` independent draws of
/// the process. Deterministic for fixed `(seed, samples)` regardless of the
/// thread count: indices map to disjoint generator streams and the reduction
/// tree is fixed.
pub fn mc_estimate_b(
    n: usize,
    phi: &BandLimitedFunction,
    samples: usize,
    seed: u64,
) -> Result<McReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let state = parallel::map_reduce_range(
        0..samples,
        256,
        &|range: std::ops::Range<usize>| {
            let mut scratch = Vec::new();
            let mut st = LseState::EMPTY;
            for idx in range {
                let cfg = sample_stream(n, seed, idx as u64);
                let x: f64 = cfg
                    .points()
                    .iter()
                    .map(|p| funcspace::eval_at_with(phi, p, &mut scratch))
                    .sum();
                st.push(x);
            }
            st
        },
        &LseState::merge,
    );
    let count = state.count as f64;
    let m1 = state.s1 / count;
    let m2 = state.s2 / count;
    let var = ((m2 - m1 * m1) * count / (count - 1.0)).max(0.0);
    Ok(McReport {
        n,
        samples,
        b_estimate: state.max + m1.ln(),
        std_error: (var / count).sqrt() / m1,
    })
}

/// Single-site Metropolis chain targeting the same density — a deliberately
/// simple, Gram-free cross-check of the exact sampler.
pub struct MetropolisSampler {
    n: usize,
    rng: ChaCha8Rng,
    points: Vec<SpherePoint>,
    accepted: u64,
    proposed: u64,
}

fn uniform_point(rng: &mut ChaCha8Rng) -> SpherePoint {
    let t: f64 = rng.random_range(-1.0..=1.0);
    let theta: f64 = rng.random_range(0.0..TAU);
    SpherePoint::from_polar(t, theta)
}

impl MetropolisSampler {
    pub fn new(n: usize, seed: u64) -> MetropolisSampler {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..=n).map(|_| uniform_point(&mut rng)).collect();
        MetropolisSampler { n, rng, points, accepted: 0, proposed: 0 }
    }

    /// Propose re-drawing one point uniformly; accept by the density ratio.
    /// Returns whether the move was accepted.
    pub fn step(&mut self) -> bool {
        let site = self.rng.random_range(0..self.points.len());
        let candidate = uniform_point(&mut self.rng);
        let mut log_ratio = 0.0;
        for (j, p) in self.points.iter().enumerate() {
            if j != site {
                log_ratio += sin2_half_distance(&candidate, p).ln()
                    - sin2_half_distance(&self.points[site], p).ln();
            }
        }
        self.proposed += 1;
        let u: f64 = self.rng.random();
        if u.ln() < log_ratio {
            self.points[site] = candidate;
            self.accepted += 1;
            true
        } else {
            false
        }
    }

    pub fn config(&self) -> PointConfiguration {
        PointConfiguration::new(self.points.clone())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposed as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::FamilyDescriptor;
    use crate::gram;
    use std::sync::Arc;

    #[test]
    fn prefactor_small_n() {
        assert!(kn_log_prefactor(0).abs() < 1e-13);
        assert!((kn_log_prefactor(1) - 2.0f64.ln()).abs() < 1e-13);
        assert!((kn_log_prefactor(2) - 2.0 * 3.0f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn density_normalizes_to_one() {
        for n in 0..=2usize {
            let rule = QuadratureRule::for_degree((2 * n).max(1)).unwrap();
            let total = normalization_check(n, &rule).unwrap();
            assert!((total - 1.0).abs() < 1e-12, "n = {n}: {total}");
        }
        let rule = QuadratureRule::for_degree(6).unwrap();
        let total = normalization_check(3, &rule).unwrap();
        assert!((total - 1.0).abs() < 1e-11, "n = 3: {total}");
        assert!(normalization_check(4, &rule).is_err());
        assert!(normalization_check(2, &QuadratureRule::for_degree(2).unwrap()).is_err());
    }

    #[test]
    fn density_is_minus_infinity_on_collision() {
        let p = SpherePoint::from_z(Complex64::new(0.3, -0.2));
        let q = SpherePoint::from_z(Complex64::new(-1.0, 0.4));
        let cfg = PointConfiguration::new(vec![p, q, p]);
        assert_eq!(kn_log_density(2, &cfg).unwrap(), f64::NEG_INFINITY);
        assert!(kn_log_density(1, &cfg).is_err());
    }

    #[test]
    fn density_is_exchangeable_and_rotation_invariant() {
        let zs = [
            Complex64::new(0.3, -0.2),
            Complex64::new(-1.1, 0.4),
            Complex64::new(0.05, 2.3),
            Complex64::new(-0.6, -0.9),
        ];
        let pts: Vec<SpherePoint> = zs.iter().map(|z| SpherePoint::from_z(*z)).collect();
        let base = kn_log_density(3, &PointConfiguration::new(pts.clone())).unwrap();
        // Permutation.
        let perm = vec![pts[2], pts[0], pts[3], pts[1]];
        let permuted = kn_log_density(3, &PointConfiguration::new(perm)).unwrap();
        assert!((base - permuted).abs() < 1e-12);
        // Rotation about the polar axis and a cyclic axis relabeling.
        let c = 0.7f64.cos();
        let s = 0.7f64.sin();
        let rotated: Vec<SpherePoint> = pts
            .iter()
            .map(|p| {
                let u = p.u();
                SpherePoint::from_unit([c * u[0] - s * u[1], s * u[0] + c * u[1], u[2]])
            })
            .collect();
        let rot = kn_log_density(3, &PointConfiguration::new(rotated)).unwrap();
        assert!((base - rot).abs() < 1e-12);
        let cycled: Vec<SpherePoint> = pts
            .iter()
            .map(|p| {
                let u = p.u();
                SpherePoint::from_unit([u[1], u[2], u[0]])
            })
            .collect();
        let cyc = kn_log_density(3, &PointConfiguration::new(cycled)).unwrap();
        assert!((base - cyc).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let a = sample_stream(2, 7, 3);
        let b = sample_stream(2, 7, 3);
        assert_eq!(a.len(), 3);
        for (p, q) in a.points().iter().zip(b.points()) {
            assert_eq!(p.u(), q.u());
        }
        // Different indices give different draws.
        let c = sample_stream(2, 7, 4);
        assert!(a.points()[0].u() != c.points()[0].u());
    }

    #[test]
    fn marginals_are_uniform_chi_squared() {
        // Each point of the process is marginally uniform on the sphere.
        // Count octant occupancies over many configurations; negative
        // association between points only tightens the statistic, so the
        // χ²(7) 99% threshold is conservative.
        let configs = 4000;
        let n = 2;
        let mut counts = [0u64; 8];
        for idx in 0..configs {
            for p in sample_stream(n, 2024, idx).points() {
                let u = p.u();
                let cell = ((u[0] > 0.0) as usize)
                    | (((u[1] > 0.0) as usize) << 1)
                    | (((u[2] > 0.0) as usize) << 2);
                counts[cell] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        assert_eq!(total, configs * (n as u64 + 1));
        let expect = total as f64 / 8.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 18.475, "χ² = {chi2}, counts {counts:?}");
    }

    #[test]
    fn pair_distance_moment_matches_closed_form() {
        // Under K_1 the density is 2·sin²(d/2), so E[sin²(d/2)] = 2/3 and
        // Var[sin²(d/2)] = 1/2 − 4/9 = 1/18.
        let samples = 20_000u64;
        let mut sum = 0.0;
        for idx in 0..samples {
            let cfg = sample_stream(1, 99, idx);
            sum += sin2_half_distance(&cfg.points()[0], &cfg.points()[1]);
        }
        let mean = sum / samples as f64;
        let sigma = (1.0f64 / 18.0).sqrt() / (samples as f64).sqrt();
        assert!(
            (mean - 2.0 / 3.0).abs() < 4.0 * sigma,
            "mean {mean}, 4σ = {}",
            4.0 * sigma
        );
    }

    #[test]
    fn mc_estimate_agrees_with_gram_determinant() {
        let n = 2;
        let phi = funcspace::make_family(&FamilyDescriptor::Random {
            l_max: 2,
            energy: 0.8,
            seed: 5,
        })
        .unwrap();
        let rule = Arc::new(QuadratureRule::default_for(n, 2).unwrap());
        let exact = gram::log_det_b(&phi, n, &rule).unwrap();
        let rep = mc_estimate_b(n, &phi, 20_000, 31).unwrap();
        assert!(rep.std_error < 0.05, "σ = {}", rep.std_error);
        assert!(
            (rep.b_estimate - exact).abs() < 4.0 * rep.std_error.max(1e-3),
            "mc {} vs exact {} (σ = {})",
            rep.b_estimate,
            exact,
            rep.std_error
        );
        assert!(mc_estimate_b(n, &phi, 1, 31).is_err());
    }

    #[test]
    fn metropolis_reproduces_pair_moment() {
        let mut chain = MetropolisSampler::new(1, 12345);
        for _ in 0..2_000 {
            chain.step();
        }
        let mut sum = 0.0;
        let steps = 30_000;
        for _ in 0..steps {
            chain.step();
            let cfg = chain.config();
            sum += sin2_half_distance(&cfg.points()[0], &cfg.points()[1]);
        }
        let mean = sum / steps as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.03, "chain mean {mean}");
        let rate = chain.acceptance_rate();
        assert!((0.05..0.95).contains(&rate), "acceptance {rate}");
    }
}
