//! The weighted Gram matrix of monomial sections and the functionals `B_n`,
//! `A_n`.
//!
//! The holomorphic sections are `α_i = √((n+1)·C(n,i))·zⁱ`, `i = 0..=n`,
//! orthonormal at `φ = 0` for the pairing
//!
//! ```text
//! ⟨α_i, α_j⟩_φ = ∫ α_i·conj(α_j) · e^φ / (1+|z|²)ⁿ dμ ,
//! ```
//!
//! and the functionals are
//!
//! ```text
//! B_n(φ) = log det ⟨α_i, α_j⟩_φ ,
//! A_n(φ) = −½·E(φ) − (n+1)·∫φ dμ + B_n(φ) .
//! ```
//!
//! `A_0 ≤ 0` is the Moser-Trudinger/Onofri inequality; the conjecture probed
//! by this crate is `A_n ≤ 0` for every `n`.
//!
//! # Assembly
//!
//! In polar coordinates `z = ρ·e^{iθ}` with `ρ² = (1+t)/(1−t)`,
//!
//! ```text
//! M_ij = Σ_r w_r · P_{r,i} · P_{r,j} · F_{i−j}(r) ,
//! P_{r,i} = exp(ℓ_i + (i/2)·ln((1+t_r)/(1−t_r)) + (n/2)·ln((1−t_r)/2)) ,
//! F_m(r) = (1/n_az)·Σ_p e^{φ(r,p)}·e^{i·m·θ_p} ,
//! ```
//!
//! with `ℓ_i = ½·ln((n+1)·C(n,i))`. The rearrangement keeps everything
//! bounded: `P_{r,i}² = (n+1)·C(n,i)·xⁱ(1−x)^{n−i} ≤ n+1` with
//! `x = (1+t)/2 ∈ (0,1)` (a scaled binomial probability), so no intermediate
//! over- or underflows for any `n`, and the azimuthal factors `F_m` are ring
//! DFTs of `e^φ` costing `O(rings·n·n_az)` total.

use crate::funcspace::{self, BandLimitedFunction, GridFunction};
use crate::linalg::{cholesky, log_det_from_cholesky, Cmatrix};
use crate::sphere::QuadratureRule;
use crate::special::{ln_binomial, ln_factorial};
use crate::{parallel, Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// `ℓ_i = ½·ln((n+1)·C(n,i))`, the log of the normalization of `α_i`.
pub fn basis_log_weight(n: usize, i: usize) -> f64 {
    0.5 * (((n + 1) as f64).ln() + ln_binomial(n, i))
}

/// The Gram matrix `⟨α_i, α_j⟩_φ`, by construction Hermitian and (for finite
/// φ) positive-definite.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    n: usize,
    m: Cmatrix,
}

impl GramMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn matrix(&self) -> &Cmatrix {
        &self.m
    }

    /// `B_n = log det M` via Cholesky. A pivot failure is reported as a
    /// quadrature-coarseness diagnostic (the exact matrix is positive).
    pub fn log_det(&self) -> Result<f64> {
        Ok(log_det_from_cholesky(&cholesky(&self.m)?))
    }
}

/// Shared ring-DFT assembly of `Σ_k w_k·g_k·a_i(x_k)·conj(a_j(x_k))` for node
/// values `g` and sections `a_i = e^{ℓ_i}·zⁱ/(1+|z|²)^{n/2}` with caller-chosen
/// log-normalizations `ℓ_i` (the Gram matrix uses `basis_log_weight` and
/// `g = e^φ`; the unweighted moment matrix uses zeros; variational code feeds
/// `g = f·e^φ`). Exact for the azimuthal integrals as long as
/// `rule.azimuth_count() > 2n + azimuthal bandwidth of g`.
pub(crate) fn weighted_moment_matrix(
    values: &[f64],
    rule: &Arc<QuadratureRule>,
    n: usize,
    log_consts: &[f64],
) -> Cmatrix {
    debug_assert_eq!(values.len(), rule.len());
    let n_az = rule.azimuth_count();
    let dim = n + 1;
    let (cos_tab, sin_tab) = {
        let mut c = Vec::with_capacity(n_az);
        let mut s = Vec::with_capacity(n_az);
        for k in 0..n_az {
            let th = std::f64::consts::TAU * k as f64 / n_az as f64;
            c.push(th.cos());
            s.push(th.sin());
        }
        (c, s)
    };

    let ring_term = |r: usize| -> Vec<Complex64> {
        let t = rule.ring_t(r);
        let w_r = rule.ring_weight(r);
        let half_log_ratio = 0.5 * ((1.0 + t).ln() - (1.0 - t).ln());
        let half_log_south = 0.5 * ((1.0 - t).ln() - std::f64::consts::LN_2);
        let mut p_row = Vec::with_capacity(dim);
        for (i, lc) in log_consts.iter().enumerate() {
            p_row.push((lc + i as f64 * half_log_ratio + n as f64 * half_log_south).exp());
        }
        // Ring DFT of the node values at frequencies 0..=n.
        let base = rule.node_index(r, 0);
        let ring_vals = &values[base..base + n_az];
        let mut f_re = vec![0.0; dim];
        let mut f_im = vec![0.0; dim];
        for m in 0..dim {
            let (mut re, mut im) = (0.0, 0.0);
            for (p, &v) in ring_vals.iter().enumerate() {
                let k = (m * p) % n_az;
                re += v * cos_tab[k];
                im += v * sin_tab[k];
            }
            f_re[m] = re / n_az as f64;
            f_im[m] = im / n_az as f64;
        }
        // Lower triangle i ≥ j: M_ij += w_r·P_i·P_j·F_{i−j}.
        let mut out = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let amp = w_r * p_row[i] * p_row[j];
                let m = i - j;
                out[i * dim + j] += Complex64::new(amp * f_re[m], amp * f_im[m]);
            }
        }
        out
    };

    let total = parallel::map_reduce_range(
        0..rule.ring_count(),
        2,
        &|rr: std::ops::Range<usize>| {
            let mut acc = vec![Complex64::ZERO; dim * dim];
            for r in rr {
                for (x, y) in acc.iter_mut().zip(ring_term(r)) {
                    *x += y;
                }
            }
            acc
        },
        &|mut a: Vec<Complex64>, b: Vec<Complex64>| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    );

    let mut m = Cmatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = total[i * dim + j];
            m.set(i, j, v);
            if i != j {
                m.set(j, i, v.conj());
            }
        }
    }
    m
}

/// Assemble the Gram matrix of `φ` (given on its grid) for `O(n)` sections.
///
/// Requires `rule.degree() ≥ 2n`; accuracy for `φ ≠ 0` additionally depends
/// on the rule resolving `e^φ` (see [`QuadratureRule::default_for`]).
pub fn gram_matrix(phi: &GridFunction, n: usize) -> Result<GramMatrix> {
    if phi.rule.degree() < 2 * n {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < 2n = {}",
            phi.rule.degree(),
            2 * n
        )));
    }
    let log_consts: Vec<f64> = (0..=n).map(|i| basis_log_weight(n, i)).collect();
    let e_phi: Vec<f64> = phi.values.iter().map(|v| v.exp()).collect();
    Ok(GramMatrix { n, m: weighted_moment_matrix(&e_phi, &phi.rule, n, &log_consts) })
}

/// `B_n(φ) = log det ⟨α_i, α_j⟩_φ`.
pub fn log_det_b(phi: &BandLimitedFunction, n: usize, rule: &Arc<QuadratureRule>) -> Result<f64> {
    gram_matrix(&funcspace::evaluate(phi, rule)?, n)?.log_det()
}

/// All the pieces of `A_n(φ)` in one pass.
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalReport {
    pub n: usize,
    pub l_max: usize,
    pub rule_degree: usize,
    /// `E(φ) = Σ l(l+1)c²`.
    pub energy: f64,
    /// `∫ φ dμ`.
    pub mean: f64,
    /// `B_n(φ)`.
    pub b_n: f64,
    /// `A_n = −½·energy − (n+1)·mean + b_n`.
    pub a_n: f64,
}

/// Evaluate `A_n(φ)` and its components.
pub fn functional_a(
    phi: &BandLimitedFunction,
    n: usize,
    rule: &Arc<QuadratureRule>,
) -> Result<FunctionalReport> {
    let b_n = log_det_b(phi, n, rule)?;
    let energy = phi.dirichlet_energy();
    let mean = phi.mean();
    Ok(FunctionalReport {
        n,
        l_max: phi.l_max(),
        rule_degree: rule.degree(),
        energy,
        mean,
        b_n,
        a_n: -0.5 * energy - (n + 1) as f64 * mean + b_n,
    })
}

/// A finite positive measure on radii `|z|`: atoms `(radius, mass)`.
#[derive(Clone, Debug)]
pub struct RadialMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl RadialMeasure {
    /// `log ∫ |z|^p dλ`, stable in log space.
    fn log_moment(&self, p: f64) -> f64 {
        let mut terms: Vec<f64> = Vec::with_capacity(self.atoms.len());
        for &(r, m) in &self.atoms {
            if r == 0.0 {
                // r^0 = 1 even at r = 0; positive p kills the atom.
                if p == 0.0 {
                    terms.push(m.ln());
                }
            } else {
                terms.push(m.ln() + p * r.ln());
            }
        }
        log_sum_exp(&terms)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return f64::NEG_INFINITY;
    }
    mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
}

/// The permutation products of the determinant lemma:
/// `S_σ = Π_i ∫ |z|^{a_i + a_{σ(i)}} dλ`, returned as
/// `(log S_σ, log S_id)`. The lemma asserts `S_σ ≤ S_id` for ascending
/// nonnegative exponents `a` (a consequence of log-convexity of the moment
/// function `p ↦ log ∫ |z|^p dλ`).
pub fn permutation_products(
    a: &[f64],
    measure: &RadialMeasure,
    sigma: &[usize],
) -> Result<(f64, f64)> {
    if measure.atoms.is_empty() {
        return Err(Error::InvalidArgument("empty measure".into()));
    }
    for &(r, m) in &measure.atoms {
        if !(r >= 0.0 && r.is_finite() && m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad measure atom ({r}, {m})")));
        }
    }
    if a.is_empty() || a[0] < 0.0 || a.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "exponents must be ascending and nonnegative".into(),
        ));
    }
    if sigma.len() != a.len() {
        return Err(Error::LengthMismatch(format!(
            "permutation of length {} for {} exponents",
            sigma.len(),
            a.len()
        )));
    }
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        if s >= sigma.len() || seen[s] {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        seen[s] = true;
    }
    let mut log_s_sigma = 0.0;
    let mut log_s_id = 0.0;
    for (i, &s) in sigma.iter().enumerate() {
        log_s_sigma += measure.log_moment(a[i] + a[s]);
        log_s_id += measure.log_moment(2.0 * a[i]);
    }
    Ok((log_s_sigma, log_s_id))
}

/// Result of [`determinant_domination_check`].
#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub n: usize,
    /// `log |det N|` of the unweighted moment matrix `N_ij = ∫ zⁱ·conj(z)ʲ dλ`.
    pub log_abs_det: f64,
    /// `log((n+1)!·S_id)` with `S_id = Π_i ∫ |z|^{2i} dλ`.
    pub log_bound: f64,
    pub passes: bool,
}

/// Check the determinant bound `|det N| ≤ (n+1)!·S_id` for
/// `dλ = e^φ/(1+|z|²)ⁿ dμ` — the Leibniz expansion has `(n+1)!` terms, each
/// bounded by `S_id` through the permutation lemma.
pub fn determinant_domination_check(n: usize, phi: &GridFunction) -> Result<DominationReport> {
    if n > 8 {
        return Err(Error::InvalidArgument(format!(
            "domination check limited to n ≤ 8 (factorial bound), got {n}"
        )));
    }
    if phi.rule.degree() < 2 * n {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < 2n = {}",
            phi.rule.degree(),
            2 * n
        )));
    }
    let zeros = vec![0.0; n + 1];
    let e_phi: Vec<f64> = phi.values.iter().map(|v| v.exp()).collect();
    let nm = weighted_moment_matrix(&e_phi, &phi.rule, n, &zeros);
    let log_abs_det = log_det_from_cholesky(&cholesky(&nm)?);
    // S_id in log space from the diagonal: N_ii = ∫|z|^{2i} dλ.
    let mut log_s_id = 0.0;
    for i in 0..=n {
        log_s_id += nm.at(i, i).re.ln();
    }
    let log_bound = ln_factorial(n + 1) + log_s_id;
    Ok(DominationReport { n, log_abs_det, log_bound, passes: log_abs_det <= log_bound })
}
