//! The conformal factor `φ` and the linear functionals applied to it.
//!
//! `φ` is represented by real coefficients in the real spherical-harmonic
//! basis `Ỹ_{l,m}` orthonormal with respect to the *probability* measure `μ`
//! (so `∫ Ỹ_{l,m} Ỹ_{l',m'} dμ = δ` — note the 4π-free normalization):
//!
//! ```text
//! Ỹ_{l,0}  = S_{l,0}(t),       Ỹ_{l,±m} = √2·S_{l,m}(t)·{cos, sin}(mθ),
//! ```
//!
//! where `t = u₃`, `θ` is the azimuth and `S_{l,m}` are associated Legendre
//! functions normalized to `½∫ S² dt = 1`. Examples pinned by tests:
//! `Ỹ_{0,0} = 1`, `Ỹ_{1,0} = √3·u₃`, `Ỹ_{1,1} = √3·u₁`.
//!
//! The Dirichlet energy convention is
//!
//! ```text
//! E(φ) = Σ l(l+1)·c_{l,m}²  =  ∫ |∇φ|² dμ  =  (1/4π)∫_{S²} |∇φ|² dA ,
//! ```
//!
//! the unique scaling for which the Moser-Trudinger inequality
//! `log∫e^φdμ − ∫φdμ ≤ ¼E(φ)` holds with constant ¼ and for which
//! `B_0(φ) = log∫e^φdμ` (both verified in the acceptance suite).

use crate::sphere::{QuadratureRule, SpherePoint};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::sync::Arc;

/// Index into the packed triangular table of `S_{l,m}` values, `0 ≤ m ≤ l`.
#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Length of the triangular table for degrees `0..=l_max`.
#[inline]
pub fn tri_len(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 2) / 2
}

/// Fill `out` (length [`tri_len`]`(l_max)`) with the normalized associated
/// Legendre values `S_{l,m}(t)`, normalized so `½∫_{-1}^{1} S_{l,m}² dt = 1`.
///
/// Stable three-term recurrences: diagonal
/// `S_{m,m} = √((2m+1)/2m)·sinθ·S_{m−1,m−1}`, first off-diagonal
/// `S_{m+1,m} = √(2m+3)·t·S_{m,m}`, then
/// `S_{l,m} = a_{l,m}(t·S_{l−1,m} − b_{l,m}·S_{l−2,m})` with
/// `a = √((4l²−1)/(l²−m²))`, `b = √(((l−1)²−m²)/(4(l−1)²−1))`.
pub fn assoc_legendre_table(t: f64, l_max: usize, out: &mut [f64]) {
    assert_eq!(out.len(), tri_len(l_max));
    let s = (1.0 - t * t).max(0.0).sqrt();
    out[0] = 1.0;
    for m in 1..=l_max {
        out[tri(m, m)] = s * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * out[tri(m - 1, m - 1)];
    }
    for m in 0..l_max {
        out[tri(m + 1, m)] = t * ((2 * m + 3) as f64).sqrt() * out[tri(m, m)];
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let a = ((4 * l * l - 1) as f64 / (l * l - m * m) as f64).sqrt();
            let b =
                (((l - 1) * (l - 1) - m * m) as f64 / (4 * (l - 1) * (l - 1) - 1) as f64).sqrt();
            out[tri(l, m)] = a * (t * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
}

/// `d S_{l,m}/dt` table, from differentiating the recurrences above. `s_tab`
/// must already hold `S_{l,m}(t)`. Only valid away from the poles (`|t| < 1`),
/// which is where all quadrature nodes live.
pub fn assoc_legendre_deriv_table(t: f64, l_max: usize, s_tab: &[f64], out: &mut [f64]) {
    assert_eq!(out.len(), tri_len(l_max));
    let s = (1.0 - t * t).max(f64::MIN_POSITIVE).sqrt();
    let ds = -t / s;
    out[0] = 0.0;
    for m in 1..=l_max {
        let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        out[tri(m, m)] = f * (ds * s_tab[tri(m - 1, m - 1)] + s * out[tri(m - 1, m - 1)]);
    }
    for m in 0..l_max {
        let f = ((2 * m + 3) as f64).sqrt();
        out[tri(m + 1, m)] = f * (s_tab[tri(m, m)] + t * out[tri(m, m)]);
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let a = ((4 * l * l - 1) as f64 / (l * l - m * m) as f64).sqrt();
            let b =
                (((l - 1) * (l - 1) - m * m) as f64 / (4 * (l - 1) * (l - 1) - 1) as f64).sqrt();
            out[tri(l, m)] =
                a * (s_tab[tri(l - 1, m)] + t * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
}

/// Real band-limited function on the sphere: coefficients `c_{l,m}` in the
/// `Ỹ_{l,m}` basis, packed as `index = l² + l + m` for `−l ≤ m ≤ l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandLimitedFunction {
    l_max: usize,
    coeffs: Vec<f64>,
}

/// Packed coefficient index.
#[inline]
pub fn coeff_index(l: usize, m: isize) -> usize {
    debug_assert!(m.unsigned_abs() <= l);
    (l * l + l) as usize + (m + l as isize) as usize - l
}

impl BandLimitedFunction {
    pub fn zero(l_max: usize) -> BandLimitedFunction {
        BandLimitedFunction { l_max, coeffs: vec![0.0; (l_max + 1) * (l_max + 1)] }
    }

    pub fn from_coeffs(l_max: usize, coeffs: Vec<f64>) -> Result<BandLimitedFunction> {
        if coeffs.len() != (l_max + 1) * (l_max + 1) {
            return Err(Error::LengthMismatch(format!(
                "{} coefficients for l_max = {l_max}",
                coeffs.len()
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(BandLimitedFunction { l_max, coeffs })
    }

    #[inline]
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, l: usize, m: isize) -> f64 {
        self.coeffs[coeff_index(l, m)]
    }

    #[inline]
    pub fn coeff_mut(&mut self, l: usize, m: isize) -> &mut f64 {
        &mut self.coeffs[coeff_index(l, m)]
    }

    /// `∫ φ dμ = c_{0,0}` exactly (`Ỹ_{0,0} ≡ 1`).
    #[inline]
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// Dirichlet energy `E(φ) = Σ l(l+1) c²` (see module docs for the
    /// convention).
    pub fn dirichlet_energy(&self) -> f64 {
        let mut e = 0.0;
        for l in 1..=self.l_max {
            let lw = (l * (l + 1)) as f64;
            for m in -(l as isize)..=(l as isize) {
                let c = self.coeff(l, m);
                e += lw * c * c;
            }
        }
        e
    }

    /// Spectral Laplace-Beltrami: `ΔỸ_{l,m} = −l(l+1)·Ỹ_{l,m}`.
    pub fn laplacian(&self) -> BandLimitedFunction {
        let mut out = self.clone();
        for l in 0..=self.l_max {
            let lw = -((l * (l + 1)) as f64);
            for m in -(l as isize)..=(l as isize) {
                *out.coeff_mut(l, m) = lw * self.coeff(l, m);
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> BandLimitedFunction {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn add_constant(&mut self, c: f64) {
        self.coeffs[0] += c;
    }

    /// Set the mean to zero (`c_{0,0} ← 0`).
    pub fn zero_mean(&mut self) {
        self.coeffs[0] = 0.0;
    }

    /// `self + s·other`, promoting to the larger band limit.
    pub fn add_scaled(&self, other: &BandLimitedFunction, s: f64) -> BandLimitedFunction {
        let l_max = self.l_max.max(other.l_max);
        let mut out = BandLimitedFunction::zero(l_max);
        for l in 0..=l_max {
            for m in -(l as isize)..=(l as isize) {
                let a = if l <= self.l_max { self.coeff(l, m) } else { 0.0 };
                let b = if l <= other.l_max { other.coeff(l, m) } else { 0.0 };
                *out.coeff_mut(l, m) = a + s * b;
            }
        }
        out
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Copy into a (possibly different) band limit, truncating or
    /// zero-padding.
    pub fn with_l_max(&self, l_max: usize) -> BandLimitedFunction {
        let mut out = BandLimitedFunction::zero(l_max);
        for l in 0..=l_max.min(self.l_max) {
            for m in -(l as isize)..=(l as isize) {
                *out.coeff_mut(l, m) = self.coeff(l, m);
            }
        }
        out
    }

    /// True if every coefficient with `m ≠ 0` vanishes.
    pub fn is_zonal(&self, tol: f64) -> bool {
        for l in 1..=self.l_max {
            for m in -(l as isize)..=(l as isize) {
                if m != 0 && self.coeff(l, m).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Node-space mirror of a function: values aligned with a quadrature rule.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub rule: Arc<QuadratureRule>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(rule: Arc<QuadratureRule>, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != rule.len() {
            return Err(Error::LengthMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                rule.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite grid value".into()));
        }
        Ok(GridFunction { rule, values })
    }

    pub fn mean(&self) -> f64 {
        self.rule.integrate_real(&self.values).expect("aligned by construction")
    }
}

fn azimuth_tables(n_az: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cos_tab = Vec::with_capacity(n_az);
    let mut sin_tab = Vec::with_capacity(n_az);
    for k in 0..n_az {
        let th = std::f64::consts::TAU * k as f64 / n_az as f64;
        cos_tab.push(th.cos());
        sin_tab.push(th.sin());
    }
    (cos_tab, sin_tab)
}

/// Pointwise synthesis of `φ` on the rule's grid.
///
/// Requires `rule.degree() ≥ l_max` so that downstream quadrature against the
/// synthesized values stays within the rule's exactness budget.
pub fn evaluate(phi: &BandLimitedFunction, rule: &Arc<QuadratureRule>) -> Result<GridFunction> {
    if rule.degree() < phi.l_max {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < l_max {}",
            rule.degree(),
            phi.l_max
        )));
    }
    let l_max = phi.l_max;
    let n_az = rule.azimuth_count();
    let (cos_tab, sin_tab) = azimuth_tables(n_az);
    let mut s_tab = vec![0.0; tri_len(l_max)];
    let mut values = vec![0.0; rule.len()];
    let mut gc = vec![0.0; l_max + 1];
    let mut gs = vec![0.0; l_max + 1];
    for r in 0..rule.ring_count() {
        assoc_legendre_table(rule.ring_t(r), l_max, &mut s_tab);
        for m in 0..=l_max {
            let mut c_acc = 0.0;
            let mut s_acc = 0.0;
            for l in m..=l_max {
                let s_lm = s_tab[tri(l, m)];
                c_acc += phi.coeff(l, m as isize) * s_lm;
                if m > 0 {
                    s_acc += phi.coeff(l, -(m as isize)) * s_lm;
                }
            }
            gc[m] = c_acc;
            gs[m] = s_acc;
        }
        for p in 0..n_az {
            let mut v = gc[0];
            for m in 1..=l_max {
                let k = (m * p) % n_az;
                v += SQRT_2 * (gc[m] * cos_tab[k] + gs[m] * sin_tab[k]);
            }
            values[rule.node_index(r, p)] = v;
        }
    }
    GridFunction::new(Arc::clone(rule), values)
}

/// Coefficients `c_{l,m} = ∫ g·Ỹ_{l,m} dμ` by quadrature.
///
/// Requires `rule.degree() ≥ 2·l_max` (the integrand is a product of two
/// degree-`l_max` functions when `g` is itself synthesized).
pub fn analyze(g: &GridFunction, l_max: usize) -> Result<BandLimitedFunction> {
    let rule = &g.rule;
    if rule.degree() < 2 * l_max {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < 2·l_max = {}",
            rule.degree(),
            2 * l_max
        )));
    }
    let n_az = rule.azimuth_count();
    let (cos_tab, sin_tab) = azimuth_tables(n_az);
    let mut s_tab = vec![0.0; tri_len(l_max)];
    let mut out = BandLimitedFunction::zero(l_max);
    let inv_az = 1.0 / n_az as f64;
    for r in 0..rule.ring_count() {
        assoc_legendre_table(rule.ring_t(r), l_max, &mut s_tab);
        let w_r = rule.ring_weight(r);
        let base = rule.node_index(r, 0);
        for m in 0..=l_max {
            let mut a_acc = 0.0;
            let mut b_acc = 0.0;
            for p in 0..n_az {
                let k = (m * p) % n_az;
                let v = g.values[base + p];
                a_acc += v * cos_tab[k];
                if m > 0 {
                    b_acc += v * sin_tab[k];
                }
            }
            a_acc *= inv_az;
            b_acc *= inv_az;
            for l in m..=l_max {
                let s_lm = s_tab[tri(l, m)];
                if m == 0 {
                    *out.coeff_mut(l, 0) += w_r * s_lm * a_acc;
                } else {
                    *out.coeff_mut(l, m as isize) += w_r * s_lm * SQRT_2 * a_acc;
                    *out.coeff_mut(l, -(m as isize)) += w_r * s_lm * SQRT_2 * b_acc;
                }
            }
        }
    }
    Ok(out)
}

/// Evaluate `φ` at one arbitrary point, reusing `scratch` for the Legendre
/// table (hot path for Monte-Carlo estimators).
pub fn eval_at_with(phi: &BandLimitedFunction, p: &SpherePoint, scratch: &mut Vec<f64>) -> f64 {
    let l_max = phi.l_max;
    scratch.resize(tri_len(l_max), 0.0);
    assoc_legendre_table(p.t(), l_max, scratch);
    let theta = p.azimuth();
    let (sin1, cos1) = theta.sin_cos();
    let mut v = 0.0;
    // m = 0 block.
    for l in 0..=l_max {
        v += phi.coeff(l, 0) * scratch[tri(l, 0)];
    }
    // Chebyshev recurrence for cos(mθ), sin(mθ).
    let mut cos_m = cos1;
    let mut sin_m = sin1;
    for m in 1..=l_max {
        let mut c_acc = 0.0;
        let mut s_acc = 0.0;
        for l in m..=l_max {
            let s_lm = scratch[tri(l, m)];
            c_acc += phi.coeff(l, m as isize) * s_lm;
            s_acc += phi.coeff(l, -(m as isize)) * s_lm;
        }
        v += SQRT_2 * (c_acc * cos_m + s_acc * sin_m);
        let next_cos = cos_m * cos1 - sin_m * sin1;
        let next_sin = sin_m * cos1 + cos_m * sin1;
        cos_m = next_cos;
        sin_m = next_sin;
    }
    v
}

/// Evaluate `φ` at one arbitrary point.
pub fn eval_at(phi: &BandLimitedFunction, p: &SpherePoint) -> f64 {
    let mut scratch = Vec::new();
    eval_at_with(phi, p, &mut scratch)
}

/// `|∇φ|²` on the grid: `(1−t²)(∂_t φ)² + (∂_θ φ)²/(1−t²)` in the unit-round
/// metric. Used by the printed-variant energy term of the second variation.
pub fn gradient_sq_values(phi: &BandLimitedFunction, rule: &Arc<QuadratureRule>) -> Result<Vec<f64>> {
    if rule.degree() < phi.l_max {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < l_max {}",
            rule.degree(),
            phi.l_max
        )));
    }
    let l_max = phi.l_max;
    let n_az = rule.azimuth_count();
    let (cos_tab, sin_tab) = azimuth_tables(n_az);
    let mut s_tab = vec![0.0; tri_len(l_max)];
    let mut d_tab = vec![0.0; tri_len(l_max)];
    let mut out = vec![0.0; rule.len()];
    let mut gc = vec![0.0; l_max + 1];
    let mut gs = vec![0.0; l_max + 1];
    let mut dc = vec![0.0; l_max + 1];
    let mut ds = vec![0.0; l_max + 1];
    for r in 0..rule.ring_count() {
        let t = rule.ring_t(r);
        assoc_legendre_table(t, l_max, &mut s_tab);
        assoc_legendre_deriv_table(t, l_max, &s_tab, &mut d_tab);
        for m in 0..=l_max {
            let (mut c_acc, mut s_acc, mut dc_acc, mut ds_acc) = (0.0, 0.0, 0.0, 0.0);
            for l in m..=l_max {
                let s_lm = s_tab[tri(l, m)];
                let d_lm = d_tab[tri(l, m)];
                c_acc += phi.coeff(l, m as isize) * s_lm;
                dc_acc += phi.coeff(l, m as isize) * d_lm;
                if m > 0 {
                    s_acc += phi.coeff(l, -(m as isize)) * s_lm;
                    ds_acc += phi.coeff(l, -(m as isize)) * d_lm;
                }
            }
            gc[m] = c_acc;
            gs[m] = s_acc;
            dc[m] = dc_acc;
            ds[m] = ds_acc;
        }
        let sin2 = (1.0 - t * t).max(f64::MIN_POSITIVE);
        for p in 0..n_az {
            // ∂_t φ and ∂_θ φ at the node.
            let mut ft = dc[0];
            let mut fth = 0.0;
            for m in 1..=l_max {
                let k = (m * p) % n_az;
                ft += SQRT_2 * (dc[m] * cos_tab[k] + ds[m] * sin_tab[k]);
                fth += SQRT_2 * (m as f64) * (-gc[m] * sin_tab[k] + gs[m] * cos_tab[k]);
            }
            out[rule.node_index(r, p)] = sin2 * ft * ft + fth * fth / sin2;
        }
    }
    Ok(out)
}

/// A term of a zonal family descriptor: coefficient `c` of `Ỹ_{l,0}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonalTerm {
    pub l: usize,
    pub c: f64,
}

/// A term of an explicit harmonic sum: coefficient `c` of `Ỹ_{l,m}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicTerm {
    pub l: usize,
    pub m: isize,
    pub c: f64,
}

/// Deterministic constructions of test functions. `Random*` families are
/// reproducible given the seed (coefficients drawn per `(l, m)` in a fixed
/// order, then rescaled to the exact target energy).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDescriptor {
    /// `φ ≡ c`.
    Constant { c: f64 },
    /// `φ = a·u₃` (coefficient `a/√3` of `Ỹ_{1,0}`; energy `2a²/3`).
    Dipole { a: f64 },
    /// Zonal polynomial with the given `Ỹ_{l,0}` coefficients.
    Zonal { coeffs: Vec<ZonalTerm> },
    /// Explicit harmonic sum.
    Harmonic { terms: Vec<HarmonicTerm> },
    /// Seeded random function with all `1 ≤ l ≤ l_max` modes, scaled to the
    /// exact target energy.
    Random { l_max: usize, energy: f64, seed: u64 },
    /// Seeded random zonal (`m = 0`) function scaled to the target energy.
    RandomZonal { l_max: usize, energy: f64, seed: u64 },
}

/// Build a member of one of the deterministic families.
pub fn make_family(desc: &FamilyDescriptor) -> Result<BandLimitedFunction> {
    match desc {
        FamilyDescriptor::Constant { c } => {
            let mut f = BandLimitedFunction::zero(0);
            *f.coeff_mut(0, 0) = *c;
            Ok(f)
        }
        FamilyDescriptor::Dipole { a } => {
            let mut f = BandLimitedFunction::zero(1);
            *f.coeff_mut(1, 0) = a / 3f64.sqrt();
            Ok(f)
        }
        FamilyDescriptor::Zonal { coeffs } => {
            let l_max = coeffs.iter().map(|t| t.l).max().unwrap_or(0);
            let mut f = BandLimitedFunction::zero(l_max);
            for term in coeffs {
                *f.coeff_mut(term.l, 0) += term.c;
            }
            Ok(f)
        }
        FamilyDescriptor::Harmonic { terms } => {
            let l_max = terms.iter().map(|t| t.l).max().unwrap_or(0);
            let mut f = BandLimitedFunction::zero(l_max);
            for term in terms {
                if term.m.unsigned_abs() > term.l {
                    return Err(Error::InvalidArgument(format!(
                        "harmonic term with |m| = {} > l = {}",
                        term.m, term.l
                    )));
                }
                *f.coeff_mut(term.l, term.m) += term.c;
            }
            Ok(f)
        }
        FamilyDescriptor::Random { l_max, energy, seed } => {
            random_function(*l_max, *energy, *seed, false)
        }
        FamilyDescriptor::RandomZonal { l_max, energy, seed } => {
            random_function(*l_max, *energy, *seed, true)
        }
    }
}

fn random_function(l_max: usize, energy: f64, seed: u64, zonal: bool) -> Result<BandLimitedFunction> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("random family needs l_max ≥ 1".into()));
    }
    if !(energy > 0.0) {
        return Err(Error::InvalidArgument("random family needs a positive target energy".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = BandLimitedFunction::zero(l_max);
    for l in 1..=l_max {
        let damp = 1.0 / (1.0 + (l * (l + 1)) as f64);
        for m in -(l as isize)..=(l as isize) {
            if zonal && m != 0 {
                continue;
            }
            let g: f64 = StandardNormal.sample(&mut rng);
            *f.coeff_mut(l, m) = damp * g;
        }
    }
    let e = f.dirichlet_energy();
    if e <= 0.0 {
        return Err(Error::InvalidArgument("degenerate random draw".into()));
    }
    f.scale((energy / e).sqrt());
    Ok(f)
}

/// Exact equimeasurable profile of one hemisphere: the multiset of
/// `(value, mass)` atoms sorted by value ascending.
#[derive(Clone, Debug)]
pub struct HemiProfile {
    pub atoms: Vec<(f64, f64)>,
}

impl HemiProfile {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

const EQUATOR_TOL: f64 = 1e-14;

/// Split the grid into the two closed hemispheres `{|z| ≤ 1}` (south,
/// `t ≤ 0`) and `{|z| ≥ 1}` (north), an equatorial ring contributing half its
/// mass to each, and return the exact sorted atom profile of each half.
///
/// This layer is exactly equimeasurable with the input by construction — it
/// *is* the input multiset, sorted.
pub fn rearrange_profile(g: &GridFunction) -> (HemiProfile, HemiProfile) {
    let rule = &g.rule;
    let n_az = rule.azimuth_count();
    let mut south: Vec<(f64, f64, usize)> = Vec::new();
    let mut north: Vec<(f64, f64, usize)> = Vec::new();
    for r in 0..rule.ring_count() {
        let t = rule.ring_t(r);
        let w_node = rule.ring_weight(r) / n_az as f64;
        for p in 0..n_az {
            let k = rule.node_index(r, p);
            let v = g.values[k];
            if t < -EQUATOR_TOL {
                south.push((v, w_node, k));
            } else if t > EQUATOR_TOL {
                north.push((v, w_node, k));
            } else {
                south.push((v, 0.5 * w_node, k));
                north.push((v, 0.5 * w_node, k));
            }
        }
    }
    let sort = |v: &mut Vec<(f64, f64, usize)>| {
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(&b.2)));
    };
    sort(&mut south);
    sort(&mut north);
    (
        HemiProfile { atoms: south.into_iter().map(|(v, w, _)| (v, w)).collect() },
        HemiProfile { atoms: north.into_iter().map(|(v, w, _)| (v, w)).collect() },
    )
}

/// Walk a sorted profile, averaging consecutive quantile bands of the given
/// masses. Returns one value per band; boundary atoms are split
/// proportionally, so total mass (hence the mean) is conserved.
fn fill_bands(profile: &HemiProfile, band_masses: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(band_masses.len());
    let mut atom = 0usize;
    let mut atom_left = profile.atoms.first().map_or(0.0, |a| a.1);
    for (bi, &target) in band_masses.iter().enumerate() {
        let last = bi + 1 == band_masses.len();
        let mut need = target;
        let mut acc = 0.0;
        let mut got = 0.0;
        while atom < profile.atoms.len() && (need > 0.0 || last) {
            let (v, _) = profile.atoms[atom];
            let take = if last { atom_left } else { atom_left.min(need) };
            acc += v * take;
            got += take;
            need -= take;
            atom_left -= take;
            if atom_left <= 0.0 {
                atom += 1;
                atom_left = profile.atoms.get(atom).map_or(0.0, |a| a.1);
            }
            if !last && need <= 0.0 {
                break;
            }
        }
        out.push(if got > 0.0 { acc / got } else { 0.0 });
    }
    out
}

/// The two-sided rotationally symmetric rearrangement, discretized.
///
/// Values on `{|z| ≤ 1}` are rearranged into a zonal function increasing in
/// `|z|` (from the south pole up to the equator), values on `{|z| ≥ 1}` into
/// one decreasing in `|z|`, matched at the equator; the output is constant on
/// every azimuthal ring. Ring values are quantile-band averages of the exact
/// sorted profile, so the hemisphere means are conserved to rounding and a
/// zonal input that already has the required monotone shape is a fixed point;
/// equimeasurability holds exactly at the [`rearrange_profile`] layer and
/// approximately (ring-averaged) here.
pub fn rearrange_rotsym(g: &GridFunction) -> GridFunction {
    let rule = &g.rule;
    let n_az = rule.azimuth_count();
    let (south_prof, north_prof) = rearrange_profile(g);

    let mut south_rings: Vec<usize> = Vec::new(); // ascending t: pole → equator
    let mut north_rings: Vec<usize> = Vec::new(); // descending t: pole → equator
    let mut equator_ring: Option<usize> = None;
    for r in 0..rule.ring_count() {
        let t = rule.ring_t(r);
        if t < -EQUATOR_TOL {
            south_rings.push(r);
        } else if t > EQUATOR_TOL {
            north_rings.push(r);
        } else {
            equator_ring = Some(r);
        }
    }
    north_rings.reverse();

    let mut south_masses: Vec<f64> = south_rings.iter().map(|&r| rule.ring_weight(r)).collect();
    let mut north_masses: Vec<f64> = north_rings.iter().map(|&r| rule.ring_weight(r)).collect();
    if let Some(r) = equator_ring {
        south_masses.push(0.5 * rule.ring_weight(r));
        north_masses.push(0.5 * rule.ring_weight(r));
    }
    let south_vals = fill_bands(&south_prof, &south_masses);
    let north_vals = fill_bands(&north_prof, &north_masses);

    let mut ring_value = vec![0.0; rule.ring_count()];
    for (i, &r) in south_rings.iter().enumerate() {
        ring_value[r] = south_vals[i];
    }
    for (i, &r) in north_rings.iter().enumerate() {
        ring_value[r] = north_vals[i];
    }
    if let Some(r) = equator_ring {
        ring_value[r] = 0.5 * (south_vals[south_rings.len()] + north_vals[north_rings.len()]);
    }

    let mut values = vec![0.0; rule.len()];
    for r in 0..rule.ring_count() {
        for p in 0..n_az {
            values[rule.node_index(r, p)] = ring_value[r];
        }
    }
    GridFunction { rule: Arc::clone(rule), values }
}

/// Classical one-sided rearrangement: zonal, non-increasing in `t` (maximum
/// at the south pole), equimeasurable with the input over the whole sphere at
/// quantile-band resolution.
///
/// Unlike the two-sided [`rearrange_rotsym`], this construction satisfies the
/// Pólya-Szegő inequality `E(φ*) ≤ E(φ)` (superlevel sets become polar caps,
/// which minimize boundary length for their area), and the tests use it as a
/// cross-check that the band discretization is faithful.
pub fn rearrange_polar(g: &GridFunction) -> GridFunction {
    let rule = &g.rule;
    let n_az = rule.azimuth_count();
    let mut atoms: Vec<(f64, f64, usize)> = Vec::with_capacity(rule.len());
    for r in 0..rule.ring_count() {
        let w = rule.ring_weight(r) / n_az as f64;
        for p in 0..n_az {
            let k = rule.node_index(r, p);
            atoms.push((g.values[k], w, k));
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(&b.2)));
    let profile = HemiProfile { atoms: atoms.into_iter().map(|(v, w, _)| (v, w)).collect() };
    // Ascending values fill rings from the north pole down (descending t), so
    // the result is non-increasing in t.
    let masses: Vec<f64> = (0..rule.ring_count()).rev().map(|r| rule.ring_weight(r)).collect();
    let vals = fill_bands(&profile, &masses);
    let mut values = vec![0.0; rule.len()];
    for (i, r) in (0..rule.ring_count()).rev().enumerate() {
        for p in 0..n_az {
            values[rule.node_index(r, p)] = vals[i];
        }
    }
    GridFunction { rule: Arc::clone(rule), values }
}

/// Rotate the sphere so that the grid argmax of `φ` lands on the equator
/// (`u₃ = 0`, azimuth 0), then re-expand in harmonics at the same band limit
/// (rotation preserves degree, so the analysis is exact up to quadrature).
///
/// This is the standard pre-step before [`rearrange_rotsym`]: with the max on
/// `|z| = 1`, both closed hemispheres attain the global max, so the two-sided
/// rearrangement matches continuously at the seam.
pub fn rotate_max_to_equator(
    phi: &BandLimitedFunction,
    rule: &Arc<QuadratureRule>,
) -> Result<BandLimitedFunction> {
    if rule.degree() < 2 * phi.l_max {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < 2·l_max = {} required for re-analysis",
            rule.degree(),
            2 * phi.l_max
        )));
    }
    let grid = evaluate(phi, rule)?;
    let mut best = 0usize;
    for (k, v) in grid.values.iter().enumerate() {
        if *v > grid.values[best] {
            best = k;
        }
    }
    let src = grid.rule.nodes()[best].u();
    let dst = [1.0, 0.0, 0.0];
    let rot = rotation_matrix(src, dst);
    // φ'(x) = φ(R⁻¹x); R⁻¹ = Rᵀ for a rotation.
    let mut scratch = Vec::new();
    let values: Vec<f64> = rule
        .nodes()
        .iter()
        .map(|node| {
            let x = node.u();
            let y = [
                rot[0][0] * x[0] + rot[1][0] * x[1] + rot[2][0] * x[2],
                rot[0][1] * x[0] + rot[1][1] * x[1] + rot[2][1] * x[2],
                rot[0][2] * x[0] + rot[1][2] * x[1] + rot[2][2] * x[2],
            ];
            eval_at_with(phi, &SpherePoint::from_unit(y), &mut scratch)
        })
        .collect();
    analyze(&GridFunction::new(Arc::clone(rule), values)?, phi.l_max)
}

/// Rodrigues rotation taking unit vector `a` to unit vector `b`.
fn rotation_matrix(a: [f64; 3], b: [f64; 3]) -> [[f64; 3]; 3] {
    let v = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    if s2 < 1e-24 {
        if c > 0.0 {
            return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        // a ≈ −b: π rotation about any axis ⊥ a; pick one deterministically.
        let axis = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = axis[0] * a[0] + axis[1] * a[1] + axis[2] * a[2];
        let mut p = [axis[0] - d * a[0], axis[1] - d * a[1], axis[2] - d * a[2]];
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        p = [p[0] / n, p[1] / n, p[2] / n];
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = 2.0 * p[i] * p[j] - if i == j { 1.0 } else { 0.0 };
            }
        }
        return r;
    }
    let k = 1.0 / (1.0 + c); // (1 − cos θ)/sin²θ with sinθ·axis = v
    [
        [c + k * v[0] * v[0], k * v[0] * v[1] - v[2], k * v[0] * v[2] + v[1]],
        [k * v[1] * v[0] + v[2], c + k * v[1] * v[1], k * v[1] * v[2] - v[0]],
        [k * v[2] * v[0] - v[1], k * v[2] * v[1] + v[0], c + k * v[2] * v[2]],
    ]
}
