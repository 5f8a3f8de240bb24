//! First and second variation of `A_n`, the Hessian at the round metric, the
//! kernel identity behind it, and the constants `J_n`.
//!
//! Writing `M(φ)` for the Gram matrix and `a_i(x) = e^{ℓ_i}·zⁱ/(1+|z|²)^{n/2}`
//! for the normalized sections, the density
//!
//! ```text
//! h(x) = e^{φ(x)} · a(x)ᴴ M(φ)⁻¹ a(x)
//! ```
//!
//! satisfies `∫ h dμ = n+1` identically (partition of unity), and
//!
//! ```text
//! δA_n(φ)[f]      = ∫ (Δφ + h − (n+1)) · f dμ ,
//! δ²B_n(φ)[f, f]  = ∫ f²·h dμ − tr((M⁻¹·δM[f])²) ,
//! ```
//!
//! so critical points solve `Δφ + h = n+1` and the Hessian of `A_n` adds the
//! energy term `−E(f)` to `δ²B_n`. All grid formulas are exact derivatives of
//! the discretized functional, which is what makes the finite-difference
//! arbitration tests meaningful.

use crate::funcspace::{self, BandLimitedFunction, GridFunction};
use crate::gram::{self, basis_log_weight, GramMatrix};
use crate::linalg::{cholesky, solve_lower, sym_eigen, Cmatrix};
use crate::sphere::QuadratureRule;
use crate::{parallel, quad1d, Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// Everything the variational formulas need at a fixed `(φ, n)`: the Gram
/// matrix, its Cholesky factor `L`, and the density `h_k = ‖ṽ_k‖²` built from
/// the whitened section vectors `ṽ_k = L⁻¹·e^{φ_k/2}·a(x_k)` per node.
pub struct GramCtx {
    n: usize,
    rule: Arc<QuadratureRule>,
    phi_grid: GridFunction,
    gram: GramMatrix,
    chol: Cmatrix,
    h: Vec<f64>,
}

impl GramCtx {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    #[inline]
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// The density `h` on the grid.
    #[inline]
    pub fn density(&self) -> &[f64] {
        &self.h
    }

    #[inline]
    pub fn phi_grid(&self) -> &GridFunction {
        &self.phi_grid
    }
}

/// Build a [`GramCtx`] for `φ` on the given rule.
pub fn gram_context(
    phi: &BandLimitedFunction,
    n: usize,
    rule: &Arc<QuadratureRule>,
) -> Result<GramCtx> {
    let phi_grid = funcspace::evaluate(phi, rule)?;
    let gram = gram::gram_matrix(&phi_grid, n)?;
    let chol = cholesky(gram.matrix())?;
    let dim = n + 1;
    let n_az = rule.azimuth_count();
    let log_consts: Vec<f64> = (0..dim).map(|i| basis_log_weight(n, i)).collect();
    let mut h = vec![0.0; rule.len()];
    let mut buf = vec![Complex64::ZERO; dim];
    for r in 0..rule.ring_count() {
        let t = rule.ring_t(r);
        let half_log_ratio = 0.5 * ((1.0 + t).ln() - (1.0 - t).ln());
        let half_log_south = 0.5 * ((1.0 - t).ln() - std::f64::consts::LN_2);
        // Moduli |a_i| at this ring: e^{ℓ_i}·ρ^i·((1−t)/2)^{n/2}.
        let moduli: Vec<f64> = (0..dim)
            .map(|i| (log_consts[i] + i as f64 * half_log_ratio + n as f64 * half_log_south).exp())
            .collect();
        for p in 0..n_az {
            let k = rule.node_index(r, p);
            let amp = (0.5 * phi_grid.values[k]).exp();
            let (sin_th, cos_th) = rule.theta(p).sin_cos();
            let phase1 = Complex64::new(cos_th, sin_th);
            let mut phase = Complex64::ONE;
            for (i, m) in moduli.iter().enumerate() {
                buf[i] = phase * (amp * m);
                phase *= phase1;
            }
            solve_lower(&chol, &mut buf);
            h[k] = buf.iter().map(|v| v.norm_sqr()).sum();
        }
    }
    Ok(GramCtx { n, rule: Arc::clone(rule), phi_grid, gram, chol, h })
}

/// The Euler-Lagrange residual `R = Δφ + h − (n+1)` on the grid.
///
/// `R ≡ 0` characterizes critical points of `A_n`; at `φ = 0` the residual
/// vanishes identically because `h ≡ n+1` there.
pub fn euler_residual(ctx: &GramCtx, phi: &BandLimitedFunction) -> Result<GridFunction> {
    let lap = funcspace::evaluate(&phi.laplacian(), &ctx.rule)?;
    let shift = (ctx.n + 1) as f64;
    let values: Vec<f64> =
        ctx.h.iter().zip(&lap.values).map(|(h, l)| h + l - shift).collect();
    GridFunction::new(Arc::clone(&ctx.rule), values)
}

/// The L²(μ)-gradient of `A_n` at `φ`, projected to band limit `l_max_out`:
/// coefficients `∫ R·Ỹ_{l,m} dμ` of the Euler residual.
pub fn gradient_a(
    ctx: &GramCtx,
    phi: &BandLimitedFunction,
    l_max_out: usize,
) -> Result<BandLimitedFunction> {
    funcspace::analyze(&euler_residual(ctx, phi)?, l_max_out)
}

/// Which energy term the second variation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyTerm {
    /// `−E(f)`, the exact `t`-derivative of `−½E(φ+tf)`: the form consistent
    /// with finite differences of `A_n` (the shipped default).
    Spectral,
    /// `−∫|∇f|²·e^φ dμ`, a printed variant of the second variation kept for
    /// comparison. Agrees with `Spectral` at `φ = 0`, differs otherwise; the
    /// finite-difference arbitration test rules in favor of `Spectral`.
    WeightedGrid,
}

/// Second variation `d²/dt² A_n(φ + t·f)` at `t = 0`.
pub fn second_variation(
    ctx: &GramCtx,
    f: &BandLimitedFunction,
    term: EnergyTerm,
) -> Result<f64> {
    let rule = &ctx.rule;
    let dim = ctx.n + 1;
    let f_grid = funcspace::evaluate(f, rule)?;
    // δM[f] = Σ_k w_k f_k e^{φ_k} a aᴴ, whitened by L on both sides.
    let vals: Vec<f64> = f_grid
        .values
        .iter()
        .zip(&ctx.phi_grid.values)
        .map(|(f, p)| f * p.exp())
        .collect();
    let log_consts: Vec<f64> = (0..dim).map(|i| basis_log_weight(ctx.n, i)).collect();
    let mf = gram::weighted_moment_matrix(&vals, rule, ctx.n, &log_consts);
    let mtil = whiten(&ctx.chol, &mf);
    let mut trace_sq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            trace_sq += mtil.at(i, j).norm_sqr();
        }
    }
    let f2h: Vec<f64> =
        f_grid.values.iter().zip(&ctx.h).map(|(f, h)| f * f * h).collect();
    let d2b = rule.integrate_real(&f2h)? - trace_sq;
    let energy = match term {
        EnergyTerm::Spectral => -f.dirichlet_energy(),
        EnergyTerm::WeightedGrid => {
            let gsq = funcspace::gradient_sq_values(f, rule)?;
            let weighted: Vec<f64> = gsq
                .iter()
                .zip(&ctx.phi_grid.values)
                .map(|(g, p)| g * p.exp())
                .collect();
            -rule.integrate_real(&weighted)?
        }
    };
    Ok(energy + d2b)
}

/// `L⁻¹ · M · L⁻ᴴ` for lower-triangular `L` (small matrices, direct solves).
fn whiten(l: &Cmatrix, m: &Cmatrix) -> Cmatrix {
    let dim = m.n;
    // Columns of X = L⁻¹ M.
    let mut x = Cmatrix::zeros(dim);
    let mut col = vec![Complex64::ZERO; dim];
    for j in 0..dim {
        for i in 0..dim {
            col[i] = m.at(i, j);
        }
        solve_lower(l, &mut col);
        for i in 0..dim {
            x.set(i, j, col[i]);
        }
    }
    // Rows of X·L⁻ᴴ: (L⁻¹·Xᴴ)ᴴ applied row-wise.
    let mut out = Cmatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            col[j] = x.at(i, j).conj();
        }
        solve_lower(l, &mut col);
        for j in 0..dim {
            out.set(i, j, col[j].conj());
        }
    }
    out
}

/// Spectrum of the Hessian of `A_n` at `φ = 0` in the real harmonic basis up
/// to `l_max`.
#[derive(Clone, Debug, Serialize)]
pub struct HessianSpectrum {
    pub n: usize,
    pub l_max: usize,
    /// Full dimension `(l_max+1)²` including the constant direction.
    pub dim: usize,
    /// Largest coupling of the constant direction to anything (exactly 0 in
    /// exact arithmetic, by shift invariance).
    pub lambda_const: f64,
    /// Eigenvalues on the zero-mean complement, ascending.
    pub eigenvalues: Vec<f64>,
}

impl HessianSpectrum {
    /// Largest eigenvalue orthogonal to constants.
    pub fn top(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

/// Assemble and diagonalize the Hessian `Q_ab = δ²A_n(0)[Ỹ_a, Ỹ_b]`.
///
/// At `φ = 0` the Gram matrix is the identity and `h ≡ n+1`, so
/// `Q_ab = −l_a(l_a+1)·δ_ab + (n+1)∫Ỹ_aỸ_b dμ − tr(M_a·M_b)` with
/// `M_a = ∫ Ỹ_a·a·aᴴ dμ`. The constant direction is an exact null vector
/// (shift invariance); its row is measured, reported, and removed before
/// diagonalizing.
pub fn hessian_spectrum(
    n: usize,
    l_max: usize,
    rule: &Arc<QuadratureRule>,
) -> Result<HessianSpectrum> {
    if rule.degree() < 2 * l_max.max(n) {
        return Err(Error::QuadratureTooCoarse(format!(
            "rule degree {} < 2·max(l_max, n) = {}",
            rule.degree(),
            2 * l_max.max(n)
        )));
    }
    let dim_q = (l_max + 1) * (l_max + 1);
    let dim_m = n + 1;
    let log_consts: Vec<f64> = (0..dim_m).map(|i| basis_log_weight(n, i)).collect();

    // Basis grids and their moment matrices.
    let mut grids: Vec<Vec<f64>> = Vec::with_capacity(dim_q);
    let mut moments: Vec<Cmatrix> = Vec::with_capacity(dim_q);
    for l in 0..=l_max {
        for m in -(l as isize)..=(l as isize) {
            let mut e = BandLimitedFunction::zero(l);
            *e.coeff_mut(l, m) = 1.0;
            let g = funcspace::evaluate(&e, rule)?;
            moments.push(gram::weighted_moment_matrix(&g.values, rule, n, &log_consts));
            grids.push(g.values);
        }
    }

    let ell = |a: usize| -> f64 {
        let l = (a as f64).sqrt().floor() as usize;
        (l * (l + 1)) as f64
    };
    let w = rule.weights();
    let mut q = vec![0.0; dim_q * dim_q];
    for a in 0..dim_q {
        for b in 0..=a {
            let mut overlap = 0.0;
            for k in 0..w.len() {
                overlap += w[k] * grids[a][k] * grids[b][k];
            }
            let mut tr = 0.0;
            for i in 0..dim_m {
                for j in 0..dim_m {
                    // tr(M_a M_b) = Σ_ij (M_a)_ij · conj((M_b)_ij) for Hermitian factors.
                    let x = moments[a].at(i, j);
                    let y = moments[b].at(i, j);
                    tr += x.re * y.re + x.im * y.im;
                }
            }
            let mut val = (n + 1) as f64 * overlap - tr;
            if a == b {
                val -= ell(a);
            }
            q[a * dim_q + b] = val;
            q[b * dim_q + a] = val;
        }
    }

    let lambda_const =
        (0..dim_q).map(|b| q[b].abs()).fold(0.0f64, f64::max);
    // Reduced form: delete the constant row/column.
    let dim_r = dim_q - 1;
    let mut qr = vec![0.0; dim_r * dim_r];
    for a in 0..dim_r {
        for b in 0..dim_r {
            qr[a * dim_r + b] = q[(a + 1) * dim_q + (b + 1)];
        }
    }
    let (eigenvalues, _) = sym_eigen(&qr, dim_r, false);
    Ok(HessianSpectrum { n, l_max, dim: dim_q, lambda_const, eigenvalues })
}

/// Both sides of the second-variation kernel identity at `φ = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct KernelIdentityReport {
    pub n: usize,
    /// `Σ_i ∫f²·|a_i|² dμ − Σ_ij |∫f·a_i·conj(a_j) dμ|²  =  (n+1)∫f² − ‖M_f‖²_F`.
    pub lhs: f64,
    /// `(n+1)²/2 · ∬ (f(x)−f(y))²·cos^{2n}(d(x,y)/2) dμ(x) dμ(y)`.
    pub rhs: f64,
    /// `E(f)`, for the comparison `lhs ≤ E(f)` (local maximality of `A_n`
    /// at the round metric).
    pub energy: f64,
}

/// Evaluate the kernel identity `δ²B_n(0)[f,f]`-form: the trace expression
/// equals a double integral against `cos^{2n}(d/2)` because the coherent-state
/// kernel satisfies `|Σ_i a_i(x)·conj(a_i(y))|² = (n+1)²·cos^{2n}(d(x,y)/2)`.
///
/// `n ≤ 8` guards the `O(nodes²)` double integral.
pub fn kernel_identity_check(
    n: usize,
    f: &BandLimitedFunction,
    rule: &Arc<QuadratureRule>,
) -> Result<KernelIdentityReport> {
    if n > 8 {
        return Err(Error::InvalidArgument(format!(
            "kernel identity check limited to n ≤ 8 (quadratic cost), got {n}"
        )));
    }
    let f_grid = funcspace::evaluate(f, rule)?;
    let log_consts: Vec<f64> = (0..=n).map(|i| basis_log_weight(n, i)).collect();
    let mf = gram::weighted_moment_matrix(&f_grid.values, rule, n, &log_consts);
    let mut frob = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            frob += mf.at(i, j).norm_sqr();
        }
    }
    let f2: Vec<f64> = f_grid.values.iter().map(|v| v * v).collect();
    let lhs = (n + 1) as f64 * rule.integrate_real(&f2)? - frob;

    let nodes = rule.nodes();
    let w = rule.weights();
    let vals = &f_grid.values;
    let rhs_sum = parallel::map_reduce_range(
        0..nodes.len(),
        64,
        &|range: std::ops::Range<usize>| {
            let mut acc = 0.0;
            for k in range {
                let uk = nodes[k].u();
                let fk = vals[k];
                let mut inner = 0.0;
                for l in 0..nodes.len() {
                    let ul = nodes[l].u();
                    let dot = uk[0] * ul[0] + uk[1] * ul[1] + uk[2] * ul[2];
                    let cos2 = 0.5 * (1.0 + dot);
                    let df = fk - vals[l];
                    inner += w[l] * df * df * cos2.powi(n as i32);
                }
                acc += w[k] * inner;
            }
            acc
        },
        &|a, b| a + b,
    );
    let np1 = (n + 1) as f64;
    Ok(KernelIdentityReport {
        n,
        lhs,
        rhs: 0.5 * np1 * np1 * rhs_sum,
        energy: f.dirichlet_energy(),
    })
}

/// `G(l) = ∫_l^π cos^{2n}(θ/2)·θ·sinθ dθ` by adaptive quadrature:
/// nonnegative, decreasing in `l`, `G(π) = 0`.
pub fn g_function(n: usize, l: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&l) {
        return Err(Error::InvalidArgument(format!("g_function needs 0 ≤ l ≤ π, got {l}")));
    }
    Ok(quad1d::integrate_adaptive(
        |th: f64| (th / 2.0).cos().powi(2 * n as i32) * th * th.sin(),
        l,
        std::f64::consts::PI,
        1e-13,
    ))
}

/// `J_n = 2(n+1)·∫_0^{π/2} t·cos^{2n+2} t dt` by Gauss-Legendre quadrature
/// sized to the `O(1/√n)` concentration width of the integrand.
pub fn jn_direct(n: usize) -> f64 {
    let points = 64.max(8 * (n as f64).sqrt() as usize + 32);
    let quarter = std::f64::consts::FRAC_PI_2;
    let v = quad1d::integrate_fixed(
        |t: f64| t * t.cos().powi(2 * n as i32 + 2),
        0.0,
        quarter,
        points,
    );
    2.0 * (n + 1) as f64 * v
}

/// The J-constants `J_0..=J_N` from the closed-form seed and the exact
/// rational recursion, carried in double-double precision.
#[derive(Clone, Debug, Serialize)]
pub struct JnTable {
    values: Vec<f64>,
}

impl JnTable {
    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `J_0 = π²/8 − ½` and `J_n = −1/(2n+2) + (2n+1)/(2n)·J_{n−1}`.
///
/// The recursion multiplies the running value by `(2n+1)/(2n) > 1` at every
/// step, so errors are amplified by `Π (2k+1)/(2k) ~ √n`; carrying it in
/// double-double keeps the table exact to the last f64 bit even at `n = 10⁶`.
pub fn jn_recursive(n_max: usize) -> JnTable {
    use crate::dd::Dd;
    let mut values = Vec::with_capacity(n_max + 1);
    let mut j = Dd::PI.mul(Dd::PI).div(Dd::from_f64(8.0)).sub(Dd::from_ratio(1, 2));
    values.push(j.to_f64());
    for n in 1..=n_max {
        let n = n as i64;
        j = j.mul(Dd::from_ratio(2 * n + 1, 2 * n)).sub(Dd::from_ratio(1, 2 * n + 2));
        values.push(j.to_f64());
    }
    JnTable { values }
}

/// Summary of the numerical claim `J_n < 1` with `J_n ↑ 1`.
#[derive(Clone, Debug, Serialize)]
pub struct JnClaimReport {
    pub n_max: usize,
    pub all_below_one: bool,
    /// Minimum of `1 − J_n` and where it is attained (the right endpoint when
    /// the sequence is increasing).
    pub min_gap: f64,
    pub argmin_gap: usize,
    /// Smallest index from which `J_n` increases monotonically to the end.
    pub monotone_from: usize,
    /// Least-squares fit `log(1 − J_n) ≈ c − p·log(n+1)` over the last decade:
    /// the measured decay exponent `p` (≈ 1 — the gap closes like `1/(3n)`).
    pub decay_power: f64,
    pub decay_log_constant: f64,
}

/// Verify `J_n < 1` up to `n_max` and measure how the gap closes.
pub fn jn_claim_check(n_max: usize) -> Result<JnClaimReport> {
    if n_max == 0 || n_max > 1_000_000 {
        return Err(Error::InvalidArgument(format!(
            "claim check wants 1 ≤ n_max ≤ 10⁶, got {n_max}"
        )));
    }
    let table = jn_recursive(n_max);
    let v = table.values();
    let mut all_below_one = true;
    let mut min_gap = f64::INFINITY;
    let mut argmin_gap = 0;
    for (n, &j) in v.iter().enumerate() {
        let gap = 1.0 - j;
        if gap <= 0.0 {
            all_below_one = false;
        }
        if gap < min_gap {
            min_gap = gap;
            argmin_gap = n;
        }
    }
    let mut monotone_from = 0;
    for n in (1..v.len()).rev() {
        if v[n] <= v[n - 1] {
            monotone_from = n;
            break;
        }
    }
    // Fit the tail decade in log-log.
    let lo = (n_max / 10).max(1);
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for n in lo..=n_max {
        let gap = 1.0 - v[n];
        if gap <= 0.0 {
            continue;
        }
        let x = ((n + 1) as f64).ln();
        let y = gap.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        cnt += 1.0;
    }
    let denom = cnt * sxx - sx * sx;
    let slope = if denom > 0.0 { (cnt * sxy - sx * sy) / denom } else { f64::NAN };
    let intercept = if cnt > 0.0 { (sy - slope * sx) / cnt } else { f64::NAN };
    Ok(JnClaimReport {
        n_max,
        all_below_one,
        min_gap,
        argmin_gap,
        monotone_from,
        decay_power: -slope,
        decay_log_constant: intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::FamilyDescriptor;
    use std::f64::consts::PI;

    fn rule_for(n: usize, l_max: usize) -> Arc<QuadratureRule> {
        Arc::new(QuadratureRule::default_for(n, l_max).unwrap())
    }

    fn random_phi(l_max: usize, energy: f64, seed: u64) -> BandLimitedFunction {
        funcspace::make_family(&FamilyDescriptor::Random { l_max, energy, seed }).unwrap()
    }

    #[test]
    fn residual_vanishes_at_round_metric() {
        for &n in &[0usize, 3, 9] {
            let rule = rule_for(n, 2);
            let zero = BandLimitedFunction::zero(0);
            let ctx = gram_context(&zero, n, &rule).unwrap();
            let r = euler_residual(&ctx, &zero).unwrap();
            let worst = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst < 1e-10, "n = {n}: residual {worst}");
        }
    }

    #[test]
    fn density_partitions_to_n_plus_one() {
        let n = 6;
        let rule = rule_for(n, 5);
        let phi = random_phi(5, 2.0, 31);
        let ctx = gram_context(&phi, n, &rule).unwrap();
        let total = rule.integrate_real(ctx.density()).unwrap();
        assert!((total - (n + 1) as f64).abs() < 1e-10, "∫h = {total}");
    }

    #[test]
    fn residual_is_orthogonal_to_constants() {
        let n = 4;
        let rule = rule_for(n, 6);
        let phi = random_phi(6, 3.0, 17);
        let ctx = gram_context(&phi, n, &rule).unwrap();
        let r = euler_residual(&ctx, &phi).unwrap();
        assert!(r.mean().abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 3;
        let l_max = 4;
        let rule = rule_for(n, l_max);
        let phi = random_phi(l_max, 1.5, 5);
        let f = random_phi(l_max, 1.0, 99);
        let ctx = gram_context(&phi, n, &rule).unwrap();
        let grad = gradient_a(&ctx, &phi, l_max).unwrap();
        let directional: f64 =
            grad.coeffs().iter().zip(f.coeffs()).map(|(g, f)| g * f).sum();
        let eps = 1e-5;
        let a_plus = gram::functional_a(&phi.add_scaled(&f, eps), n, &rule).unwrap().a_n;
        let a_minus = gram::functional_a(&phi.add_scaled(&f, -eps), n, &rule).unwrap().a_n;
        let fd = (a_plus - a_minus) / (2.0 * eps);
        assert!(
            (directional - fd).abs() < 1e-5 * (1.0 + fd.abs()),
            "analytic {directional} vs fd {fd}"
        );
    }

    #[test]
    fn second_variation_matches_finite_differences() {
        let n = 2;
        let l_max = 4;
        let rule = rule_for(n, l_max);
        let phi = random_phi(l_max, 1.0, 11);
        let f = random_phi(l_max, 1.0, 23);
        let ctx = gram_context(&phi, n, &rule).unwrap();
        let q = second_variation(&ctx, &f, EnergyTerm::Spectral).unwrap();
        let eps = 1e-3;
        let a0 = gram::functional_a(&phi, n, &rule).unwrap().a_n;
        let a_plus = gram::functional_a(&phi.add_scaled(&f, eps), n, &rule).unwrap().a_n;
        let a_minus = gram::functional_a(&phi.add_scaled(&f, -eps), n, &rule).unwrap().a_n;
        let fd = (a_plus - 2.0 * a0 + a_minus) / (eps * eps);
        assert!((q - fd).abs() < 1e-4 * (1.0 + fd.abs()), "analytic {q} vs fd {fd}");
        // The printed variant disagrees away from φ = 0 …
        let qw = second_variation(&ctx, &f, EnergyTerm::WeightedGrid).unwrap();
        assert!((qw - q).abs() > 1e-3, "variants indistinguishable: {qw} vs {q}");
        // … and the finite difference sides with the spectral form.
        assert!((q - fd).abs() < (qw - fd).abs());
    }

    #[test]
    fn energy_terms_agree_at_round_metric() {
        let n = 2;
        let rule = rule_for(n, 5);
        let zero = BandLimitedFunction::zero(0);
        let f = random_phi(5, 2.0, 3);
        let ctx = gram_context(&zero, n, &rule).unwrap();
        let a = second_variation(&ctx, &f, EnergyTerm::Spectral).unwrap();
        let b = second_variation(&ctx, &f, EnergyTerm::WeightedGrid).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn hessian_known_spectra_for_small_n() {
        // n = 0: Q on Ỹ_{l,m} is diagonal with 1 − l(l+1) (l ≥ 1).
        let rule = rule_for(0, 2);
        let spec = hessian_spectrum(0, 2, &rule).unwrap();
        assert!(spec.lambda_const < 1e-10);
        let want = [-5.0, -5.0, -5.0, -5.0, -5.0, -1.0, -1.0, -1.0];
        assert_eq!(spec.eigenvalues.len(), want.len());
        for (got, want) in spec.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        // n = 1, l = 1 block: eigenvalue −E + (n+1) − tr(M_Y²) = −2/3,
        // multiplicity 3 (derived in closed form from the t-moment integrals).
        let rule = rule_for(1, 1);
        let spec = hessian_spectrum(1, 1, &rule).unwrap();
        assert_eq!(spec.eigenvalues.len(), 3);
        for v in &spec.eigenvalues {
            assert!((v + 2.0 / 3.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn hessian_matches_polarized_second_variation() {
        let n = 3;
        let l_max = 2;
        let rule = rule_for(n, l_max);
        let spec_rule = &rule;
        let zero = BandLimitedFunction::zero(0);
        let ctx = gram_context(&zero, n, spec_rule).unwrap();
        // Rebuild two entries of Q by polarization of the quadratic form.
        let pairs = [((1isize, 1usize), (1isize, 2usize)), ((0isize, 1usize), (-2isize, 2usize))];
        for ((ma, la), (mb, lb)) in pairs {
            let mut ya = BandLimitedFunction::zero(la);
            *ya.coeff_mut(la, ma) = 1.0;
            let mut yb = BandLimitedFunction::zero(lb);
            *yb.coeff_mut(lb, mb) = 1.0;
            let plus = second_variation(&ctx, &ya.add_scaled(&yb, 1.0), EnergyTerm::Spectral)
                .unwrap();
            let minus = second_variation(&ctx, &ya.add_scaled(&yb, -1.0), EnergyTerm::Spectral)
                .unwrap();
            let q_polarized = 0.25 * (plus - minus);
            // Against the assembled Hessian entry.
            let full = assemble_q_entry(n, la, ma, lb, mb, spec_rule);
            assert!(
                (q_polarized - full).abs() < 1e-9,
                "polarization {q_polarized} vs assembly {full}"
            );
        }
    }

    /// Direct assembly of a single Hessian entry for the polarization test.
    fn assemble_q_entry(
        n: usize,
        la: usize,
        ma: isize,
        lb: usize,
        mb: isize,
        rule: &Arc<QuadratureRule>,
    ) -> f64 {
        let log_consts: Vec<f64> = (0..=n).map(|i| basis_log_weight(n, i)).collect();
        let mut ya = BandLimitedFunction::zero(la);
        *ya.coeff_mut(la, ma) = 1.0;
        let mut yb = BandLimitedFunction::zero(lb);
        *yb.coeff_mut(lb, mb) = 1.0;
        let ga = funcspace::evaluate(&ya, rule).unwrap();
        let gb = funcspace::evaluate(&yb, rule).unwrap();
        let maq = gram::weighted_moment_matrix(&ga.values, rule, n, &log_consts);
        let mbq = gram::weighted_moment_matrix(&gb.values, rule, n, &log_consts);
        let mut tr = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = maq.at(i, j);
                let y = mbq.at(i, j);
                tr += x.re * y.re + x.im * y.im;
            }
        }
        let prod: Vec<f64> =
            ga.values.iter().zip(&gb.values).map(|(a, b)| a * b).collect();
        let overlap = rule.integrate_real(&prod).unwrap();
        let same = la == lb && ma == mb;
        (n + 1) as f64 * overlap - tr - if same { (la * (la + 1)) as f64 } else { 0.0 }
    }

    #[test]
    fn kernel_identity_n0_is_variance() {
        let rule = rule_for(0, 6);
        let f = random_phi(6, 2.0, 41);
        let rep = kernel_identity_check(0, &f, &rule).unwrap();
        let g = funcspace::evaluate(&f, &rule).unwrap();
        let f2: Vec<f64> = g.values.iter().map(|v| v * v).collect();
        let variance = rule.integrate_real(&f2).unwrap() - g.mean() * g.mean();
        assert!((rep.lhs - variance).abs() < 1e-10);
        assert!((rep.rhs - variance).abs() < 1e-8);
    }

    #[test]
    fn kernel_identity_holds_for_random_f() {
        let n = 3;
        let rule = rule_for(n, 6);
        for seed in [1u64, 2, 3] {
            let f = random_phi(6, 1.5, seed);
            let rep = kernel_identity_check(n, &f, &rule).unwrap();
            assert!(
                (rep.lhs - rep.rhs).abs() < 1e-6 * (1.0 + rep.lhs.abs()),
                "lhs {} rhs {}",
                rep.lhs,
                rep.rhs
            );
            assert!(rep.lhs <= rep.energy + 1e-8, "key inequality violated: {rep:?}");
        }
        assert!(kernel_identity_check(9, &random_phi(2, 1.0, 1), &rule).is_err());
    }

    #[test]
    fn g_function_endpoints_and_monotonicity() {
        assert!(g_function(0, PI).unwrap().abs() < 1e-12);
        // n = 0: G(0) = ∫₀^π θ sinθ dθ = π.
        assert!((g_function(0, 0.0).unwrap() - PI).abs() < 1e-11);
        let mut prev = f64::INFINITY;
        for k in 0..=8 {
            let l = PI * k as f64 / 8.0;
            let v = g_function(2, l).unwrap();
            assert!(v <= prev + 1e-12);
            assert!(v >= -1e-15);
            prev = v;
        }
        assert!(g_function(1, -0.1).is_err());
    }

    #[test]
    fn j_constants_against_closed_forms() {
        // J_0 = π²/8 − ½ and J_1 = 3π²/16 − 1, both by integration by parts.
        let j0 = PI * PI / 8.0 - 0.5;
        let j1 = 3.0 * PI * PI / 16.0 - 1.0;
        assert!((jn_direct(0) - j0).abs() < 1e-12);
        assert!((jn_direct(1) - j1).abs() < 1e-12);
        let table = jn_recursive(60);
        assert!((table.get(0) - j0).abs() < 1e-15);
        assert!((table.get(1) - j1).abs() < 1e-15);
        for n in 0..=50 {
            assert!(
                (table.get(n) - jn_direct(n)).abs() < 1e-10,
                "n = {n}: {} vs {}",
                table.get(n),
                jn_direct(n)
            );
        }
        // J_0 < 5/6: the cross-term bound that motivates the sharper claim
        // fails already at the first nontrivial index.
        assert!(j0 < 5.0 / 6.0);
    }

    #[test]
    fn sin_theta_identity_links_g_to_j() {
        // (n+1)²/8 · ∫₀^π cos^{2n}(θ/2)·θ²·sinθ dθ = J_n. The sinθ factor is
        // part of the spherical area element; substituting θ = 2t and
        // integrating by parts reduces the left side to the defining integral
        // of J_n exactly.
        for n in [0usize, 1, 2, 5, 12] {
            let lhs = quad1d::integrate_adaptive(
                |th: f64| (th / 2.0).cos().powi(2 * n as i32) * th * th * th.sin(),
                0.0,
                PI,
                1e-13,
            ) * ((n + 1) * (n + 1)) as f64
                / 8.0;
            let rhs = jn_direct(n);
            assert!((lhs - rhs).abs() < 1e-10, "n = {n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn jn_claim_summary() {
        let rep = jn_claim_check(2_000).unwrap();
        assert!(rep.all_below_one);
        assert!(rep.monotone_from <= 1, "J increases from the start: {}", rep.monotone_from);
        assert!(rep.argmin_gap == rep.n_max);
        // 1 − J_n ≈ 1/(3(n+1)): power ≈ 1 with the right constant.
        assert!((rep.decay_power - 1.0).abs() < 0.05, "power {}", rep.decay_power);
        assert!(
            (rep.decay_log_constant - (1.0f64 / 3.0).ln()).abs() < 0.1,
            "constant {}",
            rep.decay_log_constant
        );
        assert!((1.0 - jn_recursive(10_000).get(10_000)) < 1e-3);
        assert!(jn_claim_check(0).is_err());
    }
}
