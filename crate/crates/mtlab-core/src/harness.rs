//! Conjecture-level experiment drivers: gradient-ascent search for maximizers
//! of `A_n`, randomized scans flagging any positive value, the large-energy
//! decay of `A_n(tφ)`, and the constant term of the large-`n` expansion of
//! `B_n − (n+1)·mean(φ)` (whose conjectured value is `½E(φ)`, the sharp
//! constant of the `A_n ≤ 0` question).
//!
//! Everything here is a driver over `gram` and `variation`; the only
//! numerics added are a backtracking line search and a polynomial fit in
//! `1/(n+1)`. Drivers are deterministic: per-trial seeds are derived from the
//! base seed, and parallel reduction uses a fixed tree.

use crate::funcspace::{self, BandLimitedFunction, FamilyDescriptor};
use crate::gram;
use crate::sphere::QuadratureRule;
use crate::variation;
use crate::{parallel, Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// Quadrature for integrands containing `e^φ`: the polynomial budget
/// `2n + 2·l_max + 16` plus a widening proportional to `sup|φ|` (the effective
/// extra bandwidth of the exponential factor), with a safety factor for
/// iterates that may grow during optimization.
pub fn rule_for_phi(
    n: usize,
    phi: &BandLimitedFunction,
    margin: f64,
) -> Result<Arc<QuadratureRule>> {
    let probe = Arc::new(QuadratureRule::for_degree(2 * phi.l_max().max(1) + 8)?);
    let g = funcspace::evaluate(phi, &probe)?;
    let sup = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let widen = (2.0 * (margin * sup).ceil()) as usize + 8;
    Ok(Arc::new(QuadratureRule::for_degree(2 * n + 2 * phi.l_max() + 16 + widen)?))
}

/// Line-search and termination knobs for [`ascend`].
#[derive(Clone, Debug, Serialize)]
pub struct AscentOpts {
    pub max_iters: usize,
    /// Stop when the coefficient-space gradient norm falls below this.
    pub grad_tol: f64,
    /// Initial trial step; adapted (grown on success, shrunk on failure).
    pub step0: f64,
    /// Armijo sufficient-increase coefficient.
    pub armijo_c: f64,
    pub shrink: f64,
    pub grow: f64,
    /// Declare stagnation when backtracking pushes the step below this.
    pub min_step: f64,
    /// Restrict the search to zonal (m = 0) directions.
    pub zonal_only: bool,
}

impl Default for AscentOpts {
    fn default() -> AscentOpts {
        AscentOpts {
            max_iters: 300,
            grad_tol: 1e-7,
            step0: 0.5,
            armijo_c: 1e-4,
            shrink: 0.5,
            grow: 1.5,
            min_step: 1e-12,
            zonal_only: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gradient norm below tolerance.
    Converged,
    IterationCap,
    /// Line search could not find an uphill step (reported, not fatal).
    Stagnated,
}

/// Full record of one ascent run. `a` is nondecreasing by construction: a
/// step is accepted only when it increases `A_n` by the Armijo margin, and
/// every evaluation uses the same quadrature rule.
#[derive(Clone, Debug, Serialize)]
pub struct AscentTrace {
    pub n: usize,
    pub l_max: usize,
    pub rule_degree: usize,
    /// `A_n` at each recorded iterate (initial point included).
    pub a: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// Accepted step sizes (one fewer than iterates).
    pub step: Vec<f64>,
    /// Coefficient snapshots of the iterates.
    pub iterates: Vec<Vec<f64>>,
    pub termination: Termination,
    pub final_a: f64,
    pub final_grad_norm: f64,
    pub final_phi: BandLimitedFunction,
}

/// Projected gradient ascent on `A_n` over zero-mean coefficients up to the
/// band limit of `φ0`.
pub fn ascend(n: usize, phi0: &BandLimitedFunction, opts: &AscentOpts) -> Result<AscentTrace> {
    let l_max = phi0.l_max();
    let mut phi = phi0.clone();
    phi.zero_mean();
    let rule = rule_for_phi(n, &phi, 2.0)?;
    let mut a = gram::functional_a(&phi, n, &rule)?.a_n;
    let mut trace = AscentTrace {
        n,
        l_max,
        rule_degree: rule.degree(),
        a: Vec::new(),
        grad_norm: Vec::new(),
        step: Vec::new(),
        iterates: Vec::new(),
        termination: Termination::IterationCap,
        final_a: a,
        final_grad_norm: f64::NAN,
        final_phi: phi.clone(),
    };
    let mut step = opts.step0;
    for _ in 0..opts.max_iters {
        let ctx = variation::gram_context(&phi, n, &rule)?;
        let mut g = variation::gradient_a(&ctx, &phi, l_max)?;
        *g.coeff_mut(0, 0) = 0.0;
        if opts.zonal_only {
            for l in 1..=l_max {
                for m in 1..=l as isize {
                    *g.coeff_mut(l, m) = 0.0;
                    *g.coeff_mut(l, -m) = 0.0;
                }
            }
        }
        let gnorm = g.coeff_norm();
        trace.a.push(a);
        trace.grad_norm.push(gnorm);
        trace.iterates.push(phi.coeffs().to_vec());
        if gnorm < opts.grad_tol {
            trace.termination = Termination::Converged;
            break;
        }
        // Backtracking Armijo line search along the gradient.
        let mut s = step;
        let mut accepted = None;
        while s >= opts.min_step {
            let cand = phi.add_scaled(&g, s);
            let a_cand = gram::functional_a(&cand, n, &rule)?.a_n;
            if a_cand >= a + opts.armijo_c * s * gnorm * gnorm {
                accepted = Some((cand, a_cand, s));
                break;
            }
            s *= opts.shrink;
        }
        let Some((cand, a_cand, s)) = accepted else {
            trace.termination = Termination::Stagnated;
            break;
        };
        phi = cand;
        *phi.coeff_mut(0, 0) = 0.0;
        a = a_cand;
        trace.step.push(s);
        step = (s * opts.grow).min(8.0);
    }
    debug_assert!(trace.a.windows(2).all(|w| w[1] >= w[0]));
    trace.final_a = a;
    trace.final_grad_norm = *trace.grad_norm.last().unwrap_or(&f64::NAN);
    trace.final_phi = phi;
    Ok(trace)
}

/// One scan trial: seeded start, its energy, and where the ascent ended.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub initial_energy: f64,
    pub final_a: f64,
    pub final_grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// Outcome of a randomized maximization scan. `max_a` is exactly the maximum
/// of the per-trial values; `violation` flags `max_a > threshold` as a
/// candidate counterexample to `A_n ≤ 0` (reproducible from `records`).
#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub n: usize,
    pub trials: usize,
    pub family: String,
    pub energy_range: (f64, f64),
    pub base_seed: u64,
    pub threshold: f64,
    pub records: Vec<TrialRecord>,
    pub max_a: f64,
    pub argmax: usize,
    pub violation: bool,
}

const SCAN_THRESHOLD: f64 = 1e-5;
const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

fn scan_impl(
    n: usize,
    trials: usize,
    energy_range: (f64, f64),
    seed: u64,
    zonal: bool,
    l_max: usize,
) -> Result<ScanReport> {
    let (lo, hi) = energy_range;
    if trials == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scan wants trials ≥ 1 and 0 < lo ≤ hi, got trials={trials}, range=({lo}, {hi})"
        )));
    }
    let run_trial = |i: usize| -> Result<TrialRecord> {
        let trial_seed = seed ^ (i as u64).wrapping_mul(SEED_MIX);
        // Stratified log-uniform energies across the range.
        let u = (i as f64 + 0.5) / trials as f64;
        let energy = lo * (hi / lo).powf(u);
        let desc = if zonal {
            FamilyDescriptor::RandomZonal { l_max, energy, seed: trial_seed }
        } else {
            FamilyDescriptor::Random { l_max, energy, seed: trial_seed }
        };
        let phi0 = funcspace::make_family(&desc)?;
        let opts = AscentOpts { zonal_only: zonal, ..AscentOpts::default() };
        let trace = ascend(n, &phi0, &opts)?;
        Ok(TrialRecord {
            index: i,
            seed: trial_seed,
            initial_energy: energy,
            final_a: trace.final_a,
            final_grad_norm: trace.final_grad_norm,
            iterations: trace.a.len(),
            termination: trace.termination,
        })
    };
    let results: Vec<Result<TrialRecord>> = parallel::map_reduce_range(
        0..trials,
        1,
        &|range: std::ops::Range<usize>| range.map(run_trial).collect::<Vec<_>>(),
        &|mut a, mut b| {
            a.append(&mut b);
            a
        },
    );
    let mut records = Vec::with_capacity(trials);
    for r in results {
        records.push(r?);
    }
    let (argmax, max_a) = records
        .iter()
        .map(|r| r.final_a)
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    Ok(ScanReport {
        n,
        trials,
        family: if zonal {
            format!("random_zonal l_max={l_max}")
        } else {
            format!("random l_max={l_max}")
        },
        energy_range,
        base_seed: seed,
        threshold: SCAN_THRESHOLD,
        records,
        max_a,
        argmax,
        violation: max_a > SCAN_THRESHOLD,
    })
}

/// Randomized ascent scan over seeded starts with stratified log-uniform
/// energies in `energy_range`.
pub fn conjecture_scan(
    n: usize,
    trials: usize,
    energy_range: (f64, f64),
    seed: u64,
) -> Result<ScanReport> {
    scan_impl(n, trials, energy_range, seed, false, 4)
}

/// Scan restricted to zonal functions and zonal search directions (the
/// rotationally symmetric subfamily, where the Gram matrix is diagonal).
pub fn zonal_scan(
    n: usize,
    trials: usize,
    energy_range: (f64, f64),
    seed: u64,
) -> Result<ScanReport> {
    scan_impl(n, trials, energy_range, seed, true, 8)
}

/// `A_n(t·φ)` along a ray, with quadrature widened per evaluation point.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub n: usize,
    pub t_list: Vec<f64>,
    pub a_values: Vec<f64>,
    pub rule_degrees: Vec<usize>,
    /// First index from which the values strictly decrease to the end
    /// (`None` when even the final pair fails to decrease).
    pub decreasing_from: Option<usize>,
    pub final_negative: bool,
}

/// Evaluate `A_n(tφ)` for each `t`. The functional tends to `−∞` like
/// `−c·t²·E(φ)` for nonconstant `φ`; the report records where strict decrease
/// sets in and whether the final value is negative.
pub fn large_energy_decay(
    n: usize,
    phi: &BandLimitedFunction,
    t_list: &[f64],
) -> Result<DecayReport> {
    if phi.dirichlet_energy() <= 0.0 {
        return Err(Error::InvalidArgument(
            "large-energy decay needs a nonconstant φ".into(),
        ));
    }
    if t_list.is_empty() || t_list.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("t_list must be nonempty and finite".into()));
    }
    let mut a_values = Vec::with_capacity(t_list.len());
    let mut rule_degrees = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let scaled = phi.scaled(t);
        let rule = rule_for_phi(n, &scaled, 1.5)?;
        a_values.push(gram::functional_a(&scaled, n, &rule)?.a_n);
        rule_degrees.push(rule.degree());
    }
    let mut decreasing_from = None;
    if a_values.len() >= 2 {
        let mut i = a_values.len() - 1;
        while i > 0 && a_values[i] < a_values[i - 1] {
            i -= 1;
        }
        if i < a_values.len() - 1 {
            decreasing_from = Some(i);
        }
    }
    let final_negative = *a_values.last().unwrap() < 0.0;
    Ok(DecayReport {
        n,
        t_list: t_list.to_vec(),
        a_values,
        rule_degrees,
        decreasing_from,
        final_negative,
    })
}

/// Gaps `B_n − (n+1)·mean(φ)` along `n_list` and their extrapolated constant
/// term.
#[derive(Clone, Debug, Serialize)]
pub struct D0Report {
    pub n_list: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Constant term of the polynomial-in-`1/(n+1)` fit through the last
    /// three gaps (fewer points: lower-order fit).
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    /// `½·E(φ)`, the conjectured limit of the gap.
    pub half_energy: f64,
}

/// Measure the gap sequence and extrapolate its `n → ∞` constant by an exact
/// polynomial fit in `x = 1/(n+1)` through the largest three sample points.
pub fn d0_asymptotic(phi: &BandLimitedFunction, n_list: &[usize]) -> Result<D0Report> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "n_list must be nonempty and strictly increasing".into(),
        ));
    }
    if *n_list.last().unwrap() > 256 {
        return Err(Error::InvalidArgument(
            "d0_asymptotic capped at n ≤ 256 for the default quadrature budget".into(),
        ));
    }
    let mean = phi.mean();
    let mut gaps = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rule = rule_for_phi(n, phi, 1.5)?;
        let b = gram::log_det_b(phi, n, &rule)?;
        gaps.push(b - (n + 1) as f64 * mean);
    }
    let k = n_list.len();
    let (d0, d1, d2) = match k {
        1 => (gaps[0], 0.0, 0.0),
        2 => {
            let (x0, x1) =
                (1.0 / (n_list[0] + 1) as f64, 1.0 / (n_list[1] + 1) as f64);
            let d1 = (gaps[0] - gaps[1]) / (x0 - x1);
            (gaps[1] - d1 * x1, d1, 0.0)
        }
        _ => {
            // Exact quadratic through the last three points.
            let x: Vec<f64> =
                n_list[k - 3..].iter().map(|&n| 1.0 / (n + 1) as f64).collect();
            let y = &gaps[k - 3..];
            let l0 = (x[1] * x[2], x[1] + x[2]);
            let l1 = (x[0] * x[2], x[0] + x[2]);
            let l2 = (x[0] * x[1], x[0] + x[1]);
            let w0 = y[0] / ((x[0] - x[1]) * (x[0] - x[2]));
            let w1 = y[1] / ((x[1] - x[0]) * (x[1] - x[2]));
            let w2 = y[2] / ((x[2] - x[0]) * (x[2] - x[1]));
            let d0 = w0 * l0.0 + w1 * l1.0 + w2 * l2.0;
            let d1 = -(w0 * l0.1 + w1 * l1.1 + w2 * l2.1);
            let d2 = w0 + w1 + w2;
            (d0, d1, d2)
        }
    };
    Ok(D0Report {
        n_list: n_list.to_vec(),
        gaps,
        d0,
        d1,
        d2,
        half_energy: 0.5 * phi.dirichlet_energy(),
    })
}
