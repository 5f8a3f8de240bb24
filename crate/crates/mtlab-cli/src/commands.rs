//! One runner per subcommand. Each returns the inputs echo (seeds, degrees,
//! tolerances — everything needed to reproduce), the results object, the
//! pass/fail checks, and an optional CSV table.

use crate::config::CircleSpec;
use crate::report::{Check, Table};
use itertools::Itertools;
use mtlab_core::funcspace::{self, FamilyDescriptor};
use mtlab_core::sphere::QuadratureRule;
use mtlab_core::{gram, harness, montecarlo, szego, variation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::sync::Arc;

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError { kind: "usage", message: message.into() }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl From<mtlab_core::Error> for CliError {
    fn from(e: mtlab_core::Error) -> CliError {
        CliError { kind: "computation", message: e.to_string() }
    }
}

pub struct Run {
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub table: Option<Table>,
}

fn jval<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v)
        .map_err(|e| CliError { kind: "computation", message: format!("serialization: {e}") })
}

fn fixed_rule(degree: usize) -> Result<Arc<QuadratureRule>, CliError> {
    Ok(Arc::new(QuadratureRule::for_degree(degree)?))
}

pub fn functional(
    n: usize,
    desc: &FamilyDescriptor,
    degree: Option<usize>,
) -> Result<Run, CliError> {
    let phi = funcspace::make_family(desc)?;
    let rule = match degree {
        Some(d) => fixed_rule(d)?,
        None => harness::rule_for_phi(n, &phi, 1.5)?,
    };
    let rep = gram::functional_a(&phi, n, &rule)?;
    let finite = [rep.energy, rep.mean, rep.b_n, rep.a_n].iter().all(|v| v.is_finite());
    let a_tol = 1e-6;
    let checks = vec![
        Check::new(
            "outputs_finite",
            finite,
            format!("E = {}, mean = {}, B = {}, A = {}", rep.energy, rep.mean, rep.b_n, rep.a_n),
        ),
        Check::new(
            "a_nonpositive",
            rep.a_n <= a_tol,
            format!("A_n = {} must stay ≤ {a_tol} (conjectured global maximum 0)", rep.a_n),
        ),
    ];
    Ok(Run {
        inputs: json!({
            "n": n,
            "phi": jval(desc)?,
            "degree_request": degree,
            "rule_degree": rep.rule_degree,
            "a_tolerance": a_tol,
        }),
        results: jval(&rep)?,
        checks,
        table: None,
    })
}

pub fn jn(max_n: usize) -> Result<Run, CliError> {
    let table = variation::jn_recursive(max_n);
    let claim = variation::jn_claim_check(max_n)?;
    let checks = vec![
        Check::new(
            "all_below_one",
            claim.all_below_one,
            format!("min gap 1 − J_n = {:.3e} at n = {}", claim.min_gap, claim.argmin_gap),
        ),
        Check::new(
            "monotone_increase",
            claim.monotone_from <= 1,
            format!("J_n increases from n = {}", claim.monotone_from),
        ),
    ];
    let rows = (0..table.len())
        .map(|k| {
            let v = table.get(k);
            vec![k.to_string(), v.to_string(), (1.0 - v).to_string()]
        })
        .collect();
    Ok(Run {
        inputs: json!({ "max_n": max_n }),
        results: json!({
            "claim": jval(&claim)?,
            "j_first": table.get(0),
            "j_last": table.get(max_n),
        }),
        checks,
        table: Some(Table { header: vec!["n", "j_n", "one_minus_j_n"], rows }),
    })
}

pub fn hessian(n: usize, l_max: usize) -> Result<Run, CliError> {
    let rule = Arc::new(QuadratureRule::default_for(n, l_max)?);
    let spec = variation::hessian_spectrum(n, l_max, &rule)?;
    let const_tol = 1e-8;
    let checks = vec![
        Check::new(
            "top_eigenvalue_negative",
            spec.top() < 0.0,
            format!("largest zero-mean eigenvalue = {}", spec.top()),
        ),
        Check::new(
            "constant_direction_null",
            spec.lambda_const.abs() <= const_tol,
            format!("|constant coupling| = {:.3e} vs {const_tol}", spec.lambda_const.abs()),
        ),
    ];
    Ok(Run {
        inputs: json!({
            "n": n,
            "l_max": l_max,
            "rule_degree": rule.degree(),
            "constant_tolerance": const_tol,
        }),
        results: jval(&spec)?,
        checks,
        table: None,
    })
}

pub fn kernel_identity(
    n: usize,
    desc: &FamilyDescriptor,
    degree: Option<usize>,
) -> Result<Run, CliError> {
    let f = funcspace::make_family(desc)?;
    let rule = match degree {
        Some(d) => fixed_rule(d)?,
        None => Arc::new(QuadratureRule::default_for(n, f.l_max())?),
    };
    let rep = variation::kernel_identity_check(n, &f, &rule)?;
    let rel = (rep.lhs - rep.rhs).abs() / rep.lhs.abs().max(1.0);
    let rel_tol = 1e-6;
    let dom_tol = 1e-8;
    let checks = vec![
        Check::new(
            "identity_matches",
            rel <= rel_tol,
            format!("lhs = {}, rhs = {}, relative |Δ| = {rel:.3e} vs {rel_tol}", rep.lhs, rep.rhs),
        ),
        Check::new(
            "dirichlet_energy_dominates",
            rep.lhs <= rep.energy + dom_tol,
            format!("lhs − E(f) = {:.3e} must be ≤ {dom_tol}", rep.lhs - rep.energy),
        ),
    ];
    Ok(Run {
        inputs: json!({
            "n": n,
            "phi": jval(desc)?,
            "rule_degree": rule.degree(),
            "relative_tolerance": rel_tol,
            "domination_tolerance": dom_tol,
        }),
        results: json!({ "report": jval(&rep)?, "relative_difference": rel }),
        checks,
        table: None,
    })
}

pub fn dpp(
    n: usize,
    desc: &FamilyDescriptor,
    samples: usize,
    seed: u64,
) -> Result<Run, CliError> {
    let phi = funcspace::make_family(desc)?;
    let rule = harness::rule_for_phi(n, &phi, 1.5)?;
    let exact = gram::log_det_b(&phi, n, &rule)?;
    let mc = montecarlo::mc_estimate_b(n, &phi, samples, seed)?;
    let sigmas = (mc.b_estimate - exact).abs() / mc.std_error;
    let checks = vec![Check::new(
        "within_three_sigma",
        sigmas.is_finite() && sigmas <= 3.0,
        format!(
            "Monte-Carlo {} vs determinant {}: deviation {sigmas:.2}σ (σ = {})",
            mc.b_estimate, exact, mc.std_error
        ),
    )];
    // Dump a handful of configurations for external plotting when asked.
    let dump = 8.min(samples);
    let mut rows = Vec::with_capacity(dump * (n + 1));
    for i in 0..dump {
        let config = montecarlo::sample_stream(n, seed, i as u64);
        for (j, p) in config.points().iter().enumerate() {
            let u = p.u();
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                u[0].to_string(),
                u[1].to_string(),
                u[2].to_string(),
            ]);
        }
    }
    Ok(Run {
        inputs: json!({
            "n": n,
            "phi": jval(desc)?,
            "samples": samples,
            "seed": seed,
            "rule_degree": rule.degree(),
            "sigma_tolerance": 3.0,
        }),
        results: json!({
            "monte_carlo": jval(&mc)?,
            "exact_log_det": exact,
            "deviation_sigmas": sigmas.is_finite().then_some(sigmas),
        }),
        checks,
        table: Some(Table {
            header: vec!["config_index", "point_index", "x", "y", "z"],
            rows,
        }),
    })
}

pub fn szego_cmd(spec: &CircleSpec, n_max: usize) -> Result<Run, CliError> {
    let phi = spec.build()?;
    let scan = szego::monotonicity_scan(&phi, n_max)?;
    let neg_tol = 1e-9;
    let mono_tol = 1e-10;
    let min_gap = scan.gap.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_rise = scan
        .gap
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        Check::new(
            "gap_nonnegative",
            min_gap >= -neg_tol,
            format!("min gap = {min_gap:.3e} vs −{neg_tol}"),
        ),
        Check::new(
            "gap_nonincreasing",
            scan.gap.len() < 2 || worst_rise <= mono_tol,
            format!("max gap increase = {worst_rise:.3e} vs {mono_tol}"),
        ),
    ];
    let rows = (0..scan.b.len())
        .map(|k| vec![k.to_string(), scan.b[k].to_string(), scan.gap[k].to_string()])
        .collect();
    Ok(Run {
        inputs: json!({
            "circle": jval(spec)?,
            "n_max": n_max,
            "negativity_tolerance": neg_tol,
            "monotonicity_tolerance": mono_tol,
        }),
        results: json!({ "scan": jval(&scan)?, "mean": phi.mean() }),
        checks,
        table: Some(Table { header: vec!["n", "b_n", "gap_n"], rows }),
    })
}

pub fn scan_cmd(
    zonal: bool,
    n: usize,
    trials: usize,
    energy_min: f64,
    energy_max: f64,
    seed: u64,
) -> Result<Run, CliError> {
    let rep = if zonal {
        harness::zonal_scan(n, trials, (energy_min, energy_max), seed)?
    } else {
        harness::conjecture_scan(n, trials, (energy_min, energy_max), seed)?
    };
    let detail = if rep.violation {
        format!(
            "max A = {} > threshold {} at trial {} (trial seed {}); reproduce from the inputs block",
            rep.max_a, rep.threshold, rep.argmax, rep.records[rep.argmax].seed
        )
    } else {
        format!("max A = {} over {} trials (threshold {})", rep.max_a, trials, rep.threshold)
    };
    let checks = vec![Check::new("no_violation", !rep.violation, detail)];
    Ok(Run {
        inputs: json!({
            "n": n,
            "trials": trials,
            "energy_min": energy_min,
            "energy_max": energy_max,
            "seed": seed,
            "family": rep.family,
            "threshold": rep.threshold,
        }),
        results: jval(&rep)?,
        checks,
        table: None,
    })
}

pub fn d0(desc: &FamilyDescriptor, n_list: &[usize], tol: f64) -> Result<Run, CliError> {
    let phi = funcspace::make_family(desc)?;
    let rep = harness::d0_asymptotic(&phi, n_list)?;
    let err = (rep.d0 - rep.half_energy).abs();
    let checks = vec![Check::new(
        "d0_matches_half_energy",
        err <= tol,
        format!("extrapolated D₀ = {}, ½E = {}, |Δ| = {err:.3e} vs {tol}", rep.d0, rep.half_energy),
    )];
    Ok(Run {
        inputs: json!({ "phi": jval(desc)?, "n_list": n_list, "tol": tol }),
        results: jval(&rep)?,
        checks,
        table: None,
    })
}

pub fn decay(n: usize, desc: &FamilyDescriptor, t_list: &[f64]) -> Result<Run, CliError> {
    let phi = funcspace::make_family(desc)?;
    let rep = harness::large_energy_decay(n, &phi, t_list)?;
    let checks = vec![
        Check::new(
            "tail_decreases",
            rep.decreasing_from.is_some(),
            match rep.decreasing_from {
                Some(i) => format!("A_n(tφ) strictly decreasing from t = {}", rep.t_list[i]),
                None => "A_n(tφ) fails to decrease at the end of the ray".to_string(),
            },
        ),
        Check::new(
            "final_negative",
            rep.final_negative,
            format!("A_n at t = {} is {}", rep.t_list[rep.t_list.len() - 1], rep.a_values[rep.a_values.len() - 1]),
        ),
    ];
    Ok(Run {
        inputs: json!({ "n": n, "phi": jval(desc)?, "t_list": t_list }),
        results: jval(&rep)?,
        checks,
        table: None,
    })
}

pub fn lemma(
    sizes: &[usize],
    measures: usize,
    seed: u64,
    domination_max_n: usize,
) -> Result<Run, CliError> {
    if sizes.is_empty() || sizes.iter().any(|&s| s < 1 || s > 6) {
        return Err(CliError::usage(
            "sizes must be nonempty with entries in 1..=6 (permutations are enumerated exhaustively)",
        ));
    }
    if measures == 0 {
        return Err(CliError::usage("measures must be ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perm_tol = 1e-9;
    let mut products_checked = 0u64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut first_violation: Option<String> = None;
    for _ in 0..measures {
        let atoms: Vec<(f64, f64)> = (0..rng.random_range(3..10))
            .map(|_| (rng.random_range(0.02..4.0), rng.random_range(0.05..2.0)))
            .collect();
        let measure = gram::RadialMeasure { atoms };
        for &size in sizes {
            let mut exponents: Vec<f64> =
                (0..size).map(|_| rng.random_range(0.0..4.0)).collect();
            exponents.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for sigma in (0..size).permutations(size) {
                let (s, s_id) = gram::permutation_products(&exponents, &measure, &sigma)?;
                let excess = s - s_id;
                worst_excess = worst_excess.max(excess);
                if excess > perm_tol && first_violation.is_none() {
                    first_violation = Some(format!(
                        "σ = {sigma:?}, exponents = {exponents:?}: log S_σ − log S_id = {excess:.3e}"
                    ));
                }
                products_checked += 1;
            }
        }
    }
    let mut domination = Vec::new();
    let mut all_dominated = true;
    for n in 1..=domination_max_n {
        let phi = funcspace::make_family(&FamilyDescriptor::Random {
            l_max: 2,
            energy: 1.2,
            seed: seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        })?;
        let rule = Arc::new(QuadratureRule::default_for(n, 2)?);
        let grid = funcspace::evaluate(&phi, &rule)?;
        let rep = gram::determinant_domination_check(n, &grid)?;
        all_dominated &= rep.passes;
        domination.push(rep);
    }
    let checks = vec![
        Check::new(
            "permutations_dominated",
            worst_excess <= perm_tol,
            first_violation.unwrap_or_else(|| {
                format!(
                    "{products_checked} products over {measures} measures: max log S_σ − log S_id = {worst_excess:.3e} vs {perm_tol}"
                )
            }),
        ),
        Check::new(
            "determinant_dominated",
            all_dominated,
            format!("|det N| ≤ (n+1)!·S_id for n ≤ {domination_max_n}"),
        ),
    ];
    Ok(Run {
        inputs: json!({
            "sizes": sizes,
            "measures": measures,
            "seed": seed,
            "domination_max_n": domination_max_n,
            "permutation_tolerance": perm_tol,
        }),
        results: json!({
            "products_checked": products_checked,
            "worst_excess": worst_excess,
            "domination": jval(&domination)?,
        }),
        checks,
        table: None,
    })
}
