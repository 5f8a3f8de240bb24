//! `mtlab` — batch front-end for the numerical laboratory. One experiment per
//! invocation: flags (or a JSON config; flags win) in, a versioned JSON
//! report plus optional CSV tables out.
//!
//! Exit codes: 0 = success, 1 = usage/config/computation error,
//! 2 = computation succeeded but a mathematical check failed.

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand};
use commands::{CliError, Run};
use config::{parse_compact_circle, parse_compact_phi, CircleSpec, FieldDefault, FileConfig};
use mtlab_core::funcspace::FamilyDescriptor;
use report::Report;
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "mtlab",
    version,
    about = "Numerical laboratory for log-determinant functionals on the sphere",
    arg_required_else_help = true
)]
struct Cli {
    /// JSON experiment config; explicit flags override file fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the command's CSV table here (commands without a table ignore it).
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Cap the worker-thread count. Results are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the functionals A_n and B_n for one test function.
    Functional {
        #[arg(long)]
        n: Option<usize>,
        /// Compact φ spec, e.g. dipole:1 or random:4:1:7.
        #[arg(long)]
        phi: Option<String>,
        /// Quadrature degree override.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Tabulate the constants J_n and check they stay below 1.
    Jn {
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Spectrum of the second variation at the round metric.
    Hessian {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l_max: Option<usize>,
    },
    /// Double-integral identity for the second variation at φ = 0.
    KernelIdentity {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Determinantal point process: Monte-Carlo estimate of B_n vs the Gram determinant.
    Dpp {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Toeplitz determinants on the circle: Szegő gap scan.
    Szego {
        /// Compact circle spec, e.g. random:4:0.5:1 or terms:0;1,0.3,0.
        #[arg(long)]
        circle: Option<String>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Randomized gradient-ascent scan for counterexamples to A_n ≤ 0.
    Scan {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        energy_min: Option<f64>,
        #[arg(long)]
        energy_max: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Scan restricted to zonal (rotationally symmetric) functions.
    ZonalScan {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        energy_min: Option<f64>,
        #[arg(long)]
        energy_max: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extrapolate the constant term of B_n − (n+1)·mean as n → ∞.
    D0 {
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evaluate A_n along the ray t ↦ tφ and check the large-energy decay.
    Decay {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, value_delimiter = ',')]
        t_list: Option<Vec<f64>>,
    },
    /// Rearrangement lemma: permuted products vs the sorted pairing, plus the determinant bound.
    Lemma {
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        measures: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        domination_max_n: Option<usize>,
    },
    /// Schema-check a config file without running it; lists resolved defaults.
    Validate { path: PathBuf },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Functional { .. } => "functional",
            Cmd::Jn { .. } => "jn",
            Cmd::Hessian { .. } => "hessian",
            Cmd::KernelIdentity { .. } => "kernel-identity",
            Cmd::Dpp { .. } => "dpp",
            Cmd::Szego { .. } => "szego",
            Cmd::Scan { .. } => "scan",
            Cmd::ZonalScan { .. } => "zonal-scan",
            Cmd::D0 { .. } => "d0",
            Cmd::Decay { .. } => "decay",
            Cmd::Lemma { .. } => "lemma",
            Cmd::Validate { .. } => "validate",
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}

fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

fn req<T>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| {
        CliError::usage(format!("missing required field `{field}` (set a flag or a config entry)"))
    })
}

fn resolve_phi(
    flag: &Option<String>,
    file: &Option<FamilyDescriptor>,
) -> Result<Option<FamilyDescriptor>, CliError> {
    match flag {
        Some(s) => parse_compact_phi(s).map(Some).map_err(CliError::usage),
        None => Ok(file.clone()),
    }
}

fn resolve_circle(
    flag: &Option<String>,
    file: &Option<CircleSpec>,
) -> Result<Option<CircleSpec>, CliError> {
    match flag {
        Some(s) => parse_compact_circle(s).map(Some).map_err(CliError::usage),
        None => Ok(file.clone()),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    if let Cmd::Validate { path } = &cli.command {
        return validate(path);
    }
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let name = cli.command.name();
    if let Some(declared) = &cfg.command {
        if declared != name {
            return Err(CliError::usage(format!(
                "config declares command {declared:?} but {name:?} was invoked"
            )));
        }
    }
    if let Some(t) = cli.threads.or(cfg.threads) {
        mtlab_core::parallel::configure_threads(t).map_err(CliError::usage)?;
    }

    let run = match &cli.command {
        Cmd::Functional { n, phi, degree } => {
            let n = req(n.or(cfg.n), "n")?;
            let desc = req(resolve_phi(phi, &cfg.phi)?, "phi")?;
            commands::functional(n, &desc, degree.or(cfg.degree))?
        }
        Cmd::Jn { max_n } => commands::jn(max_n.or(cfg.max_n).unwrap_or(1000))?,
        Cmd::Hessian { n, l_max } => {
            let n = req(n.or(cfg.n), "n")?;
            commands::hessian(n, l_max.or(cfg.l_max).unwrap_or(10))?
        }
        Cmd::KernelIdentity { n, phi, degree } => {
            let n = req(n.or(cfg.n), "n")?;
            let desc = resolve_phi(phi, &cfg.phi)?.unwrap_or(FamilyDescriptor::Random {
                l_max: 8,
                energy: 1.5,
                seed: 1,
            });
            commands::kernel_identity(n, &desc, degree.or(cfg.degree))?
        }
        Cmd::Dpp { n, phi, samples, seed } => {
            let n = req(n.or(cfg.n), "n")?;
            let desc =
                resolve_phi(phi, &cfg.phi)?.unwrap_or(FamilyDescriptor::Dipole { a: 1.0 });
            commands::dpp(
                n,
                &desc,
                samples.or(cfg.samples).unwrap_or(20_000),
                seed.or(cfg.seed).unwrap_or(1),
            )?
        }
        Cmd::Szego { circle, n_max } => {
            let spec = resolve_circle(circle, &cfg.circle)?.unwrap_or(CircleSpec::RandomTrig {
                k_max: 4,
                amplitude: 0.5,
                seed: 1,
            });
            commands::szego_cmd(&spec, n_max.or(cfg.n_max).unwrap_or(64))?
        }
        Cmd::Scan { n, trials, energy_min, energy_max, seed }
        | Cmd::ZonalScan { n, trials, energy_min, energy_max, seed } => {
            let zonal = matches!(&cli.command, Cmd::ZonalScan { .. });
            commands::scan_cmd(
                zonal,
                req(n.or(cfg.n), "n")?,
                trials.or(cfg.trials).unwrap_or(50),
                energy_min.or(cfg.energy_min).unwrap_or(0.1),
                energy_max.or(cfg.energy_max).unwrap_or(10.0),
                seed.or(cfg.seed).unwrap_or(1),
            )?
        }
        Cmd::D0 { phi, n_list, tol } => {
            let desc = req(resolve_phi(phi, &cfg.phi)?, "phi")?;
            let n_list = n_list.clone().or(cfg.n_list.clone()).unwrap_or(vec![64, 128, 192]);
            commands::d0(&desc, &n_list, tol.or(cfg.tol).unwrap_or(1e-3))?
        }
        Cmd::Decay { n, phi, t_list } => {
            let n = req(n.or(cfg.n), "n")?;
            let desc = req(resolve_phi(phi, &cfg.phi)?, "phi")?;
            let t_list = req(t_list.clone().or(cfg.t_list.clone()), "t_list")?;
            commands::decay(n, &desc, &t_list)?
        }
        Cmd::Lemma { sizes, measures, seed, domination_max_n } => commands::lemma(
            &sizes.clone().or(cfg.sizes.clone()).unwrap_or(vec![2, 3, 4, 5, 6]),
            measures.or(cfg.measures).unwrap_or(100),
            seed.or(cfg.seed).unwrap_or(1),
            domination_max_n.or(cfg.domination_max_n).unwrap_or(5),
        )?,
        Cmd::Validate { .. } => unreachable!("handled above"),
    };

    finish(name, run, cli.out.or(cfg.out), cli.csv.or(cfg.csv))
}

fn finish(
    name: &str,
    run: Run,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<i32, CliError> {
    let report = Report::new(name, run.inputs, run.results, run.checks);
    if let (Some(path), Some(table)) = (&csv, &run.table) {
        table
            .write_csv(path)
            .map_err(|e| CliError::usage(format!("cannot write CSV {}: {e}", path.display())))?;
    }
    report
        .write(out.as_deref())
        .map_err(|e| CliError::usage(format!("cannot write report: {e}")))?;
    Ok(if report.all_passed() { 0 } else { 2 })
}

/// Schema check without execution: parse, then list which fields are set,
/// which defaults would apply for the declared command, and which required
/// fields are still missing (they may also arrive later as flags).
fn validate(path: &Path) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed: Result<FileConfig, serde_json::Error> = serde_json::from_str(&text);
    let cfg = match parsed {
        Err(e) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "valid": false,
                    "path": path.display().to_string(),
                    "error": e.to_string(),
                }))
                .expect("static shape")
            );
            return Err(CliError::usage(format!("invalid config {}: {e}", path.display())));
        }
        Ok(cfg) => cfg,
    };
    const FIELDS: [&str; 22] = [
        "command", "n", "n_list", "l_max", "phi", "circle", "degree", "seed", "samples",
        "trials", "energy_min", "energy_max", "max_n", "n_max", "t_list", "tol", "sizes",
        "measures", "domination_max_n", "threads", "out", "csv",
    ];
    let set_fields: Vec<&str> = FIELDS.iter().copied().filter(|f| cfg.is_set(f)).collect();
    let (defaulted, missing_required, note) = match cfg.command.as_deref() {
        None => (
            Vec::new(),
            Vec::new(),
            Some("command not set; field defaults depend on the subcommand".to_string()),
        ),
        Some(cmd) => match config::command_fields(cmd) {
            None => {
                return Err(CliError::usage(format!(
                    "config declares unknown command {cmd:?}"
                )))
            }
            Some(fields) => {
                let mut defaulted = Vec::new();
                let mut missing = Vec::new();
                for (field, default) in fields {
                    if cfg.is_set(field) {
                        continue;
                    }
                    match default {
                        FieldDefault::Required => missing.push(field.to_string()),
                        FieldDefault::Text(t) => defaulted.push(format!("{field} = {t}")),
                    }
                }
                (defaulted, missing, None)
            }
        },
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "valid": true,
            "path": path.display().to_string(),
            "command": cfg.command,
            "set_fields": set_fields,
            "defaulted": defaulted,
            "missing_required_until_flags": missing_required,
            "note": note,
        }))
        .expect("static shape")
    );
    Ok(0)
}
