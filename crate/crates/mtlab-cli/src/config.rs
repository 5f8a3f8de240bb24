//! Experiment configuration: a single JSON file whose fields mirror the CLI
//! flags (flags override the file). Unknown fields are rejected up front so a
//! typo cannot silently fall back to a default.

use mtlab_core::funcspace::{FamilyDescriptor, HarmonicTerm, ZonalTerm};
use mtlab_core::szego::CircleFunction;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use std::path::PathBuf;

/// One term `a·cos kθ + b·sin kθ` of an explicit circle symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleTerm {
    pub k: usize,
    pub a: f64,
    pub b: f64,
}

/// Circle test function: either a seeded random trigonometric polynomial or
/// explicit Fourier terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CircleSpec {
    RandomTrig { k_max: usize, amplitude: f64, seed: u64 },
    Terms { a0: f64, terms: Vec<CircleTerm> },
}

impl CircleSpec {
    pub fn build(&self) -> Result<CircleFunction, mtlab_core::Error> {
        match self {
            CircleSpec::RandomTrig { k_max, amplitude, seed } => {
                CircleFunction::random_trig(*k_max, *amplitude, *seed)
            }
            CircleSpec::Terms { a0, terms } => {
                let t: Vec<(usize, f64, f64)> = terms.iter().map(|t| (t.k, t.a, t.b)).collect();
                CircleFunction::from_terms(*a0, &t)
            }
        }
    }
}

/// All recognized file fields. Every field is optional here; each subcommand
/// states which ones it requires and what the rest default to.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    /// Optional: must match the invoked subcommand when both are given.
    pub command: Option<String>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub l_max: Option<usize>,
    /// Sphere test function: a tagged object (see [`FamilyDescriptor`]) or a
    /// compact string like `"dipole:1"`.
    #[serde(deserialize_with = "de_phi")]
    pub phi: Option<FamilyDescriptor>,
    /// Circle test function: a tagged object or a compact string like
    /// `"random:4:0.5:1"`.
    #[serde(deserialize_with = "de_circle")]
    pub circle: Option<CircleSpec>,
    /// Quadrature degree override (default: auto, widened for `e^φ`).
    pub degree: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub trials: Option<usize>,
    pub energy_min: Option<f64>,
    pub energy_max: Option<f64>,
    pub max_n: Option<usize>,
    pub n_max: Option<usize>,
    pub t_list: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub sizes: Option<Vec<usize>>,
    pub measures: Option<usize>,
    pub domination_max_n: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn de_phi<'de, D: Deserializer<'de>>(d: D) -> Result<Option<FamilyDescriptor>, D::Error> {
    match Option::<Value>::deserialize(d)? {
        None => Ok(None),
        Some(v) => phi_from_value(v).map(Some).map_err(serde::de::Error::custom),
    }
}

fn de_circle<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CircleSpec>, D::Error> {
    match Option::<Value>::deserialize(d)? {
        None => Ok(None),
        Some(v) => circle_from_value(v).map(Some).map_err(serde::de::Error::custom),
    }
}

fn phi_from_value(v: Value) -> Result<FamilyDescriptor, String> {
    match v {
        Value::String(s) => parse_compact_phi(&s),
        other => serde_json::from_value(other).map_err(|e| e.to_string()),
    }
}

fn circle_from_value(v: Value) -> Result<CircleSpec, String> {
    match v {
        Value::String(s) => parse_compact_circle(&s),
        other => serde_json::from_value(other).map_err(|e| e.to_string()),
    }
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse {what} from {s:?}"))
}

/// Compact sphere-function grammar:
/// `constant:C` | `dipole:A` | `random:L:E:SEED` | `random_zonal:L:E:SEED`
/// | `zonal:l,c;l,c;…` | `harmonic:l,m,c;l,m,c;…`
pub fn parse_compact_phi(s: &str) -> Result<FamilyDescriptor, String> {
    let (head, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("φ spec {s:?} is missing the family prefix"))?;
    let parts: Vec<&str> = rest.split(':').collect();
    match head {
        "constant" => Ok(FamilyDescriptor::Constant { c: num(rest, "c")? }),
        "dipole" => Ok(FamilyDescriptor::Dipole { a: num(rest, "a")? }),
        "random" | "random_zonal" => {
            if parts.len() != 3 {
                return Err(format!("{head} wants L:ENERGY:SEED, got {rest:?}"));
            }
            let l_max = num(parts[0], "l_max")?;
            let energy = num(parts[1], "energy")?;
            let seed = num(parts[2], "seed")?;
            Ok(if head == "random" {
                FamilyDescriptor::Random { l_max, energy, seed }
            } else {
                FamilyDescriptor::RandomZonal { l_max, energy, seed }
            })
        }
        "zonal" => {
            let mut coeffs = Vec::new();
            for term in rest.split(';').filter(|t| !t.trim().is_empty()) {
                let f: Vec<&str> = term.split(',').collect();
                if f.len() != 2 {
                    return Err(format!("zonal term {term:?} wants l,c"));
                }
                coeffs.push(ZonalTerm { l: num(f[0], "l")?, c: num(f[1], "c")? });
            }
            if coeffs.is_empty() {
                return Err("zonal spec has no terms".into());
            }
            Ok(FamilyDescriptor::Zonal { coeffs })
        }
        "harmonic" => {
            let mut terms = Vec::new();
            for term in rest.split(';').filter(|t| !t.trim().is_empty()) {
                let f: Vec<&str> = term.split(',').collect();
                if f.len() != 3 {
                    return Err(format!("harmonic term {term:?} wants l,m,c"));
                }
                terms.push(HarmonicTerm {
                    l: num(f[0], "l")?,
                    m: num(f[1], "m")?,
                    c: num(f[2], "c")?,
                });
            }
            if terms.is_empty() {
                return Err("harmonic spec has no terms".into());
            }
            Ok(FamilyDescriptor::Harmonic { terms })
        }
        other => Err(format!(
            "unknown φ family {other:?} (expected constant, dipole, random, random_zonal, zonal, harmonic)"
        )),
    }
}

/// Compact circle-function grammar:
/// `random:K:AMPLITUDE:SEED` | `terms:a0;k,ak,bk;…`
pub fn parse_compact_circle(s: &str) -> Result<CircleSpec, String> {
    let (head, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("circle spec {s:?} is missing the prefix"))?;
    match head {
        "random" => {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("random wants K:AMPLITUDE:SEED, got {rest:?}"));
            }
            Ok(CircleSpec::RandomTrig {
                k_max: num(parts[0], "k_max")?,
                amplitude: num(parts[1], "amplitude")?,
                seed: num(parts[2], "seed")?,
            })
        }
        "terms" => {
            let mut pieces = rest.split(';').filter(|t| !t.trim().is_empty());
            let a0 = num(pieces.next().ok_or("terms spec wants a0 first")?, "a0")?;
            let mut terms = Vec::new();
            for term in pieces {
                let f: Vec<&str> = term.split(',').collect();
                if f.len() != 3 {
                    return Err(format!("circle term {term:?} wants k,ak,bk"));
                }
                terms.push(CircleTerm {
                    k: num(f[0], "k")?,
                    a: num(f[1], "ak")?,
                    b: num(f[2], "bk")?,
                });
            }
            Ok(CircleSpec::Terms { a0, terms })
        }
        other => Err(format!("unknown circle spec {other:?} (expected random or terms)")),
    }
}

/// Fields each command consumes: `(field, requirement)` where the requirement
/// is either `Required` or a default rendered as text.
pub fn command_fields(command: &str) -> Option<Vec<(&'static str, FieldDefault)>> {
    use FieldDefault::*;
    let table: Vec<(&'static str, FieldDefault)> = match command {
        "functional" => vec![
            ("n", Required),
            ("phi", Required),
            ("degree", Text("auto (widened for e^φ)")),
        ],
        "jn" => vec![("max_n", Text("1000"))],
        "hessian" => vec![("n", Required), ("l_max", Text("10"))],
        "kernel-identity" => vec![
            ("n", Required),
            ("phi", Text("random:8:1.5:1")),
            ("degree", Text("auto (exact for the band limit)")),
        ],
        "dpp" => vec![
            ("n", Required),
            ("phi", Text("dipole:1")),
            ("samples", Text("20000")),
            ("seed", Text("1")),
        ],
        "szego" => vec![("circle", Text("random:4:0.5:1")), ("n_max", Text("64"))],
        "scan" | "zonal-scan" => vec![
            ("n", Required),
            ("trials", Text("50")),
            ("energy_min", Text("0.1")),
            ("energy_max", Text("10")),
            ("seed", Text("1")),
        ],
        "d0" => vec![
            ("phi", Required),
            ("n_list", Text("64,128,192")),
            ("tol", Text("0.001")),
        ],
        "decay" => vec![("n", Required), ("phi", Required), ("t_list", Required)],
        "lemma" => vec![
            ("sizes", Text("2,3,4,5,6")),
            ("measures", Text("100")),
            ("seed", Text("1")),
            ("domination_max_n", Text("5")),
        ],
        _ => return None,
    };
    Some(table)
}

pub enum FieldDefault {
    Required,
    Text(&'static str),
}

impl FileConfig {
    /// Whether a recognized field is set, by name.
    pub fn is_set(&self, field: &str) -> bool {
        match field {
            "command" => self.command.is_some(),
            "n" => self.n.is_some(),
            "n_list" => self.n_list.is_some(),
            "l_max" => self.l_max.is_some(),
            "phi" => self.phi.is_some(),
            "circle" => self.circle.is_some(),
            "degree" => self.degree.is_some(),
            "seed" => self.seed.is_some(),
            "samples" => self.samples.is_some(),
            "trials" => self.trials.is_some(),
            "energy_min" => self.energy_min.is_some(),
            "energy_max" => self.energy_max.is_some(),
            "max_n" => self.max_n.is_some(),
            "n_max" => self.n_max.is_some(),
            "t_list" => self.t_list.is_some(),
            "tol" => self.tol.is_some(),
            "sizes" => self.sizes.is_some(),
            "measures" => self.measures.is_some(),
            "domination_max_n" => self.domination_max_n.is_some(),
            "threads" => self.threads.is_some(),
            "out" => self.out.is_some(),
            "csv" => self.csv.is_some(),
            _ => false,
        }
    }
}
