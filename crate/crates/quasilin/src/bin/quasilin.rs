//! Command-line front end: load a session file, run one pipeline stage (or
//! the Monge-Ampère builders), and print a report.
//!
//! Exit codes: 0 on success, 2 when the command ran but the verdict is
//! negative (structure check fails, field is not a symmetry, reduction does
//! not reach quasilinear form), 1 on errors.  Diagnostics go to stderr, the
//! report to stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use quasilin::canonical::canonical_for_translation_scaling;
use quasilin::io::report::{CheckDoc, Report};
use quasilin::io::SessionFile;
use quasilin::liegeom::{check_symmetry, check_theorem1_structure, lie_bracket, VectorField};
use quasilin::monge_ampere::conditions::{hat_conditions, symmetry_conditions};
use quasilin::monge_ampere::structured::reduce_ma;
use quasilin::monge_ampere::von_karman::von_karman_example;
use quasilin::monge_ampere::{
    build_system, homogenization_condition, ma_fields, MADim, MASpec,
};
use quasilin::transform::{classify, reduce, systems_match, PDESystem, ReduceError};

/// Colon-separated directories searched for relative session paths.
const SESSION_PATH_VAR: &str = "QUASILIN_SESSION_PATH";

#[derive(Parser)]
#[command(name = "quasilin", version, about = "Reduce PDE systems with a solvable symmetry algebra to quasilinear form")]
struct Cli {
    /// Session file declaring symbols, fields, systems, and specs.
    #[arg(long, global = true)]
    session: Option<PathBuf>,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Lie bracket [F, G] of two named fields.
    Bracket { f: String, g: String },
    /// Check the solvable-algebra structure of named fields (last = scaling role).
    CheckAlgebra {
        #[arg(num_args = 2..)]
        fields: Vec<String>,
    },
    /// Check that a named field is a Lie point symmetry of a named system.
    CheckSymmetry {
        system: String,
        field: String,
        /// Multiplier degree bound (default: jet degree of the equations).
        #[arg(long)]
        mult_degree: Option<u32>,
    },
    /// Canonical variables for named fields with the Theorem 1 structure.
    Canonical {
        #[arg(num_args = 2..)]
        fields: Vec<String>,
    },
    /// Full reduction of a named system along named fields.
    Reduce {
        system: String,
        #[arg(num_args = 2..)]
        fields: Vec<String>,
        /// Multiplier degree bound for the symmetry checks.
        #[arg(long)]
        mult_degree: Option<u32>,
    },
    /// Classify a named system (autonomy, jet homogeneity, quasilinearity).
    Classify { system: String },
    /// Monge-Ampère builders.
    #[command(subcommand)]
    Ma(MaCommand),
    /// Run the built-in regression suite.
    Selftest {
        /// Include the 3+1-dimensional reduction (slow).
        #[arg(long)]
        full: bool,
    },
}

#[derive(Subcommand)]
enum MaCommand {
    /// Print the Monge-Ampère system for a spec.
    Build { dim: Dim, spec: String },
    /// Print the reducibility conditions for a spec.
    Conditions { dim: Dim, spec: String },
    /// Print the Von Kármán system and its reducibility conditions.
    VonKarman,
}

#[derive(Copy, Clone, ValueEnum)]
enum Dim {
    #[value(name = "1p1")]
    OnePlusOne,
    #[value(name = "2p1")]
    TwoPlusOne,
    #[value(name = "3p1")]
    ThreePlusOne,
}

impl From<Dim> for MADim {
    fn from(d: Dim) -> MADim {
        match d {
            Dim::OnePlusOne => MADim::OnePlusOne,
            Dim::TwoPlusOne => MADim::TwoPlusOne,
            Dim::ThreePlusOne => MADim::ThreePlusOne,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            match cli.format {
                Format::Json => print!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            if report.negative() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<Report, String> {
    match &cli.command {
        Command::Bracket { f, g } => {
            let s = session(cli)?;
            let b = lie_bracket(field(&s, f)?, field(&s, g)?).map_err(|e| e.to_string())?;
            Ok(Report::Bracket { field: (&b).into() })
        }
        Command::CheckAlgebra { fields } => {
            let s = session(cli)?;
            let fs = fields
                .iter()
                .map(|name| field(&s, name).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let report = check_theorem1_structure(&fs).map_err(|e| e.to_string())?;
            Ok(Report::Algebra {
                report: (&report).into(),
            })
        }
        Command::CheckSymmetry {
            system: sys,
            field: f,
            mult_degree,
        } => {
            let s = session(cli)?;
            let cert = check_symmetry(&system(&s, sys)?.equations, field(&s, f)?, *mult_degree)
                .map_err(|e| e.to_string())?;
            Ok(Report::Symmetry {
                certificate: (&cert).into(),
            })
        }
        Command::Canonical { fields } => {
            let s = session(cli)?;
            let fs = fields
                .iter()
                .map(|name| field(&s, name).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let t = canonical_for_translation_scaling(&fs).map_err(|e| e.to_string())?;
            Ok(Report::Canonical {
                transformation: (&t).into(),
            })
        }
        Command::Reduce {
            system: sys,
            fields,
            mult_degree,
        } => {
            let s = session(cli)?;
            let fs = fields
                .iter()
                .map(|name| field(&s, name).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            match reduce(system(&s, sys)?, &fs, *mult_degree) {
                Ok(r) => Ok(Report::Reduce {
                    reduction: (&r).into(),
                }),
                // verified-negative verdicts still produce a report
                Err(ReduceError::Structure(report)) => Ok(Report::Algebra {
                    report: (&report).into(),
                }),
                Err(ReduceError::Symmetry { certificate, .. }) => Ok(Report::Symmetry {
                    certificate: (&certificate).into(),
                }),
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Classify { system: sys } => {
            let s = session(cli)?;
            let c = classify(system(&s, sys)?).map_err(|e| e.to_string())?;
            Ok(Report::Classify {
                classification: (&c).into(),
            })
        }
        Command::Ma(MaCommand::Build { dim, spec }) => {
            let sp = resolve_spec(cli, (*dim).into(), spec)?;
            Ok(Report::MaBuild {
                system: (&build_system(&sp)).into(),
            })
        }
        Command::Ma(MaCommand::Conditions { dim, spec }) => {
            let dim: MADim = (*dim).into();
            let conditions = if spec == "hat" {
                hat_conditions(dim).map_err(|e| e.to_string())?
            } else {
                let sp = resolve_spec(cli, dim, spec)?;
                // the last kappa minus the value homogenization forces on it
                let value = homogenization_condition(&sp).map_err(|e| e.to_string())?;
                let last = sp.kappas.last().expect("spec has kappas").clone();
                let mut cs = vec![last - value];
                cs.extend(symmetry_conditions(&sp).map_err(|e| e.to_string())?);
                cs
            };
            Ok(Report::MaConditions {
                conditions: conditions
                    .iter()
                    .map(quasilin::io::render_expr)
                    .collect(),
            })
        }
        Command::Ma(MaCommand::VonKarman) => {
            let vk = von_karman_example().map_err(|e| e.to_string())?;
            Ok(Report::VonKarman {
                system: (&vk.system).into(),
                conditions: vk.conditions.iter().map(quasilin::io::render_expr).collect(),
            })
        }
        Command::Selftest { full } => Ok(Report::Selftest {
            checks: selftest(*full),
        }),
    }
}

fn session(cli: &Cli) -> Result<SessionFile, String> {
    let given = cli
        .session
        .as_ref()
        .ok_or("this command needs --session <file>")?;
    let path = locate(given).ok_or_else(|| format!("session file `{}` not found", given.display()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read `{}`: {e}", path.display()))?;
    SessionFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Resolve a session path, searching `QUASILIN_SESSION_PATH` directories for
/// relative names that do not exist as given.
fn locate(given: &Path) -> Option<PathBuf> {
    if given.exists() {
        return Some(given.to_path_buf());
    }
    if given.is_absolute() {
        return None;
    }
    let dirs = std::env::var(SESSION_PATH_VAR).ok()?;
    dirs.split(':')
        .map(|d| Path::new(d).join(given))
        .find(|p| p.exists())
}

fn field<'s>(s: &'s SessionFile, name: &str) -> Result<&'s VectorField, String> {
    s.fields
        .get(name)
        .ok_or_else(|| format!("no field named `{name}` in the session"))
}

fn system<'s>(s: &'s SessionFile, name: &str) -> Result<&'s PDESystem, String> {
    s.systems
        .get(name)
        .ok_or_else(|| format!("no system named `{name}` in the session"))
}

/// A spec name from the session, or the built-in `generic`.
fn resolve_spec(cli: &Cli, dim: MADim, name: &str) -> Result<MASpec, String> {
    if name == "generic" {
        return Ok(MASpec::generic(dim));
    }
    let s = session(cli)?;
    let sp = s
        .specs
        .get(name)
        .ok_or_else(|| format!("no spec named `{name}` in the session"))?;
    if sp.dim != dim {
        return Err(format!("spec `{name}` has a different signature"));
    }
    Ok(sp.clone())
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

fn selftest(full: bool) -> Vec<CheckDoc> {
    let mut checks = Vec::new();
    let mut check = |name: &str, run: &mut dyn FnMut() -> Result<String, String>| {
        let t0 = Instant::now();
        let (passed, mut detail) = match run() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        detail.push_str(&format!("; {:.2?}", t0.elapsed()));
        checks.push(CheckDoc {
            name: name.to_string(),
            passed,
            detail,
        });
    };

    check("algebra-structure", &mut || {
        for k in [2u32, 3, 4] {
            let r = check_theorem1_structure(&ma_fields(k)).map_err(|e| e.to_string())?;
            if !r.holds || r.rank != k as usize {
                return Err(format!("structure fails for k={k}"));
            }
        }
        Ok("translation/scaling algebras for k=2,3,4".into())
    });

    check("reduce-1p1", &mut || {
        let red = conditioned_reduction(MADim::OnePlusOne)?;
        quasilinear_verdict(&red.classification)?;
        Ok(format!(
            "transformed system: {}",
            render_system(&red.transformed)
        ))
    });

    check("reduce-2p1", &mut || {
        let red = conditioned_reduction(MADim::TwoPlusOne)?;
        quasilinear_verdict(&red.classification)?;
        Ok(format!("{} equations", red.transformed.equations.len()))
    });

    check("conditions-2p1", &mut || {
        let cs = hat_conditions(MADim::TwoPlusOne).map_err(|e| e.to_string())?;
        if cs.len() == 7 {
            Ok("seven conditions".into())
        } else {
            Err(format!("expected 7 conditions, got {}", cs.len()))
        }
    });

    check("von-karman", &mut || {
        let vk = von_karman_example().map_err(|e| e.to_string())?;
        if vk.conditions.len() == 3 {
            Ok("three reducibility conditions".into())
        } else {
            Err(format!("expected 3 conditions, got {}", vk.conditions.len()))
        }
    });

    check("witness-1p1", &mut || {
        let red = witness_reduction()?;
        quasilinear_verdict(&red.classification)?;
        let jet = |a, i| quasilin::expr::Expr::sym(quasilin::expr::SymbolId::jet(a, i));
        let target = PDESystem::new(2, 2, vec![jet(2, 1) - jet(1, 2), jet(1, 1) + jet(2, 2)]);
        if systems_match(&red.transformed, &target).map_err(|e| e.to_string())? {
            Ok("w21 - w12 = 0, w11 + w22 = 0".into())
        } else {
            Err(format!("got {}", render_system(&red.transformed)))
        }
    });

    if full {
        check("reduce-3p1", &mut || {
            let red = conditioned_reduction(MADim::ThreePlusOne)?;
            quasilinear_verdict(&red.classification)?;
            Ok(format!("{} equations", red.transformed.equations.len()))
        });
    }

    checks
}

/// The hatted generic spec with the derived conditions imposed.
fn conditioned_reduction(dim: MADim) -> Result<quasilin::transform::Reduction, String> {
    use quasilin::expr::{solve_linear, SymbolId};
    use quasilin::monge_ampere::conditions::hat_spec;

    let conds = hat_conditions(dim).map_err(|e| e.to_string())?;
    let mut spec = hat_spec(dim);
    for c in &conds {
        let mut pivot: Option<(usize, SymbolId)> = None;
        for s in c.symbols() {
            if let SymbolId::OpaqueDeriv { name, .. } = &s {
                if let Some(idx) = name.strip_prefix("kh").and_then(|t| t.parse::<usize>().ok())
                {
                    if pivot.as_ref().map_or(true, |(b, _)| idx < *b) {
                        pivot = Some((idx, s.clone()));
                    }
                }
            }
        }
        let (idx, sym) = pivot.ok_or("condition without a kappa pivot")?;
        let sol = solve_linear(std::slice::from_ref(c), std::slice::from_ref(&sym))
            .map_err(|e| e.to_string())?;
        spec.kappas[idx - 1] = sol[&sym].clone();
    }
    reduce_ma(&spec, None).map_err(|e| e.to_string())
}

/// The concrete witness: f = (u1^2 + u2^2)/2, alphas 0, kappas (-2,1,0,1,0).
fn witness_reduction() -> Result<quasilin::transform::Reduction, String> {
    use quasilin::expr::{Expr, SymbolId};

    let f = |index: &[u32]| Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], index));
    let u = |a| Expr::sym(SymbolId::dep(a));
    let x = |i| Expr::sym(SymbolId::indep(i));
    let jet = |a, i| Expr::sym(SymbolId::jet(a, i));
    let det = jet(1, 1) * jet(2, 2) - Expr::pow(jet(1, 2), 2);
    // with f11 = f22 = 1, f12 = 0 the kappa-1 formula gives -(1 + 1)/1 = -2
    let system = PDESystem::new(
        2,
        2,
        vec![
            jet(2, 1) - jet(1, 2),
            Expr::int(-2) * det + jet(1, 1) + jet(2, 2),
        ],
    );
    let translations: Vec<VectorField> = (1..=2)
        .map(|i| VectorField::translation(2, 2, i))
        .collect();
    let scaling = VectorField::new(
        2,
        2,
        vec![x(1) - f(&[1]), x(2) - f(&[2])],
        vec![Expr::int(0), Expr::int(0)],
    )
    .map_err(|e| e.to_string())?;
    // bind the opaque derivatives of f = (u1^2 + u2^2)/2 to their values
    let mut bind = std::collections::BTreeMap::new();
    bind.insert(SymbolId::opaque_deriv("f", &[1, 2], &[1]), u(1));
    bind.insert(SymbolId::opaque_deriv("f", &[1, 2], &[2]), u(2));
    let scaling = VectorField::new(
        2,
        2,
        scaling.xi.iter().map(|e| e.substitute(&bind)).collect(),
        scaling.eta.clone(),
    )
    .map_err(|e| e.to_string())?;
    let mut fields = translations;
    fields.push(scaling);
    reduce(&system, &fields, None).map_err(|e| e.to_string())
}

fn quasilinear_verdict(
    c: &quasilin::transform::ClassificationReport,
) -> Result<(), String> {
    if c.quasilinear && c.autonomous && c.homogeneous_in_jets.iter().all(|&b| b) {
        Ok(())
    } else {
        Err("transformed system is not homogeneous autonomous quasilinear".into())
    }
}

fn render_system(s: &PDESystem) -> String {
    s.equations
        .iter()
        .map(quasilin::io::render_expr)
        .collect::<Vec<_>>()
        .join("; ")
}
