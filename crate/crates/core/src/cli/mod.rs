//! The `milcheck` command line.
//!
//! Exit codes: 0 when the property holds or a witness is found, 1 when it
//! fails or there is no witness, 2 for usage and input errors, 3 when the
//! search budget runs out.

pub mod corpus;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::bisim::{check_invariance, largest_bisimulation, teams_bisimilar, InvarianceError, InvarianceVerdict};
use crate::bounded_sat::{bounded_sat, SatError, SatQuery};
use crate::checker::{check, CheckConfig, CheckError};
use crate::dining::{self, DcError};
use crate::fo_translate::{export, translate, verify_prefix, ExportFormat};
use crate::formula::{parse, Formula, VarId};
use crate::kripke::{load_model, save_model, KripkeModel, Team, WorldId};

pub use corpus::gen_corpus;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "milcheck", version, about = "Team-semantics model checker for modal independence logic")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArg {
    /// Search step budget.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a formula on a model file's team.
    Check {
        model: PathBuf,
        /// Formula text, or @path to read it from a file.
        formula: String,
        /// Comma-separated world ids; overrides the team in the model file.
        #[arg(long)]
        team: Option<String>,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Search for a small model and team satisfying a formula.
    Sat {
        formula: String,
        #[arg(long, default_value_t = 4)]
        max_worlds: usize,
        #[arg(long)]
        allow_empty_team: bool,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Print the first-order part of the existential second-order translation.
    Translate {
        formula: String,
        #[arg(long, default_value = "tptp")]
        format: String,
    },
    /// Compare the teams of two model files up to bisimulation.
    Bisim {
        left: PathBuf,
        right: PathBuf,
        /// Comma-separated variables to compare; defaults to both vocabularies.
        #[arg(long)]
        vars: Option<String>,
        /// Also check that this formula gets the same verdict on both sides.
        #[arg(long)]
        formula: Option<String>,
    },
    /// The dining cryptographers case study.
    Dc {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        emit_model: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["verify_proposition", "succinct"])]
        check: bool,
        #[arg(long, conflicts_with = "succinct")]
        verify_proposition: bool,
        /// Print statistics for the collapsed anonymity formula at this size.
        #[arg(long)]
        succinct: Option<usize>,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Print a seeded corpus of formulas and models.
    Corpus {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        size: usize,
    },
}

/// Outcome of a subcommand before rendering.
struct Report {
    code: i32,
    text: String,
    json: Value,
}

enum Failure {
    Usage(String),
    Budget(u64),
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::BudgetExhausted(b) => Failure::Budget(b),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<DcError> for Failure {
    fn from(e: DcError) -> Self {
        match e {
            DcError::BudgetExhausted(b) => Failure::Budget(b),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_formula(arg: &str) -> Result<Formula, Failure> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?,
        None => arg.to_string(),
    };
    parse(text.trim()).map_err(usage)
}

fn read_model(path: &Path) -> Result<(KripkeModel, Team), Failure> {
    load_model(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_list<T, F: Fn(&str) -> Result<T, String>>(text: &str, item: F) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(s).map_err(Failure::Usage))
        .collect()
}

fn verdict(holds: bool) -> (&'static str, i32) {
    if holds {
        ("holds", EXIT_HOLDS)
    } else {
        ("fails", EXIT_FAILS)
    }
}

fn team_ids(t: &Team) -> Vec<u32> {
    t.iter().map(|w| w.0).collect()
}

fn cmd_check(model: &Path, formula: &str, team: Option<&str>, budget: u64) -> Result<Report, Failure> {
    let (m, file_team) = read_model(model)?;
    let f = read_formula(formula)?;
    let t = match team {
        Some(ids) => Team::from_worlds(parse_list(ids, |s| {
            s.parse::<u32>().map(WorldId).map_err(|e| format!("bad world id {s:?}: {e}"))
        })?),
        None => file_team,
    };
    let holds = check(&m, &t, &f, CheckConfig::with_budget(budget))?;
    let (status, code) = verdict(holds);
    Ok(Report {
        code,
        text: format!("{status}: {f} on team {:?}", team_ids(&t)),
        json: json!({"status": status, "formula": f.render(), "team": team_ids(&t)}),
    })
}

fn cmd_sat(formula: &str, max_worlds: usize, allow_empty: bool, budget: u64) -> Result<Report, Failure> {
    let f = read_formula(formula)?;
    let q = SatQuery {
        formula: f.clone(),
        max_worlds,
        require_nonempty_team: !allow_empty,
        budget: Some(budget),
    };
    match bounded_sat(&q) {
        Ok(Some((m, t))) => {
            let model: Value = serde_json::from_str(&crate::kripke::model_to_json(&m, &t)).expect("valid json");
            Ok(Report {
                code: EXIT_HOLDS,
                text: format!(
                    "satisfiable: {} worlds, team {:?}\n{}",
                    m.world_count(),
                    team_ids(&t),
                    crate::kripke::model_to_json(&m, &t)
                ),
                json: json!({"status": "satisfiable", "formula": f.render(), "model": model}),
            })
        }
        Ok(None) => Ok(Report {
            code: EXIT_FAILS,
            text: format!("no model with at most {max_worlds} worlds"),
            json: json!({"status": "unsatisfiable_within_bound", "formula": f.render(), "max_worlds": max_worlds}),
        }),
        Err(SatError::BudgetExhausted(b)) => Err(Failure::Budget(b)),
        Err(e) => Err(usage(e)),
    }
}

fn cmd_translate(formula: &str, format: &str) -> Result<Report, Failure> {
    let f = read_formula(formula)?;
    let fmt: ExportFormat = format.parse().map_err(usage)?;
    let s = translate(&f).map_err(usage)?;
    let text = export(&s, fmt);
    Ok(Report {
        code: EXIT_HOLDS,
        json: json!({
            "status": "translated",
            "formula": f.render(),
            "format": format.to_ascii_lowercase(),
            "prefix_ok": verify_prefix(&s),
            "output": text,
        }),
        text: text.trim_end().to_string(),
    })
}

fn cmd_bisim(left: &Path, right: &Path, vars: Option<&str>, formula: Option<&str>) -> Result<Report, Failure> {
    let (m, t) = read_model(left)?;
    let (m2, t2) = read_model(right)?;
    let vars: Vec<VarId> = match vars {
        Some(list) => parse_list(list, |s| VarId::new(s).map_err(|e| e.to_string()))?,
        None => {
            let mut all: Vec<VarId> = m.vocabulary().iter().chain(m2.vocabulary()).cloned().collect();
            all.sort();
            all.dedup();
            all
        }
    };
    let z = largest_bisimulation(&m, &m2, &vars);
    let bisimilar = teams_bisimilar(&z, &t, &t2);
    let pairs: Vec<(u32, u32)> = z.pairs().map(|(a, b)| (a.0, b.0)).collect();
    let mut text = format!(
        "teams {} bisimilar; largest bisimulation has {} pairs",
        if bisimilar { "are" } else { "are not" },
        pairs.len()
    );
    let mut out = json!({"status": if bisimilar { "bisimilar" } else { "not_bisimilar" }, "pairs": pairs});
    let mut code = if bisimilar { EXIT_HOLDS } else { EXIT_FAILS };
    if let Some(formula) = formula {
        let f = read_formula(formula)?;
        let (desc, value) = match check_invariance(&m, &t, &m2, &t2, &f) {
            Ok(InvarianceVerdict::Invariant(v)) => (format!("same verdict ({v})"), json!({"invariant": true, "verdict": v})),
            Ok(InvarianceVerdict::ExpectedNonInvariance { atoms, left, right }) => (
                format!("verdicts differ ({left} vs {right}); atoms without first-order definition: {}", atoms.join(", ")),
                json!({"invariant": false, "left": left, "right": right, "undefinable_atoms": atoms}),
            ),
            Ok(InvarianceVerdict::Counterexample { left, right }) => {
                code = EXIT_FAILS;
                (
                    format!("counterexample to invariance ({left} vs {right})"),
                    json!({"invariant": false, "left": left, "right": right, "counterexample": true}),
                )
            }
            Err(InvarianceError::NotBisimilar) => ("not compared".to_string(), Value::Null),
            Err(InvarianceError::Check(e)) => return Err(e.into()),
        };
        text.push_str(&format!("\nformula {f}: {desc}"));
        out["invariance"] = value;
    }
    Ok(Report { code, text, json: out })
}

fn cmd_dc(
    n: usize,
    emit: Option<&Path>,
    do_check: bool,
    proposition: bool,
    succinct: Option<usize>,
    budget: u64,
) -> Result<Report, Failure> {
    if let Some(i) = succinct {
        let f = dining::succinct_family(i)?;
        let text = format!(
            "collapsed anonymity formula for {i}: size {}, modal depth {}, {} diamonds",
            f.size(),
            f.modal_depth(),
            f.diamond_count()
        );
        return Ok(Report {
            code: EXIT_HOLDS,
            text,
            json: json!({
                "status": "generated",
                "i": i,
                "size": f.size(),
                "modal_depth": f.modal_depth(),
                "diamonds": f.diamond_count(),
                "formula": f.render(),
            }),
        });
    }
    let inst = dining::build_model(n)?;
    if let Some(path) = emit {
        save_model(&inst.model, &Team::singleton(inst.root), path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let mut out = json!({
        "n": n,
        "worlds": inst.model.world_count(),
        "edges": inst.model.edge_count(),
    });
    let mut text = format!(
        "dining cryptographers, n = {n}: {} worlds, {} edges",
        inst.model.world_count(),
        inst.model.edge_count()
    );
    let mut code = EXIT_HOLDS;
    if do_check {
        let r = dining::evaluate(&inst, CheckConfig::with_budget(budget))?;
        let holds = r.anonymity();
        code = verdict(holds).1;
        text.push_str(&format!("\nphi_g: {}", r.global));
        for &((i, k), v) in &r.local {
            text.push_str(&format!("\nphi_{i}_{k}: {v}"));
        }
        text.push_str(&format!("\nanonymity formula: {}", verdict(holds).0));
        out["status"] = json!(verdict(holds).0);
        out["phi_g"] = json!(r.global);
        out["phi_local"] = r
            .local
            .iter()
            .map(|&((i, k), v)| json!({"observer": i, "payer": k, "holds": v}))
            .collect();
    } else if proposition {
        let violation = dining::first_violation(&inst);
        code = verdict(violation.is_none()).1;
        out["status"] = json!(verdict(violation.is_none()).0);
        match violation {
            None => text.push_str("\nproposition: holds"),
            Some(v) => {
                let assignment: Vec<String> = v
                    .assignment
                    .iter()
                    .map(|(x, b)| format!("{x}={}", u8::from(*b)))
                    .collect();
                text.push_str(&format!(
                    "\nproposition: fails for observer {}, payer {}: no witness with p_{}={} for {}",
                    v.observer,
                    v.payer,
                    v.payer,
                    u8::from(v.missing),
                    assignment.join(" ")
                ));
                out["violation"] = json!({
                    "observer": v.observer,
                    "payer": v.payer,
                    "missing_value": v.missing,
                    "assignment": assignment,
                });
            }
        }
    } else {
        out["status"] = json!("built");
    }
    Ok(Report { code, text, json: out })
}

fn cmd_corpus(seed: u64, size: usize) -> Report {
    let c = gen_corpus(seed, size);
    let formulas: Vec<Value> = c
        .formulas
        .iter()
        .map(|f| json!({"kind": f.kind.to_string(), "depth": f.depth, "formula": f.formula.render()}))
        .collect();
    let models: Vec<Value> = c
        .models
        .iter()
        .map(|(m, t)| serde_json::from_str(&corpus::compact_model(m, t)).expect("valid json"))
        .collect();
    Report {
        code: EXIT_HOLDS,
        text: c.render().trim_end().to_string(),
        json: json!({"status": "generated", "seed": seed, "formulas": formulas, "models": models}),
    }
}

fn dispatch(cmd: &Command) -> Result<Report, Failure> {
    match cmd {
        Command::Check {
            model,
            formula,
            team,
            budget,
        } => cmd_check(model, formula, team.as_deref(), budget.budget),
        Command::Sat {
            formula,
            max_worlds,
            allow_empty_team,
            budget,
        } => cmd_sat(formula, *max_worlds, *allow_empty_team, budget.budget),
        Command::Translate { formula, format } => cmd_translate(formula, format),
        Command::Bisim {
            left,
            right,
            vars,
            formula,
        } => cmd_bisim(left, right, vars.as_deref(), formula.as_deref()),
        Command::Dc {
            n,
            emit_model,
            check,
            verify_proposition,
            succinct,
            budget,
        } => cmd_dc(*n, emit_model.as_deref(), *check, *verify_proposition, *succinct, budget.budget),
        Command::Corpus { seed, size } => Ok(cmd_corpus(*seed, *size)),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Check { .. } => "check",
        Command::Sat { .. } => "sat",
        Command::Translate { .. } => "translate",
        Command::Bisim { .. } => "bisim",
        Command::Dc { .. } => "dc",
        Command::Corpus { .. } => "corpus",
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_HOLDS };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let name = command_name(&cli.command);
    let (code, text, mut body) = match dispatch(&cli.command) {
        Ok(r) => (r.code, r.text, r.json),
        Err(Failure::Usage(msg)) => (EXIT_USAGE, format!("error: {msg}"), json!({"status": "error", "error": msg})),
        Err(Failure::Budget(b)) => (
            EXIT_BUDGET,
            format!("budget of {b} steps exhausted"),
            json!({"status": "budget_exhausted", "budget": b}),
        ),
    };
    if cli.json {
        body["schema_version"] = json!(SCHEMA_VERSION);
        body["command"] = json!(name);
        body["exit_code"] = json!(code);
        let _ = writeln!(out, "{body}");
    } else if code == EXIT_USAGE {
        let _ = writeln!(err, "{text}");
    } else {
        let _ = writeln!(out, "{text}");
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("milcheck").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
    }

    #[test]
    fn translate_is_deterministic() {
        let a = run_str(&["translate", "p | q", "--format", "tptp"]);
        assert_eq!(a.0, 0);
        assert_eq!(a, run_str(&["translate", "p | q", "--format", "tptp"]));
        assert_eq!(run_str(&["translate", "p", "--format", "dimacs"]).0, 2);
    }

    #[test]
    fn json_has_schema_version() {
        let (code, text) = run_str(&["--json", "sat", "p & ~p", "--max-worlds", "2"]);
        assert_eq!(code, 1);
        let v: Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "sat");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_str(&["frobnicate"]).0, 2);
        assert_eq!(run_str(&["sat", "p &"]).0, 2);
        assert_eq!(run_str(&["--help"]).0, 0);
    }
}
