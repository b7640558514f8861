use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use symverify::reduction::{apply_ansatz, compare_reduced, substituted_residuals, system_residuals};
use symverify::scenario::{
    builtin, builtin_named, check_coverage, manifest, run_scenario, run_suite, CheckBody, CheckSpec, CheckVerdict, Declarations, Env,
    EquationSpec, NamedExpr, OperatorSpec, RunOptions, Scenario, SystemSpec, VerificationReport,
};

#[derive(Parser)]
#[command(name = "symverify", version, about = "Symbolic and numeric verification of symmetry reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the builtin scenarios, or one scenario (file or builtin name).
    RunSuite {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report JSON here (an array when several scenarios run).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an operator against a system.
    CheckSymmetry {
        /// JSON with `declarations`, optional `macros` and `equations`.
        #[arg(long)]
        system: PathBuf,
        /// JSON with `coefficients` or `characteristic`.
        #[arg(long)]
        operator: PathBuf,
        /// Test conditional invariance instead.
        #[arg(long)]
        conditional: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reduction checks of a scenario (file or builtin name).
    Reduce {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        show_steps: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the solution checks of a scenario (file or builtin name).
    VerifySolution {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    declarations: Declarations,
    #[serde(default)]
    macros: Vec<NamedExpr>,
    #[serde(default)]
    independents: Option<Vec<String>>,
    #[serde(default)]
    dependents: Option<Vec<String>>,
    equations: Vec<EquationSpec>,
}

const REDUCTION_KINDS: [&str; 6] =
    ["reduce-and-compare", "implicit-derivative", "compatibility", "ansatz-residuals", "corresponding-system", "hodograph"];
const SOLUTION_KINDS: [&str; 3] = ["verify-solution", "backlund", "ode-closed-form"];

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("symverify: {e}");
            ExitCode::from(2)
        }
    }
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn run(cli: Cli) -> Res<bool> {
    match cli.command {
        Command::RunSuite { scenario, seed, out } => {
            let all = builtin();
            check_coverage(&manifest(), &all)?;
            let opts = RunOptions { seed };
            match scenario {
                Some(name) => {
                    let sc = load(&name)?;
                    let rep = run_scenario(&sc, &opts)?;
                    finish(&[rep], out.as_deref(), false)
                }
                None => {
                    let reps = run_suite(&all, &opts)?;
                    finish(&reps, out.as_deref(), true)
                }
            }
        }
        Command::CheckSymmetry { system, operator, conditional, seed, out } => {
            let sys: SystemFile = serde_json::from_str(&std::fs::read_to_string(&system)?)?;
            let op: OperatorSpec = serde_json::from_str(&std::fs::read_to_string(&operator)?)?;
            let body = if conditional {
                CheckBody::CheckConditional { operator: "operator".into(), system: "system".into() }
            } else if op.characteristic.is_empty() {
                CheckBody::CheckSymmetry { operator: "operator".into(), system: "system".into() }
            } else {
                CheckBody::CheckLieBacklund { operator: "operator".into(), system: "system".into() }
            };
            let sc = Scenario {
                name: sys.name.unwrap_or_else(|| stem(&system)),
                declarations: sys.declarations,
                macros: sys.macros,
                systems: BTreeMap::from([(
                    "system".to_string(),
                    SystemSpec { independents: sys.independents, dependents: sys.dependents, equations: sys.equations },
                )]),
                operators: BTreeMap::from([("operator".to_string(), op)]),
                checks: vec![CheckSpec {
                    id: stem(&operator),
                    policy: Default::default(),
                    expect: Default::default(),
                    bindings: BTreeMap::new(),
                    note: String::new(),
                    body,
                }],
                ..Default::default()
            };
            let rep = run_scenario(&sc, &RunOptions { seed })?;
            finish(&[rep], out.as_deref(), false)
        }
        Command::Reduce { scenario, show_steps, seed, out } => {
            let sc = load(&scenario)?;
            if show_steps {
                steps(&sc, seed)?;
            }
            let rep = run_scenario(&only(sc, &REDUCTION_KINDS), &RunOptions { seed })?;
            finish(&[rep], out.as_deref(), false)
        }
        Command::VerifySolution { scenario, seed, out } => {
            let sc = load(&scenario)?;
            let rep = run_scenario(&only(sc, &SOLUTION_KINDS), &RunOptions { seed })?;
            finish(&[rep], out.as_deref(), false)
        }
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// A path to a scenario file, or the name of a builtin one.
fn load(arg: &str) -> Res<Scenario> {
    let p = Path::new(arg);
    if p.exists() {
        return Ok(Scenario::from_json(&std::fs::read_to_string(p)?)?);
    }
    builtin_named(arg).ok_or_else(|| format!("no scenario file or builtin scenario '{arg}'").into())
}

fn only(mut sc: Scenario, kinds: &[&str]) -> Scenario {
    sc.checks.retain(|c| kinds.contains(&c.body.kind()));
    sc
}

fn finish(reps: &[VerificationReport], out: Option<&Path>, array: bool) -> Res<bool> {
    for r in reps {
        println!("{} [{}]", r.scenario, if r.passed() { "pass" } else { "fail" });
        for c in &r.checks {
            let v = match c.verdict {
                CheckVerdict::Pass => "pass",
                CheckVerdict::Fail => "FAIL",
                CheckVerdict::ReportOnly => "report",
            };
            let m = c.max_residual.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "-".into());
            println!("  {v:<6} {:<36} {:<22} {m:>10}", c.id, c.kind);
        }
    }
    if let Some(path) = out {
        let text = if array { serde_json::to_string_pretty(reps)? } else { reps[0].to_json() };
        std::fs::write(path, text + "\n")?;
    }
    Ok(reps.iter().all(VerificationReport::passed))
}

fn steps(sc: &Scenario, seed: Option<u64>) -> Res<()> {
    let env = Env::new(sc, seed)?;
    env.validate()?;
    for c in &sc.checks {
        let CheckBody::ReduceAndCompare { ansatz, system, expected, variables } = &c.body else { continue };
        println!("## {}: ansatz {ansatz} on system {system}", c.id);
        let ans = env.ansatz(ansatz)?;
        for (s, d) in &ans.invariants {
            println!("  invariant {} = {d}", symverify::expr::Expr::sym(s.clone()));
        }
        let eqs = system_residuals(&env.system(system)?);
        for (label, r) in substituted_residuals(&eqs, &ans, &env.independents())? {
            println!("  substituted {label}: {r}");
        }
        let rs = apply_ansatz(&eqs, &ans, &env.independents())?;
        for l in &rs.lcds {
            println!("  cleared by {l}");
        }
        for e in &rs.equations {
            println!("  reduced ({}, coefficient of {}): {} = 0", e.source, e.basis, e.residual);
        }
        for l in &rs.leftover {
            println!("  leftover: {l}");
        }
        println!("  k1 = {}, m = {}", rs.equations.len(), rs.unknowns);
        let inv: Vec<String> = ans.invariants.iter().map(|(s, _)| symverify::expr::Expr::sym(s.clone()).to_string()).collect();
        let vars = variables.iter().map(|v| env.symbol(v)).collect::<Result<Vec<_>, _>>()?;
        for m in compare_reduced(&rs.residuals(), &env.exprs(expected, &inv)?, &vars) {
            match &m.matched {
                Some((i, ratio)) => println!("  expected {} matches equation {} with ratio {ratio}", m.expected, i + 1),
                None => println!("  expected {} unmatched", m.expected),
            }
        }
    }
    Ok(())
}
