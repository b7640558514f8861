use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use super::env::Env;
use super::schema::{CheckBody, CheckSpec, Expectation, FunctionSpec, GridSpec, ImplicitSpec};
use super::ScenarioError;
use crate::expr::{
    differentiate, evaluate, name, simplify, substitute, substitute_functions, Compiled, EvalError, Expr, Name,
    Symbol,
};
use crate::jet::{implicit_derivative, Equation};
use crate::numerics::{fd_residual, integrate_ode, richardson_ratio, rk4, FdReport, ImplicitSolution, NumericsError};
use crate::reduction::{
    apply_ansatz, compare_reduced, compatibility_conditions, corresponding_system, hodograph_transform, substituted_residuals,
    system_residuals, Match, Prescription,
};
use crate::symmetry::{
    check_conditional_symmetry, check_invariant, check_lie_backlund, check_symmetry, decide, invariance_condition_of_solution,
    lie_bracket, same_field, InvarianceReport, SolutionCondition, Verdict, VectorField,
};

/// Result of one check before the verdict policy is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub ok: bool,
    pub max_residual: Option<f64>,
    pub details: String,
    /// Largest numeric value of a residual decided symbolic-zero.
    pub cross_check: Option<f64>,
}

/// A failure inside the computation, as opposed to a malformed scenario.
pub(crate) enum Failure {
    Scenario(ScenarioError),
    Compute(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Scenario(e)
    }
}

macro_rules! compute_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Compute(e.to_string())
            }
        }
    )*};
}

compute_errors!(
    crate::jet::JetError,
    crate::reduction::ReductionError,
    crate::symmetry::SymmetryError,
    NumericsError,
    EvalError
);

type Res = Result<Outcome, Failure>;

const SHOW: usize = 240;

fn short(s: String) -> String {
    if s.chars().count() <= SHOW {
        s
    } else {
        let t: String = s.chars().take(SHOW).collect();
        format!("{t}...")
    }
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::SymbolicZero => "symbolic-zero",
        Verdict::NumericZero => "numeric-zero",
        Verdict::Nonzero => "nonzero",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn describe(rep: &InvarianceReport) -> String {
    let mut s = verdict_name(rep.verdict).to_string();
    if let Some(c) = &rep.cross_check {
        s += &format!(" (unsimplified relative max |r| {} at {} points)", sci(c.max_abs), c.accepted);
    }
    if let Some(o) = &rep.sampling {
        s += &format!(" (max |r| {} over {} samples, {} rejected)", sci(o.max_abs), o.accepted, o.rejected);
    }
    if rep.verdict == Verdict::Nonzero || rep.verdict == Verdict::Inconclusive {
        if let Some(r) = rep.residuals.iter().find(|r| !r.is_zero()) {
            s += &format!("; residual {}", short(r.to_string()));
        }
    }
    s
}

fn judged(rep: &InvarianceReport, expect: Expectation) -> bool {
    match expect {
        Expectation::Zero => rep.verdict.holds(),
        Expectation::Nonzero => rep.verdict == Verdict::Nonzero,
        Expectation::Error => false,
    }
}

fn from_report(rep: &InvarianceReport, expect: Expectation) -> Outcome {
    Outcome { ok: judged(rep, expect), max_residual: rep.max_residual(), details: describe(rep), cross_check: cross_of(rep) }
}

fn cross_of(rep: &InvarianceReport) -> Option<f64> {
    rep.cross_check.as_ref().map(|c| c.max_abs)
}

fn fold_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Replaces jets of `base` by derivatives of `solution`.
pub fn lift(e: &Expr, base: &str, solution: &Expr) -> Expr {
    let map: BTreeMap<Symbol, Expr> = e
        .jets()
        .into_iter()
        .filter(|j| &*j.base == base)
        .map(|j| {
            let mut d = solution.clone();
            for x in &j.index {
                d = differentiate(&d, &Symbol::Indep(x.clone()));
            }
            (Symbol::Jet(j), d)
        })
        .collect();
    substitute(e, &map)
}

fn matches_text(ms: &[Match]) -> String {
    ms.iter()
        .map(|m| match &m.matched {
            Some((i, ratio)) => format!("[{}] matches equation {} (ratio {})", m.expected, i + 1, ratio),
            None => format!(
                "[{}] unmatched{}",
                m.expected,
                m.difference.as_ref().map(|d| format!(", difference {}", short(d.to_string()))).unwrap_or_default()
            ),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn field_text(f: &VectorField) -> String {
    match f {
        VectorField::Coefficients(m) => {
            m.iter().filter(|(_, c)| !c.is_zero()).map(|(s, c)| format!("({c}) d/d{}", Expr::sym(s.clone()))).collect::<Vec<_>>().join(" + ")
        }
        VectorField::Evolutionary(m) => m.iter().map(|(u, q)| format!("({q}) d/d{u}")).collect::<Vec<_>>().join(" + "),
    }
}

/// Substitutes function definitions until none applies.
pub fn expand_functions(e: &Expr, defs: &BTreeMap<Name, crate::expr::FunctionDef>) -> Expr {
    let mut cur = e.clone();
    for _ in 0..8 {
        let next = substitute_functions(&cur, defs);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn without_functions(mut ans: crate::reduction::Ansatz, defs: &BTreeMap<Name, crate::expr::FunctionDef>) -> crate::reduction::Ansatz {
    ans.prescription = match ans.prescription {
        Prescription::Derivatives(p) => {
            Prescription::Derivatives(p.into_iter().map(|(j, e)| (j, expand_functions(&e, defs))).collect())
        }
        Prescription::Solution(p) => Prescription::Solution(p.into_iter().map(|(u, e)| (u, expand_functions(&e, defs))).collect()),
    };
    ans
}

pub(crate) fn execute(env: &Env, spec: &CheckSpec) -> Res {
    let expect = spec.expect;
    let opts = || env.sample_options(&spec.bindings);
    match &spec.body {
        CheckBody::CheckSymmetry { operator, system } => {
            let rep = check_symmetry(&env.operator(operator)?, &env.system(system)?, &opts()?)?;
            Ok(from_report(&rep, expect))
        }
        CheckBody::CheckConditional { operator, system } => {
            let rep = check_conditional_symmetry(&env.operator(operator)?, &env.system(system)?, &opts()?)?;
            Ok(from_report(&rep, expect))
        }
        CheckBody::CheckLieBacklund { operator, system } => match env.operator(operator)? {
            VectorField::Evolutionary(q) => Ok(from_report(&check_lie_backlund(&q, &env.system(system)?, &opts()?)?, expect)),
            _ => Err(ScenarioError::Schema(spec.id.clone(), format!("operator {operator} is not in evolutionary form")).into()),
        },
        CheckBody::CheckInvariant { operator, expressions } => {
            let f = env.operator(operator)?;
            let space = env.space();
            let o = opts()?;
            let mut out = Outcome { ok: true, max_residual: None, details: String::new(), cross_check: None };
            let mut parts = Vec::new();
            for (text, g) in expressions.iter().zip(env.exprs(expressions, &[])?) {
                let rep = check_invariant(&f, &g, &space, &o);
                out.ok &= judged(&rep, expect);
                out.max_residual = fold_max(out.max_residual, rep.max_residual());
                out.cross_check = fold_max(out.cross_check, cross_of(&rep));
                parts.push(format!("{text}: {}", describe(&rep)));
            }
            out.details = parts.join("; ");
            Ok(out)
        }
        CheckBody::LieBracket { left, right, expected } => {
            let c = lie_bracket(&env.operator(left)?, &env.operator(right)?, &env.space())?;
            let same = same_field(&c, &env.operator(expected)?);
            let ok = match expect {
                Expectation::Zero => same,
                Expectation::Nonzero => !same,
                Expectation::Error => false,
            };
            let verb = if same { "equals" } else { "differs from" };
            Ok(Outcome { ok, max_residual: None, details: format!("[{left}, {right}] = {} {verb} {expected}", field_text(&c)), cross_check: None })
        }
        CheckBody::Identity { expressions, functions, dependent, solution } => {
            let defs = env.function_defs(functions)?;
            let extra = function_params(functions);
            let mut es = env.exprs(expressions, &extra)?;
            match (dependent, solution) {
                (Some(u), Some(s)) => {
                    let s = env.expr(s, &extra)?;
                    es = es.iter().map(|e| lift(e, u, &s)).collect();
                }
                (None, None) => {}
                _ => return Err(ScenarioError::Schema(spec.id.clone(), "give both dependent and solution".into()).into()),
            }
            let es: Vec<Expr> = es.iter().map(|e| expand_functions(e, &defs)).collect();
            let mut out = Outcome { ok: true, max_residual: None, details: String::new(), cross_check: None };
            let mut parts = Vec::new();
            let o = opts()?;
            for (text, e) in expressions.iter().zip(es) {
                let rep = decide(vec![e], &o);
                out.ok &= judged(&rep, expect);
                out.max_residual = fold_max(out.max_residual, rep.max_residual());
                out.cross_check = fold_max(out.cross_check, cross_of(&rep));
                parts.push(format!("{}: {}", short(text.clone()), describe(&rep)));
            }
            out.details = parts.join("; ");
            Ok(out)
        }
        CheckBody::ImplicitDerivative { ansatz, target, wrt, expected } => {
            let ans = env.ansatz(ansatz)?;
            let Prescription::Derivatives(pairs) = &ans.prescription else {
                return Err(ScenarioError::Schema(spec.id.clone(), "needs a derivative ansatz".into()).into());
            };
            let mut space = env.space();
            for (s, d) in &ans.invariants {
                space.define(s.clone(), d.clone());
            }
            let rels = pairs.iter().map(|(j, e)| Equation::solved(j.clone(), e.clone())).collect::<Result<Vec<_>, _>>()?;
            let inv: Vec<String> = ans.invariants.iter().map(|(s, _)| Expr::sym(s.clone()).to_string()).collect();
            let d = implicit_derivative(&rels, &env.jet(target)?, wrt, &space)?;
            let rep = decide(vec![d.clone() - env.expr(expected, &inv)?], &opts()?);
            let mut out = from_report(&rep, expect);
            out.details = format!("d{target}/d{wrt} = {}; against expected: {}", short(d.to_string()), out.details);
            Ok(out)
        }
        CheckBody::ReduceAndCompare { ansatz, system, expected, variables } => {
            let ans = env.ansatz(ansatz)?;
            let eqs = system_residuals(&env.system(system)?);
            let rs = apply_ansatz(&eqs, &ans, &env.independents())?;
            let inv: Vec<String> = ans.invariants.iter().map(|(s, _)| Expr::sym(s.clone()).to_string()).collect();
            let vars = variables.iter().map(|v| env.symbol(v)).collect::<Result<Vec<_>, _>>()?;
            let ms = compare_reduced(&rs.residuals(), &env.exprs(expected, &inv)?, &vars);
            let matched = ms.iter().all(|m| m.matched.is_some());
            let k1 = rs.equations.len();
            let ok = rs.succeeded() && k1 <= rs.unknowns && matched;
            let reduced = rs.equations.iter().map(|e| format!("{} = 0", e.residual)).collect::<Vec<_>>().join(", ");
            let lcds = rs.lcds.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ");
            let mut details = format!("reduced: {}; k1 = {k1}, m = {}; cleared by {lcds}; {}", short(reduced), rs.unknowns, matches_text(&ms));
            if !rs.leftover.is_empty() {
                details += &format!("; leftover {}", short(rs.leftover[0].to_string()));
            }
            Ok(Outcome { ok: if expect == Expectation::Nonzero { !ok } else { ok }, max_residual: None, details, cross_check: None })
        }
        CheckBody::AnsatzResiduals { ansatz, system, functions } => {
            let defs = env.function_defs(functions)?;
            let ans = without_functions(env.ansatz(ansatz)?, &defs);
            let eqs = system_residuals(&env.system(system)?);
            let o = opts()?;
            let mut out = Outcome { ok: true, max_residual: None, details: String::new(), cross_check: None };
            let mut parts = Vec::new();
            for (label, r) in substituted_residuals(&eqs, &ans, &env.independents())? {
                let rep = decide(vec![expand_functions(&r, &defs)], &o);
                out.ok &= judged(&rep, expect);
                out.max_residual = fold_max(out.max_residual, rep.max_residual());
                out.cross_check = fold_max(out.cross_check, cross_of(&rep));
                parts.push(format!("{label}: {}", describe(&rep)));
            }
            out.details = parts.join("; ");
            Ok(out)
        }
        CheckBody::Compatibility { ansatz, expected } => {
            let ans = env.ansatz(ansatz)?;
            let cs = compatibility_conditions(&ans, &env.independents())?;
            let o = opts()?;
            let mut out = Outcome { ok: true, max_residual: None, details: String::new(), cross_check: None };
            let mut parts = Vec::new();
            for (text, e) in expected.iter().zip(env.exprs(expected, &[])?) {
                let mut best: Option<InvarianceReport> = None;
                for c in &cs {
                    for cand in [c.clone() - e.clone(), c.clone() + e.clone()] {
                        let rep = decide(vec![cand], &o);
                        let better = match &best {
                            None => true,
                            Some(b) => rep.verdict.holds() && !b.verdict.holds(),
                        };
                        if better {
                            best = Some(rep);
                        }
                    }
                }
                let rep = best.unwrap_or_else(|| decide(vec![e.clone()], &o));
                out.ok &= judged(&rep, expect);
                out.max_residual = fold_max(out.max_residual, rep.max_residual());
                out.cross_check = fold_max(out.cross_check, cross_of(&rep));
                parts.push(format!("{text}: {}", describe(&rep)));
            }
            out.details = format!("{} compatibility condition(s); {}", cs.len(), parts.join("; "));
            Ok(out)
        }
        CheckBody::CorrespondingSystem { equation, dependent, independents, names, expected } => {
            let eq = env.expr(equation, &[])?;
            let ns: Vec<&str> = names.iter().map(String::as_str).collect();
            let sys = corresponding_system(&eq, dependent, [&independents[0], &independents[1]], &ns)?;
            let actual = system_residuals(&sys);
            let ms = compare_reduced(&actual, &env.exprs(expected, &[])?, &[]);
            let ok = ms.iter().all(|m| m.matched.is_some()) && actual.len() == expected.len();
            let text = actual.iter().map(|a| format!("{a} = 0")).collect::<Vec<_>>().join(", ");
            Ok(Outcome { ok, max_residual: None, details: format!("system: {}; {}", short(text), matches_text(&ms)), cross_check: None })
        }
        CheckBody::Hodograph { equation, dependent, independents, names, pair, residuals } => {
            let sub: Vec<Expr> = if residuals.is_empty() {
                let eq = env.expr(equation, &[])?;
                let ns: Vec<&str> = names.iter().map(String::as_str).collect();
                let sys = corresponding_system(&eq, dependent, [&independents[0], &independents[1]], &ns)?;
                system_residuals(&sys)
                    .into_iter()
                    .filter(|r| r.jets().iter().all(|j| pair.iter().any(|p| *p == *j.base) || !names.iter().any(|n| *n == *j.base)))
                    .collect()
            } else {
                env.exprs(residuals, &[])?
            };
            let h = hodograph_transform(&sub, [&independents[0], &independents[1]], [&pair[0], &pair[1]])?;
            let lin = h.is_linear();
            let text = h.residuals.iter().map(|r| format!("{r} = 0")).collect::<Vec<_>>().join(", ");
            let ok = match expect {
                Expectation::Zero => lin,
                Expectation::Nonzero => !lin,
                Expectation::Error => false,
            };
            Ok(Outcome { ok, max_residual: None, details: format!("{} system: {}", if lin { "linear" } else { "nonlinear" }, short(text)), cross_check: None })
        }
        CheckBody::InvarianceCondition { operator, dependent, solution, expected, variables } => {
            let f = env.operator(operator)?;
            let sol = env.expr(solution, &[])?;
            let cond = invariance_condition_of_solution(&f, dependent, &sol, &env.independents());
            let vars = variables.iter().map(|v| env.symbol(v)).collect::<Result<Vec<_>, _>>()?;
            let (ok, details) = match &cond {
                SolutionCondition::Identity => (expected.is_empty(), "invariant identically".to_string()),
                SolutionCondition::Conditions(cs) => {
                    let ms = compare_reduced(cs, &env.exprs(expected, &[])?, &vars);
                    let text = cs.iter().map(|c| format!("{c} = 0")).collect::<Vec<_>>().join(", ");
                    (!expected.is_empty() && ms.iter().all(|m| m.matched.is_some()), format!("conditions: {text}; {}", matches_text(&ms)))
                }
                SolutionCondition::Residual(r) => (false, format!("not polynomial in the independent variables: {}", short(r.to_string()))),
            };
            Ok(Outcome { ok: if expect == Expectation::Nonzero { !ok } else { ok }, max_residual: None, details, cross_check: None })
        }
        CheckBody::VerifySolution { equation, dependent, solution, implicit, functions, grid, tolerance, richardson, symbolic, exact } => {
            verify_solution(env, spec, equation, dependent, solution.as_deref(), implicit.as_ref(), functions, grid, *tolerance, *richardson, *symbolic, *exact)
        }
        CheckBody::Backlund { seed, seed_equation, first, second, guard, target, cross, grid, anchor, step, tolerance, exact } => {
            let b = BacklundSpec { seed, seed_equation, first, second, guard, target, cross, grid, anchor: *anchor, step: *step, tolerance: *tolerance, exact: *exact };
            backlund(env, spec, &b)
        }
        CheckBody::OdeClosedForm { variable, unknown, rhs, closed, interval, step, tolerance, functions, numeric_functions } => {
            let fs = [functions.as_slice(), numeric_functions.as_slice()];
            ode_closed_form(env, spec, variable, unknown, rhs, closed, *interval, *step, *tolerance, fs)
        }
        CheckBody::FlowInvariance { operator, invariants, starts, length, steps, tolerance } => {
            flow_invariance(env, spec, operator, invariants, starts, *length, *steps, *tolerance)
        }
    }
}

fn function_params(fs: &[FunctionSpec]) -> Vec<String> {
    fs.iter().flat_map(|f| f.params.iter().cloned()).collect()
}

type FieldFn<'a> = &'a (dyn Fn(&[f64]) -> Result<f64, EvalError> + Sync);

fn fd(residual: &Expr, dep: &str, u: FieldFn, grid: &crate::numerics::Grid) -> Result<FdReport, NumericsError> {
    let f = |p: &[f64]| u(p);
    let fields: BTreeMap<Name, &dyn Fn(&[f64]) -> Result<f64, EvalError>> = BTreeMap::from([(name(dep), &f as &dyn Fn(&[f64]) -> Result<f64, EvalError>)]);
    fd_residual(residual, &fields, grid)
}

fn fd_text(r: &FdReport) -> String {
    format!("max {} mean {} over {} nodes at h = {}", sci(r.max), sci(r.mean), r.nodes, r.h)
}

fn axis_symbols(grid: &crate::numerics::Grid) -> Vec<Symbol> {
    grid.axes.iter().map(|a| a.symbol.clone()).collect()
}

#[allow(clippy::too_many_arguments)]
fn verify_solution(
    env: &Env,
    spec: &CheckSpec,
    equation: &str,
    dep: &str,
    solution: Option<&str>,
    implicit: Option<&ImplicitSpec>,
    functions: &[FunctionSpec],
    grid: &GridSpec,
    tol: f64,
    richardson: Option<f64>,
    symbolic: bool,
    exact: bool,
) -> Res {
    let eq = env.expr(equation, &[])?;
    let b = env.function_bindings(functions, env.bindings(&spec.bindings)?)?;
    let g = env.grid(grid, b.clone())?;
    let vars = axis_symbols(&g);
    let mut parts = Vec::new();
    let mut ok = true;
    let mut cross = None;
    let report = match (solution, implicit) {
        (Some(text), None) => {
            let sol = env.expr(text, &[])?;
            if symbolic {
                let defs = env.function_defs(functions)?;
                let r = expand_functions(&lift(&eq, dep, &sol), &defs);
                let rep = decide(vec![r], &env.sample_options(&spec.bindings)?);
                cross = cross_of(&rep);
                ok &= rep.verdict.holds();
                parts.push(format!("symbolic: {}", describe(&rep)));
            }
            let c = Compiled::new(&sol, &vars, &b)?;
            let u = |p: &[f64]| c.eval(p);
            let r1 = fd(&eq, dep, &u, &g)?;
            let r2 = match richardson {
                Some(_) => Some(fd(&eq, dep, &u, &g.with_step(g.h / 2.0))?),
                None => None,
            };
            (r1, r2)
        }
        (None, Some(imp)) => {
            let unknown = Symbol::param(&imp.unknown);
            let extra = vec![imp.unknown.clone()];
            let rel = env.expr(&imp.relation, &extra)?;
            let val = env.expr(&imp.value, &extra)?;
            let mut s = ImplicitSolution::new(vars.clone(), unknown, rel, val, &b)?;
            if let Some([lo, hi]) = &imp.bracket {
                s = s.with_bracket(&env.expr(lo, &[])?, &env.expr(hi, &[])?, &b)?;
            }
            if let Some(gs) = &imp.guess {
                s = s.with_guess(&env.expr(gs, &[])?, &b)?;
            }
            let mut worst: f64 = 0.0;
            let mut iters = 0;
            for n in g.nodes() {
                let r = s.root(&n)?;
                worst = worst.max(r.residual);
                iters = iters.max(r.iterations);
            }
            ok &= worst < imp.newton_tolerance;
            parts.push(format!("Newton back-substitution max {} (at most {iters} iterations)", sci(worst)));
            let u = |p: &[f64]| s.eval(p);
            let r1 = fd(&eq, dep, &u, &g)?;
            let r2 = match richardson {
                Some(_) => Some(fd(&eq, dep, &u, &g.with_step(g.h / 2.0))?),
                None => None,
            };
            (r1, r2)
        }
        _ => return Err(ScenarioError::Schema(spec.id.clone(), "give exactly one of solution, implicit".into()).into()),
    };
    let (r1, r2) = report;
    ok &= r1.max < tol;
    parts.push(format!("grid residual {}", fd_text(&r1)));
    if let (Some(min), Some(r2)) = (richardson, r2) {
        let ratio = richardson_ratio(&r1, &r2);
        ok &= ratio >= min;
        parts.push(format!("h/2 residual {}, ratio {:.3}", sci(r2.max), ratio));
    }
    if exact {
        ok &= r1.max == 0.0;
    }
    if expect_error(spec) {
        ok = false;
    }
    Ok(Outcome { ok: if spec.expect == Expectation::Nonzero { !ok } else { ok }, max_residual: Some(r1.max), details: parts.join("; "), cross_check: cross })
}

fn expect_error(spec: &CheckSpec) -> bool {
    spec.expect == Expectation::Error
}

struct BacklundSpec<'a> {
    seed: &'a str,
    seed_equation: &'a str,
    first: &'a str,
    second: &'a str,
    guard: &'a str,
    target: &'a str,
    cross: &'a str,
    grid: &'a GridSpec,
    anchor: [f64; 2],
    step: f64,
    tolerance: f64,
    exact: bool,
}

/// Integrates the pair: along the first axis on the anchor row, then along
/// the second axis; checks the other relation and the target equation by
/// finite differences.
fn backlund(env: &Env, spec: &CheckSpec, bs: &BacklundSpec) -> Res {
    let b = env.bindings(&spec.bindings)?;
    let g = env.grid(bs.grid, b.clone())?;
    if g.axes.len() != 2 {
        return Err(ScenarioError::Schema(spec.id.clone(), "needs a two-dimensional grid".into()).into());
    }
    let deps = &env.scenario.declarations.dependents;
    if deps.len() != 2 {
        return Err(ScenarioError::Schema(spec.id.clone(), "declare the new and the seed dependent variables".into()).into());
    }
    let (u, w) = (deps[0].as_str(), deps[1].as_str());
    let seed = env.expr(bs.seed, &[])?;
    let o = env.sample_options(&spec.bindings)?;
    let seed_rep = decide(vec![lift(&env.expr(bs.seed_equation, &[])?, w, &seed)], &o);
    let mut parts = vec![format!("seed equation: {}", describe(&seed_rep))];
    let mut ok = seed_rep.verdict.holds();

    let mut vars = axis_symbols(&g);
    vars.push(Symbol::jet(u, &[]));
    let compile = |text: &str| -> Result<Compiled, Failure> { Ok(Compiled::new(&lift(&env.expr(text, &[])?, w, &seed), &vars, &b)?) };
    let first = compile(bs.first)?;
    let second = compile(bs.second)?;
    let guard = compile(bs.guard)?;
    let w0 = Compiled::new(&seed, &vars[..2], &b)?;
    let [a1, a2] = bs.anchor;
    let steps = |d: f64| ((d.abs() / bs.step).ceil() as usize).max(1);
    let to_eval = |e: NumericsError| match e {
        NumericsError::Eval { source, .. } => source,
        other => EvalError::Domain(other.to_string()),
    };
    let row: Mutex<HashMap<u64, f64>> = Mutex::new(HashMap::new());
    let field = |p: &[f64]| -> Result<f64, EvalError> {
        let (x1, x2) = (p[0], p[1]);
        let cached = row.lock().unwrap().get(&x1.to_bits()).copied();
        let start = match cached {
            Some(v) => v,
            None => {
                let f = |s: f64, y: &[f64]| Ok(vec![first.eval(&[s, a2, y[0]])?]);
                let v = rk4(&f, a1, &[w0.eval(&[a1, a2])?], x1, steps(x1 - a1)).map_err(to_eval)?.last().1[0];
                row.lock().unwrap().insert(x1.to_bits(), v);
                v
            }
        };
        let f = |s: f64, y: &[f64]| {
            let q = [x1, s, y[0]];
            if guard.eval(&q)? <= 0.0 {
                return Err(EvalError::Domain(format!("guard {} left the positive range at ({x1}, {s})", bs.guard)));
            }
            Ok(vec![second.eval(&q)?])
        };
        Ok(rk4(&f, a2, &[start], x2, steps(x2 - a2)).map_err(to_eval)?.last().1[0])
    };
    let run = || -> Result<(FdReport, FdReport, f64), Failure> {
        let target = fd(&env.expr(bs.target, &[])?, u, &field, &g)?;
        let cross = fd(&lift(&env.expr(bs.cross, &[])?, w, &seed), u, &field, &g)?;
        let mut min_guard = f64::INFINITY;
        for n in g.nodes() {
            min_guard = min_guard.min(guard.eval(&[n[0], n[1], field(&n)?])?);
        }
        Ok((target, cross, min_guard))
    };
    match run() {
        Ok((target, cross, min_guard)) => {
            ok &= target.max < bs.tolerance && cross.max < bs.tolerance;
            if bs.exact {
                ok &= target.max == 0.0 && cross.max == 0.0;
            }
            parts.push(format!("target {}", fd_text(&target)));
            parts.push(format!("cross relation {}", fd_text(&cross)));
            parts.push(format!("min guard {:.4}", min_guard));
            let ok = match spec.expect {
                Expectation::Zero => ok,
                Expectation::Nonzero => !ok,
                Expectation::Error => false,
            };
            Ok(Outcome { ok, max_residual: Some(target.max.max(cross.max)), details: parts.join("; "), cross_check: cross_of(&seed_rep) })
        }
        Err(Failure::Compute(msg)) if spec.expect == Expectation::Error => {
            parts.push(format!("error: {msg}"));
            Ok(Outcome { ok: true, max_residual: None, details: parts.join("; "), cross_check: cross_of(&seed_rep) })
        }
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn ode_closed_form(
    env: &Env,
    spec: &CheckSpec,
    variable: &str,
    unknown: &str,
    rhs: &str,
    closed: &str,
    interval: [f64; 2],
    step: f64,
    tol: f64,
    [functions, numeric]: [&[FunctionSpec]; 2],
) -> Res {
    let x = env.symbol(variable)?;
    let y = Symbol::param(unknown);
    let extra = vec![unknown.to_string()];
    let rhs = env.expr(rhs, &extra)?;
    let closed = env.expr(closed, &[])?;
    let defs = env.function_defs(functions)?;
    let sym = differentiate(&closed, &x) - substitute(&rhs, &BTreeMap::from([(y.clone(), closed.clone())]));
    let rep = decide(vec![expand_functions(&sym, &defs)], &env.sample_options(&spec.bindings)?);
    let b = env.function_bindings(numeric, env.bindings(&spec.bindings)?)?;
    let at = |v: f64| evaluate(&closed, &b.clone().with(x.clone(), v));
    let traj = integrate_ode(&[rhs], &x, &[y], &b, interval[0], &[at(interval[0])?], interval[1], step)?;
    let mut err: f64 = 0.0;
    for (xi, yi) in traj.xs.iter().zip(&traj.ys) {
        err = err.max((yi[0] - at(*xi)?).abs());
    }
    let ok = rep.verdict.holds() && err < tol;
    Ok(Outcome {
        ok: if spec.expect == Expectation::Nonzero { !ok } else { ok && !expect_error(spec) },
        max_residual: Some(err),
        cross_check: cross_of(&rep),
        details: format!(
            "by differentiation: {}; RK4 with step {step} on [{}, {}]: max deviation {} over {} points",
            describe(&rep),
            interval[0],
            interval[1],
            sci(err),
            traj.xs.len()
        ),
    })
}

#[allow(clippy::too_many_arguments)]
fn flow_invariance(
    env: &Env,
    spec: &CheckSpec,
    operator: &str,
    invariants: &[String],
    starts: &[BTreeMap<String, f64>],
    length: f64,
    steps: usize,
    tol: f64,
) -> Res {
    let f = env.operator(operator)?;
    let VectorField::Coefficients(_) = &f else {
        return Err(ScenarioError::Schema(spec.id.clone(), "flow needs a point operator".into()).into());
    };
    let vars = f.variables();
    let gs = env.exprs(invariants, &[])?;
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for inst in env.instances(&spec.bindings)? {
        let coef = vars.iter().map(|v| Compiled::new(&simplify(&f.coefficient(v)), &vars, &inst)).collect::<Result<Vec<_>, _>>()?;
        let inv = gs.iter().map(|g| Compiled::new(g, &vars, &inst)).collect::<Result<Vec<_>, _>>()?;
        let rhs = |_: f64, y: &[f64]| coef.iter().map(|c| c.eval(y)).collect::<Result<Vec<_>, _>>();
        for s in starts {
            let mut y0 = Vec::new();
            for v in &vars {
                let key = Expr::sym(v.clone()).to_string();
                y0.push(*s.get(&key).ok_or_else(|| ScenarioError::Schema(spec.id.clone(), format!("start point lacks {key}")))?);
            }
            let traj = rk4(&rhs, 0.0, &y0, length, steps)?;
            for g in &inv {
                let g0 = g.eval(&y0)?;
                for y in &traj.ys {
                    worst = worst.max((g.eval(y)? - g0).abs() / length);
                }
            }
            runs += 1;
        }
    }
    let ok = worst < tol;
    Ok(Outcome {
        ok: if spec.expect == Expectation::Nonzero { !ok } else { ok && !expect_error(spec) },
        max_residual: Some(worst),
        cross_check: None,
        details: format!("{} invariant(s) along {runs} flow line(s) of length {length}: drift per unit {}", gs.len(), sci(worst)),
    })
}
