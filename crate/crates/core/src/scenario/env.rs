use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::schema::{AnsatzSpec, FunctionSpec, GridSpec, OperatorSpec, Scenario};
use super::ScenarioError;
use crate::expr::{
    name, substitute, Bindings, Compiled, Context, Expr, ExprFunction, FunctionDef, JetVar, Name, Symbol,
};
use crate::jet::{Equation, EquationSystem, JetSpace};
use crate::numerics::{Axis, Grid, IntegralSampler};
use crate::reduction::Ansatz;
use crate::sampling::{SampleOptions, DEFAULT_SEED};
use crate::symmetry::VectorField;

/// Knot spacing and tolerance of integral samplers.
pub const INTEGRAL_STEP: f64 = 1.0 / 64.0;
pub const INTEGRAL_TOL: f64 = 1e-10;

/// A scenario with its declarations resolved.
pub struct Env<'a> {
    pub scenario: &'a Scenario,
    pub ctx: Context,
    pub seed: u64,
    macros: BTreeMap<Symbol, Expr>,
    params: BTreeSet<String>,
}

impl<'a> Env<'a> {
    pub fn new(scenario: &'a Scenario, seed: Option<u64>) -> Result<Self, ScenarioError> {
        let d = &scenario.declarations;
        let ind: Vec<&str> = d.independents.iter().map(String::as_str).collect();
        let dep: Vec<&str> = d.dependents.iter().map(String::as_str).collect();
        let mut ctx = Context::new().with_independents(&ind).with_dependents(&dep);
        for (f, n) in &d.functions {
            ctx = ctx.with_function(f, *n);
        }
        let mut env = Env {
            scenario,
            ctx,
            seed: seed.or(scenario.seed).unwrap_or(DEFAULT_SEED),
            macros: BTreeMap::new(),
            params: d.parameters.keys().cloned().collect(),
        };
        for m in &scenario.macros {
            if env.params.contains(&m.name) || env.ctx.is_independent(&m.name) || env.ctx.is_dependent(&m.name) {
                return Err(ScenarioError::Schema(format!("macro {}", m.name), "name already declared".into()));
            }
            let e = env.expr(&m.expr, &[])?;
            env.macros.insert(Symbol::param(&m.name), e);
        }
        Ok(env)
    }

    /// Parses `text`, expands macros and rejects undeclared parameters.
    /// `extra` names are accepted as parameters in this expression only.
    pub fn expr(&self, text: &str, extra: &[String]) -> Result<Expr, ScenarioError> {
        let e = self.ctx.parse(text).map_err(|err| ScenarioError::Parse(text.to_string(), err.to_string()))?;
        for s in e.symbols() {
            if let Symbol::Param(p) = &s {
                let ok = self.params.contains(&**p) || self.macros.contains_key(&s) || extra.iter().any(|x| **x == **p);
                if !ok {
                    return Err(ScenarioError::Undeclared(p.to_string(), text.to_string()));
                }
            }
        }
        Ok(substitute(&e, &self.macros))
    }

    pub fn exprs(&self, texts: &[String], extra: &[String]) -> Result<Vec<Expr>, ScenarioError> {
        texts.iter().map(|t| self.expr(t, extra)).collect()
    }

    pub fn symbol(&self, text: &str) -> Result<Symbol, ScenarioError> {
        match self.ctx.parse(text) {
            Ok(Expr::Sym(s)) => Ok(s),
            _ => Err(ScenarioError::Schema(text.to_string(), "expected a variable".into())),
        }
    }

    pub fn jet(&self, text: &str) -> Result<JetVar, ScenarioError> {
        match self.symbol(text)? {
            Symbol::Jet(j) => Ok(j),
            _ => Err(ScenarioError::Schema(text.to_string(), "expected a dependent variable or derivative".into())),
        }
    }

    pub fn independents(&self) -> Vec<Name> {
        self.scenario.declarations.independents.iter().map(|s| name(s)).collect()
    }

    pub fn space(&self) -> JetSpace {
        let ind: Vec<&str> = self.scenario.declarations.independents.iter().map(String::as_str).collect();
        JetSpace::new(&ind)
    }

    /// Names of all ansatz invariants, usable in constraints.
    fn invariant_names(&self) -> Vec<String> {
        self.scenario.ansatze.values().flat_map(|a| a.invariants.keys().cloned()).collect()
    }

    pub fn system(&self, key: &str) -> Result<EquationSystem, ScenarioError> {
        let spec = self.scenario.systems.get(key).ok_or_else(|| ScenarioError::Reference("system", key.to_string()))?;
        let d = &self.scenario.declarations;
        let ind = spec.independents.as_ref().unwrap_or(&d.independents);
        let dep = spec.dependents.as_ref().unwrap_or(&d.dependents);
        let ind: Vec<&str> = ind.iter().map(String::as_str).collect();
        let dep: Vec<&str> = dep.iter().map(String::as_str).collect();
        let mut sys = EquationSystem::new(&ind, &dep);
        let err = |e: crate::jet::JetError| ScenarioError::Schema(format!("system {key}"), e.to_string());
        for eq in &spec.equations {
            let e = match (&eq.residual, &eq.lead, &eq.rhs) {
                (None, Some(l), Some(r)) => Equation::solved(self.jet(l)?, self.expr(r, &[])?).map_err(err)?,
                (Some(r), Some(l), None) => Equation::solve_for(self.expr(r, &[])?, self.jet(l)?).map_err(err)?,
                (Some(r), None, None) => Equation::new(self.expr(r, &[])?),
                _ => return Err(ScenarioError::Schema(format!("system {key}"), "give lead+rhs, residual+lead or residual".into())),
            };
            sys.push(e).map_err(err)?;
        }
        Ok(sys)
    }

    pub fn operator(&self, key: &str) -> Result<VectorField, ScenarioError> {
        let spec: &OperatorSpec =
            self.scenario.operators.get(key).ok_or_else(|| ScenarioError::Reference("operator", key.to_string()))?;
        match (spec.coefficients.is_empty(), spec.characteristic.is_empty()) {
            (false, true) => {
                let mut pairs = Vec::new();
                for (v, c) in &spec.coefficients {
                    pairs.push((self.symbol(v)?, self.expr(c, &[])?));
                }
                Ok(VectorField::coefficients(pairs))
            }
            (true, false) => {
                let mut map = BTreeMap::new();
                for (u, c) in &spec.characteristic {
                    if !self.ctx.is_dependent(u) {
                        return Err(ScenarioError::Schema(format!("operator {key}"), format!("{u} is not a dependent variable")));
                    }
                    map.insert(name(u), self.expr(c, &[])?);
                }
                Ok(VectorField::Evolutionary(map))
            }
            _ => Err(ScenarioError::Schema(format!("operator {key}"), "give exactly one of coefficients, characteristic".into())),
        }
    }

    pub fn ansatz(&self, key: &str) -> Result<Ansatz, ScenarioError> {
        let spec: &AnsatzSpec = self.scenario.ansatze.get(key).ok_or_else(|| ScenarioError::Reference("ansatz", key.to_string()))?;
        let inv: Vec<String> = spec.invariants.keys().cloned().collect();
        let mut ans = match (spec.derivatives.is_empty(), spec.solution.is_empty()) {
            (false, true) => {
                let mut pairs = Vec::new();
                for (j, e) in &spec.derivatives {
                    pairs.push((self.jet(j)?, self.expr(e, &inv)?));
                }
                Ansatz::derivatives(pairs)
            }
            (true, false) => {
                let mut pairs = Vec::new();
                for (u, e) in &spec.solution {
                    if !self.ctx.is_dependent(u) {
                        return Err(ScenarioError::Schema(format!("ansatz {key}"), format!("{u} is not a dependent variable")));
                    }
                    pairs.push((name(u), self.expr(e, &inv)?));
                }
                Ansatz::solution(pairs)
            }
            _ => return Err(ScenarioError::Schema(format!("ansatz {key}"), "give exactly one of derivatives, solution".into())),
        };
        for (s, d) in &spec.invariants {
            ans = ans.with_invariant(Symbol::param(s), self.expr(d, &[])?);
        }
        for k in &spec.keep {
            ans = ans.keeping(self.symbol(k)?);
        }
        ans = ans.with_basis(self.exprs(&spec.basis, &inv)?);
        Ok(ans)
    }

    /// Fixed parameter values with per-check overrides.
    pub fn bindings(&self, overrides: &BTreeMap<String, f64>) -> Result<Bindings, ScenarioError> {
        let mut b = Bindings::new();
        for (p, spec) in &self.scenario.declarations.parameters {
            if let Some(v) = overrides.get(p).copied().or(spec.value) {
                b.set(Symbol::param(p), v);
            }
        }
        for p in overrides.keys() {
            if !self.params.contains(p) {
                return Err(ScenarioError::Undeclared(p.clone(), "bindings".into()));
            }
        }
        Ok(b)
    }

    /// One binding set per combination of sampled parameter values.
    pub fn instances(&self, overrides: &BTreeMap<String, f64>) -> Result<Vec<Bindings>, ScenarioError> {
        let mut out = vec![self.bindings(overrides)?];
        for (p, spec) in &self.scenario.declarations.parameters {
            if spec.samples.is_empty() || spec.value.is_some() || overrides.contains_key(p) {
                continue;
            }
            let mut next = Vec::new();
            for b in &out {
                for v in &spec.samples {
                    next.push(b.clone().with(Symbol::param(p), *v));
                }
            }
            out = next;
        }
        Ok(out)
    }

    pub fn sample_options(&self, overrides: &BTreeMap<String, f64>) -> Result<SampleOptions, ScenarioError> {
        let mut opts = SampleOptions::default().with_seed(self.seed).with_instances(self.instances(overrides)?);
        let inv = self.invariant_names();
        for c in &self.scenario.declarations.constraints {
            opts = opts.with_constraint(self.expr(c, &inv)?);
        }
        Ok(opts)
    }

    /// Symbolic interpretations: bodies, or antiderivatives for integrals.
    pub fn function_defs(&self, specs: &[FunctionSpec]) -> Result<BTreeMap<Name, FunctionDef>, ScenarioError> {
        let mut out = BTreeMap::new();
        for f in specs {
            self.check_function(f)?;
            let params: Vec<Symbol> = f.params.iter().map(|p| Symbol::param(p)).collect();
            let def = match (&f.body, &f.integral) {
                (Some(b), None) => FunctionDef::body(params, self.expr(b, &f.params)?),
                (None, Some(i)) => FunctionDef::antiderivative(params[0].clone(), self.expr(i, &f.params)?),
                _ => unreachable!("checked"),
            };
            out.insert(name(&f.name), def);
        }
        Ok(out)
    }

    /// Numeric samplers for the functions, built in order so that later
    /// ones may use earlier ones.
    pub fn function_bindings(&self, specs: &[FunctionSpec], mut b: Bindings) -> Result<Bindings, ScenarioError> {
        for f in specs {
            self.check_function(f)?;
            let params: Vec<Symbol> = f.params.iter().map(|p| Symbol::param(p)).collect();
            if let Some(body) = &f.body {
                let e = self.expr(body, &f.params)?;
                let sampler = ExprFunction::new(params, e).with_env(b.clone());
                b.set_function(&f.name, Arc::new(sampler));
            } else if let Some(i) = &f.integral {
                let e = self.expr(i, &f.params)?;
                let c = Compiled::new(&e, &params, &b).map_err(|err| ScenarioError::Schema(format!("function {}", f.name), err.to_string()))?;
                let sampler = IntegralSampler::new(move |x| c.eval(&[x]), f.from, INTEGRAL_STEP, INTEGRAL_TOL);
                b.set_function(&f.name, Arc::new(sampler));
            }
        }
        Ok(b)
    }

    fn check_function(&self, f: &FunctionSpec) -> Result<(), ScenarioError> {
        let here = format!("function {}", f.name);
        match self.ctx.arity(&f.name) {
            Some(n) if n == f.params.len() => {}
            Some(_) => return Err(ScenarioError::Schema(here, "arity differs from the declaration".into())),
            None => return Err(ScenarioError::Reference("function", f.name.clone())),
        }
        match (&f.body, &f.integral) {
            (Some(_), None) => Ok(()),
            (None, Some(_)) if f.params.len() == 1 => Ok(()),
            (None, Some(_)) => Err(ScenarioError::Schema(here, "integrals are unary".into())),
            _ => Err(ScenarioError::Schema(here, "give exactly one of body, integral".into())),
        }
    }

    pub fn grid(&self, spec: &GridSpec, consts: Bindings) -> Result<Grid, ScenarioError> {
        if spec.h <= 0.0 || spec.axes.is_empty() {
            return Err(ScenarioError::Schema("grid".into(), "needs axes and a positive step".into()));
        }
        let mut axes = Vec::new();
        for a in &spec.axes {
            if !self.ctx.is_independent(&a.var) {
                return Err(ScenarioError::Schema("grid".into(), format!("{} is not an independent variable", a.var)));
            }
            axes.push(Axis::new(Symbol::indep(&a.var), a.lo, a.hi, a.nodes));
        }
        let mut g = Grid::new(axes, spec.h).with_consts(consts);
        for e in &spec.exclude {
            g = g.exclude(self.expr(e, &[])?);
        }
        Ok(g)
    }

    /// Resolves every named entity and every reference made by checks.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for k in self.scenario.systems.keys() {
            self.system(k)?;
        }
        for k in self.scenario.operators.keys() {
            self.operator(k)?;
        }
        for k in self.scenario.ansatze.keys() {
            self.ansatz(k)?;
        }
        self.sample_options(&BTreeMap::new())?;
        let mut ids = BTreeSet::new();
        for c in &self.scenario.checks {
            if !ids.insert(c.id.as_str()) {
                return Err(ScenarioError::Schema(format!("check {}", c.id), "duplicate id".into()));
            }
            for (table, key) in c.body.references() {
                let present = match table {
                    "system" => self.scenario.systems.contains_key(key),
                    "operator" => self.scenario.operators.contains_key(key),
                    _ => self.scenario.ansatze.contains_key(key),
                };
                if !present {
                    return Err(ScenarioError::Reference(table, key.to_string()));
                }
            }
        }
        Ok(())
    }
}
