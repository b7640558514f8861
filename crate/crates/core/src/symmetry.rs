//! Vector fields on jet space, prolongation and invariance tests.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{differentiate, name, simplify, substitute, Expr, Fraction, JetVar, Name, Poly, Symbol};
use crate::jet::{Equation, EquationSystem, JetError, JetSpace, OnShell, DEFAULT_MAX_ORDER};
use crate::sampling::{sample_residuals, SampleOptions, SampleOutcome};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("vector fields act on different variables: {0:?} vs {1:?}")]
    VariableMismatch(Vec<String>, Vec<String>),
    #[error("cannot bracket a coefficient field with an evolutionary one")]
    MixedForms,
    #[error("operator has no nonzero coefficient along an independent variable")]
    NoTransversalDirection,
}

/// A vector field given either by coefficients of coordinate directions
/// (independent variables, dependent variables and, for tangent fields,
/// first derivatives) or by characteristics `Q^a` of an evolutionary field.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorField {
    Coefficients(BTreeMap<Symbol, Expr>),
    Evolutionary(BTreeMap<Name, Expr>),
}

impl VectorField {
    pub fn coefficients(pairs: impl IntoIterator<Item = (Symbol, Expr)>) -> Self {
        VectorField::Coefficients(pairs.into_iter().collect())
    }

    pub fn evolutionary(pairs: impl IntoIterator<Item = (&'static str, Expr)>) -> Self {
        VectorField::Evolutionary(pairs.into_iter().map(|(n, e)| (name(n), e)).collect())
    }

    pub fn coefficient(&self, s: &Symbol) -> Expr {
        match self {
            VectorField::Coefficients(m) => m.get(s).cloned().unwrap_or_else(Expr::zero),
            VectorField::Evolutionary(_) => Expr::zero(),
        }
    }

    pub fn variables(&self) -> Vec<Symbol> {
        match self {
            VectorField::Coefficients(m) => m.keys().cloned().collect(),
            VectorField::Evolutionary(m) => m.keys().map(|n| Symbol::Jet(JetVar { base: n.clone(), index: vec![] })).collect(),
        }
    }

    /// Derivation along the declared coordinates only.
    pub fn apply(&self, g: &Expr) -> Expr {
        match self {
            VectorField::Coefficients(m) => {
                Expr::add(m.iter().map(|(s, c)| c.clone() * differentiate(g, s)).collect::<Vec<_>>())
            }
            VectorField::Evolutionary(_) => Expr::zero(),
        }
    }

    pub fn prolonged<'a>(&'a self, space: &'a JetSpace) -> Prolonged<'a> {
        Prolonged { field: self, space, memo: HashMap::new() }
    }
}

/// Lazily computed prolongation: coefficients of jet coordinates are
/// produced on demand.
pub struct Prolonged<'a> {
    field: &'a VectorField,
    space: &'a JetSpace,
    memo: HashMap<JetVar, Expr>,
}

impl Prolonged<'_> {
    pub fn coefficient(&mut self, j: &JetVar) -> Expr {
        if let Some(c) = self.memo.get(j) {
            return c.clone();
        }
        let c = match self.field {
            VectorField::Evolutionary(q) => {
                let base = q.get(&j.base).cloned().unwrap_or_else(Expr::zero);
                self.space.total_derivative_multi(&base, &j.index)
            }
            VectorField::Coefficients(m) => {
                if j.index.is_empty() {
                    m.get(&Symbol::Jet(j.clone())).cloned().unwrap_or_else(Expr::zero)
                } else {
                    let mut parent = j.clone();
                    let x = parent.index.pop().unwrap();
                    let eta = self.coefficient(&parent);
                    let mut terms = vec![self.space.total_derivative(&eta, &x)];
                    for y in &self.space.independents {
                        if let Some(xi) = m.get(&Symbol::Indep(y.clone())) {
                            let dxi = self.space.total_derivative(xi, &x);
                            if !dxi.is_zero() {
                                terms.push(-(dxi * Expr::sym(Symbol::Jet(parent.raise(y)))));
                            }
                        }
                    }
                    Expr::add(terms)
                }
            }
        };
        self.memo.insert(j.clone(), c.clone());
        c
    }

    /// `pr V (g)`.
    pub fn apply(&mut self, g: &Expr) -> Expr {
        let mut terms = Vec::new();
        if let VectorField::Coefficients(m) = self.field {
            for (s, c) in m {
                if let Symbol::Indep(_) | Symbol::Param(_) = s {
                    let d = differentiate(g, s);
                    if !d.is_zero() {
                        terms.push(c.clone() * d);
                    }
                }
            }
        }
        for j in g.jets() {
            let d = differentiate(g, &Symbol::Jet(j.clone()));
            if !d.is_zero() {
                terms.push(self.coefficient(&j) * d);
            }
        }
        Expr::add(terms)
    }

    /// Coefficients of every jet coordinate up to `order`.
    pub fn table(&mut self, dependents: &[Name], order: usize) -> BTreeMap<Symbol, Expr> {
        let mut out = BTreeMap::new();
        let mut layer: Vec<JetVar> = dependents.iter().map(|d| JetVar { base: d.clone(), index: vec![] }).collect();
        for _ in 0..=order {
            let mut next = Vec::new();
            for j in &layer {
                out.insert(Symbol::Jet(j.clone()), self.coefficient(j));
                for x in self.space.independents.clone() {
                    let k = j.raise(&x);
                    if !next.contains(&k) {
                        next.push(k);
                    }
                }
            }
            layer = next;
        }
        out
    }
}

/// Explicit prolongation up to `order` (independent coefficients included).
pub fn prolong(field: &VectorField, space: &JetSpace, dependents: &[Name], order: usize) -> BTreeMap<Symbol, Expr> {
    let mut out: BTreeMap<Symbol, Expr> = match field {
        VectorField::Coefficients(m) => m.iter().filter(|(s, _)| matches!(s, Symbol::Indep(_))).map(|(s, c)| (s.clone(), c.clone())).collect(),
        VectorField::Evolutionary(_) => BTreeMap::new(),
    };
    out.extend(field.prolonged(space).table(dependents, order));
    out
}

/// `[a, b]`, computed coefficient-wise.
pub fn lie_bracket(a: &VectorField, b: &VectorField, space: &JetSpace) -> Result<VectorField, SymmetryError> {
    match (a, b) {
        (VectorField::Coefficients(ma), VectorField::Coefficients(mb)) => {
            let (va, vb) = (a.variables(), b.variables());
            if va != vb {
                let show = |v: &[Symbol]| v.iter().map(|s| Expr::sym(s.clone()).to_string()).collect();
                return Err(SymmetryError::VariableMismatch(show(&va), show(&vb)));
            }
            Ok(VectorField::Coefficients(
                va.iter().map(|s| (s.clone(), simplify(&(a.apply(&mb[s]) - b.apply(&ma[s]))))).collect(),
            ))
        }
        (VectorField::Evolutionary(qa), VectorField::Evolutionary(qb)) => {
            let mut pa = a.prolonged(space);
            let mut pb = b.prolonged(space);
            let keys: std::collections::BTreeSet<Name> = qa.keys().chain(qb.keys()).cloned().collect();
            let mut out = BTreeMap::new();
            for k in keys {
                let z = Expr::zero();
                let ca = qa.get(&k).unwrap_or(&z);
                let cb = qb.get(&k).unwrap_or(&z);
                out.insert(k, simplify(&(pa.apply(cb) - pb.apply(ca))));
            }
            Ok(VectorField::Evolutionary(out))
        }
        _ => Err(SymmetryError::MixedForms),
    }
}

/// Coefficient-wise equality after simplification.
pub fn same_field(a: &VectorField, b: &VectorField) -> bool {
    let vars: std::collections::BTreeSet<Symbol> = a.variables().into_iter().chain(b.variables()).collect();
    match (a, b) {
        (VectorField::Coefficients(_), VectorField::Coefficients(_)) => {
            vars.iter().all(|s| crate::expr::is_zero(&(a.coefficient(s) - b.coefficient(s))))
        }
        (VectorField::Evolutionary(qa), VectorField::Evolutionary(qb)) => {
            let z = Expr::zero();
            qa.keys().chain(qb.keys()).all(|k| crate::expr::is_zero(&(qa.get(k).unwrap_or(&z) - qb.get(k).unwrap_or(&z))))
        }
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SymbolicZero,
    NumericZero,
    Nonzero,
    Inconclusive,
}

impl Verdict {
    pub fn holds(self) -> bool {
        matches!(self, Verdict::SymbolicZero | Verdict::NumericZero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub verdict: Verdict,
    /// Simplified residuals, one per equation or expression tested.
    pub residuals: Vec<Expr>,
    pub sampling: Option<SampleOutcome>,
    pub seed: Option<u64>,
    /// For symbolic zeros: the unsimplified residuals evaluated at
    /// `CROSS_CHECK_SAMPLES` seeded points, relative to their summands.
    pub cross_check: Option<SampleOutcome>,
}

impl InvarianceReport {
    pub fn max_residual(&self) -> Option<f64> {
        match self.verdict {
            Verdict::SymbolicZero => Some(0.0),
            _ => self.sampling.as_ref().map(|s| s.max_abs),
        }
    }
}

pub const CROSS_CHECK_SAMPLES: usize = 50;

/// Decides whether the residuals vanish: symbolically if they simplify
/// to zero, otherwise by seeded sampling.
pub fn decide(raw: Vec<Expr>, opts: &SampleOptions) -> InvarianceReport {
    let residuals: Vec<Expr> = raw.iter().map(simplify).collect();
    if residuals.iter().all(Expr::is_zero) {
        let live: Vec<Expr> = raw.into_iter().filter(|r| !r.is_zero()).collect();
        let cross = SampleOptions { samples: CROSS_CHECK_SAMPLES, relative: true, ..opts.clone() };
        let cross_check = (!live.is_empty()).then(|| sample_residuals(&live, &cross));
        return InvarianceReport { verdict: Verdict::SymbolicZero, residuals, sampling: None, seed: Some(opts.seed), cross_check };
    }
    let live: Vec<Expr> = residuals.iter().filter(|r| !r.is_zero()).cloned().collect();
    let s = sample_residuals(&live, opts);
    let need = opts.samples * opts.instances.len().max(1);
    let verdict = if s.max_abs >= opts.tolerance {
        Verdict::Nonzero
    } else if s.accepted < need {
        Verdict::Inconclusive
    } else {
        Verdict::NumericZero
    };
    InvarianceReport { verdict, residuals, sampling: Some(s), seed: Some(opts.seed), cross_check: None }
}

/// Residuals `pr V (Delta)` reduced on the system.
pub fn symmetry_residuals(field: &VectorField, sys: &EquationSystem, space: &JetSpace) -> Result<Vec<Expr>, SymmetryError> {
    let mut pr = field.prolonged(space);
    let mut shell = OnShell::new(sys, space, DEFAULT_MAX_ORDER)?;
    let mut out = Vec::new();
    for eq in &sys.equations {
        let r = pr.apply(&eq.residual);
        out.push(shell.reduce(&r)?);
    }
    Ok(out)
}

pub fn check_symmetry(field: &VectorField, sys: &EquationSystem, opts: &SampleOptions) -> Result<InvarianceReport, SymmetryError> {
    let space = sys.space();
    Ok(decide(symmetry_residuals(field, sys, &space)?, opts))
}

/// Generalized symmetry test for an evolutionary field.
pub fn check_lie_backlund(characteristics: &BTreeMap<Name, Expr>, sys: &EquationSystem, opts: &SampleOptions) -> Result<InvarianceReport, SymmetryError> {
    check_symmetry(&VectorField::Evolutionary(characteristics.clone()), sys, opts)
}

/// The system augmented by the invariant-surface conditions of `field`,
/// each solved for a derivative along the first independent variable whose
/// coefficient is nonzero (constant coefficients preferred).
pub fn augment_with_surface(field: &VectorField, sys: &EquationSystem) -> Result<EquationSystem, SymmetryError> {
    let xis: Vec<(Name, Expr)> = sys
        .independents
        .iter()
        .map(|x| (x.clone(), simplify(&field.coefficient(&Symbol::Indep(x.clone())))))
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let (x0, xi0) = xis
        .iter()
        .find(|(_, c)| c.is_number())
        .or_else(|| xis.first())
        .cloned()
        .ok_or(SymmetryError::NoTransversalDirection)?;
    let mut out = sys.clone();
    for dep in &sys.dependents {
        let u = JetVar { base: dep.clone(), index: vec![] };
        let mut rhs = vec![field.coefficient(&Symbol::Jet(u.clone()))];
        for (x, c) in &xis {
            if *x != x0 {
                rhs.push(-(c.clone() * Expr::sym(Symbol::Jet(u.raise(x)))));
            }
        }
        let rhs = Fraction::from_expr(&Expr::add(rhs)).div(&Fraction::from_expr(&xi0)).expect("nonzero coefficient").to_expr();
        out.push(Equation::solved(u.raise(&x0), rhs)?)?;
    }
    Ok(out)
}

pub fn check_conditional_symmetry(field: &VectorField, sys: &EquationSystem, opts: &SampleOptions) -> Result<InvarianceReport, SymmetryError> {
    let aug = augment_with_surface(field, sys)?;
    let space = aug.space();
    let mut pr = field.prolonged(&space);
    let mut shell = OnShell::new(&aug, &space, DEFAULT_MAX_ORDER)?;
    let mut res = Vec::new();
    for eq in &sys.equations {
        let r = pr.apply(&eq.residual);
        res.push(shell.reduce(&r)?);
    }
    Ok(decide(res, opts))
}

/// `pr V (g)`, tested for vanishing.
pub fn check_invariant(field: &VectorField, g: &Expr, space: &JetSpace, opts: &SampleOptions) -> InvarianceReport {
    let r = field.prolonged(space).apply(g);
    decide(vec![r], opts)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolutionCondition {
    /// Invariant for every value of the parameters.
    Identity,
    /// Invariant exactly when all of these vanish.
    Conditions(Vec<Expr>),
    /// Residual is not polynomial in the independent variables.
    Residual(Expr),
}

/// Condition for `u = solution` to be an invariant solution: the
/// characteristic `eta - xi^i u_i` evaluated on it must vanish identically.
pub fn invariance_condition_of_solution(field: &VectorField, u: &str, solution: &Expr, independents: &[Name]) -> SolutionCondition {
    let uvar = Symbol::Jet(JetVar { base: name(u), index: vec![] });
    let on = BTreeMap::from([(uvar.clone(), solution.clone())]);
    let mut terms = vec![substitute(&field.coefficient(&uvar), &on)];
    for x in independents {
        let xs = Symbol::Indep(x.clone());
        let xi = substitute(&field.coefficient(&xs), &on);
        terms.push(-(xi * differentiate(solution, &xs)));
    }
    let f = Fraction::from_expr(&Expr::add(terms));
    if f.is_zero() {
        return SolutionCondition::Identity;
    }
    let indep: Vec<Symbol> = independents.iter().map(|x| Symbol::Indep(x.clone())).collect();
    let (_, content) = f.numerator().content();
    let num = f.numerator().scale(&num_rational::BigRational::from_integer(1.into()), &content.inv());
    let mut groups: BTreeMap<Vec<(Expr, Expr)>, Poly> = BTreeMap::new();
    for (m, c) in num.terms() {
        let mut key = Vec::new();
        let mut rest = crate::expr::Mono::one();
        for (k, e) in m.iter() {
            let is_x = indep.iter().any(|s| k.contains_symbol(s) || e.contains_symbol(s));
            if is_x {
                let poly_ok = matches!(k, Expr::Sym(Symbol::Indep(_))) && e.as_rational().is_some_and(|q| q.is_integer());
                if !poly_ok {
                    return SolutionCondition::Residual(f.to_expr());
                }
                key.push((k.clone(), e.clone()));
            } else {
                rest = rest.mul(&crate::expr::Mono::kernel(k.clone(), e.clone()));
            }
        }
        groups.entry(key).or_insert_with(Poly::zero).add_term(rest, c.clone());
    }
    let conds: Vec<Expr> = groups
        .into_values()
        .filter(|p| !p.is_zero())
        .map(|p| {
            let (q, m) = p.content();
            p.scale(&(num_rational::BigRational::from_integer(1.into()) / q), &m.inv()).to_expr()
        })
        .collect();
    if conds.is_empty() {
        SolutionCondition::Identity
    } else {
        SolutionCondition::Conditions(conds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, Bindings, Context};

    fn ctx() -> Context {
        Context::standard()
    }

    fn p(s: &str) -> Expr {
        ctx().parse(s).unwrap()
    }

    fn jet(s: &str) -> JetVar {
        match p(s) {
            Expr::Sym(Symbol::Jet(j)) => j,
            e => panic!("not a jet: {e}"),
        }
    }

    fn field(pairs: &[(&str, &str)]) -> VectorField {
        VectorField::coefficients(pairs.iter().map(|(s, c)| {
            let sym = p(s).as_symbol().unwrap().clone();
            (sym, p(c))
        }))
    }

    #[test]
    fn translation_and_scaling_prolongation() {
        let space = JetSpace::new(&["x1", "x2"]);
        let v = field(&[("x1", "x1"), ("u", "2*u")]);
        let mut pr = v.prolonged(&space);
        assert_eq!(pr.coefficient(&jet("diff(u,x1)")), p("diff(u,x1)"));
        assert_eq!(simplify(&pr.coefficient(&jet("diff(u,x1,x1)"))), p("0"));
        assert_eq!(simplify(&pr.coefficient(&jet("diff(u,x2,x2)"))), p("2*diff(u,x2,x2)"));
    }

    #[test]
    fn bracket_of_tangent_field_with_time_translation() {
        let space = JetSpace::new(&["t", "x"]);
        let k = field(&[("t", "-t"), ("x", "diff(u,x)"), ("u", "diff(u,x)^2/2"), ("diff(u,x)", "0"), ("diff(u,t)", "diff(u,t)")]);
        let pt = field(&[("t", "1"), ("x", "0"), ("u", "0"), ("diff(u,x)", "0"), ("diff(u,t)", "0")]);
        let b = lie_bracket(&k, &pt, &space).unwrap();
        assert!(same_field(&b, &pt));
        let short = field(&[("t", "1")]);
        assert!(matches!(lie_bracket(&k, &short, &space), Err(SymmetryError::VariableMismatch(..))));
    }

    #[test]
    fn contact_coefficients_agree() {
        let space = JetSpace::new(&["t", "x"]);
        let k = field(&[("t", "-t"), ("x", "diff(u,x)"), ("u", "diff(u,x)^2/2")]);
        let mut pr = k.prolonged(&space);
        assert!(is_zero(&pr.coefficient(&jet("diff(u,x)"))));
        assert!(is_zero(&(pr.coefficient(&jet("diff(u,t)")) - p("diff(u,t)"))));
    }

    #[test]
    fn scaling_symmetry_of_derivative_system() {
        let sys = EquationSystem::new(&["x1", "x2"], &["v1", "v2"])
            .with(Equation::solved(jet("diff(v1,x2)"), p("diff(v2,x1)")).unwrap())
            .unwrap()
            .with(Equation::solved(jet("diff(v2,x2)"), p("1/(1 - v1^r)")).unwrap())
            .unwrap();
        let q = field(&[("x1", "(r+1)*x1"), ("x2", "r*v2"), ("v1", "-v1"), ("v2", "r*v2")]);
        let rep = check_symmetry(&q, &sys, &SampleOptions::default()).unwrap();
        assert!(rep.verdict.holds(), "{rep:?}");
        let wrong = field(&[("x1", "(r+1)*x1"), ("x2", "r*v2"), ("v1", "v1"), ("v2", "r*v2")]);
        let inst: Vec<Bindings> = [2.0, 3.0].iter().map(|r| Bindings::new().with(Symbol::param("r"), *r)).collect();
        let rep = check_symmetry(&wrong, &sys, &SampleOptions::default().with_instances(inst)).unwrap();
        assert_eq!(rep.verdict, Verdict::Nonzero);
    }

    #[test]
    fn solution_conditions() {
        let v = field(&[("x2", "alpha - beta*x2"), ("x1", "beta*x1")]);
        let s = p("C1*ln(C2/C1*x1*x2 + C3*x1)");
        let xs = [name("x1"), name("x2")];
        match invariance_condition_of_solution(&v, "u", &s, &xs) {
            SolutionCondition::Conditions(c) => {
                assert_eq!(c.len(), 1);
                let r = simplify(&(c[0].clone() / p("alpha*C2 + beta*C1*C3")));
                assert!(r.is_number(), "{r}");
            }
            other => panic!("{other:?}"),
        }
        let v0 = field(&[("x2", "alpha")]);
        assert_eq!(invariance_condition_of_solution(&v0, "u", &p("h(x1)"), &xs), SolutionCondition::Identity);
    }
}
