//! Total derivatives, on-shell reduction and implicit differentiation on
//! jet space.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::expr::{differentiate, name, substitute, Expr, Fraction, JetVar, Name, Symbol};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum JetError {
    #[error("lead variable {0} occurs in its own replacement")]
    LeadInReplacement(String),
    #[error("residual is not linear in {0}")]
    NotLinear(String),
    #[error("lead variable {0} is solved for twice")]
    DuplicateLead(String),
    #[error("equation `{0}` has no solved form")]
    Unsolved(String),
    #[error("on-shell rewriting exceeded {0} steps")]
    StepBudget(usize),
    #[error("linear system is singular (determinant {0})")]
    Singular(String),
    #[error("{equations} relations for {unknowns} unknown derivatives")]
    NotSquare { equations: usize, unknowns: usize },
}

/// Residual `= 0`, optionally solved for a lead jet variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub residual: Expr,
    pub solved: Option<(JetVar, Expr)>,
}

impl Equation {
    pub fn new(residual: Expr) -> Self {
        Equation { residual, solved: None }
    }

    /// `lead = rhs`.
    pub fn solved(lead: JetVar, rhs: Expr) -> Result<Self, JetError> {
        let sym = Symbol::Jet(lead.clone());
        if rhs.contains_symbol(&sym) {
            return Err(JetError::LeadInReplacement(Expr::Sym(sym).to_string()));
        }
        Ok(Equation { residual: Expr::Sym(sym) - rhs.clone(), solved: Some((lead, rhs)) })
    }

    /// Solves a residual that is linear in `lead`.
    pub fn solve_for(residual: Expr, lead: JetVar) -> Result<Self, JetError> {
        let sym = Symbol::Jet(lead.clone());
        let a = differentiate(&residual, &sym);
        if a.contains_symbol(&sym) || a.is_zero() {
            return Err(JetError::NotLinear(Expr::Sym(sym).to_string()));
        }
        let b = substitute(&residual, &BTreeMap::from([(sym, Expr::zero())]));
        let rhs = Fraction::from_expr(&-b)
            .div(&Fraction::from_expr(&a))
            .ok_or_else(|| JetError::NotLinear(lead.base.to_string()))?
            .to_expr();
        Ok(Equation { residual, solved: Some((lead, rhs)) })
    }

    pub fn lead(&self) -> Option<&JetVar> {
        self.solved.as_ref().map(|(l, _)| l)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquationSystem {
    pub equations: Vec<Equation>,
    pub independents: Vec<Name>,
    pub dependents: Vec<Name>,
}

impl EquationSystem {
    pub fn new(independents: &[&str], dependents: &[&str]) -> Self {
        EquationSystem {
            equations: Vec::new(),
            independents: independents.iter().map(|s| name(s)).collect(),
            dependents: dependents.iter().map(|s| name(s)).collect(),
        }
    }

    pub fn push(&mut self, eq: Equation) -> Result<(), JetError> {
        if let Some(l) = eq.lead() {
            if self.equations.iter().any(|e| e.lead() == Some(l)) {
                return Err(JetError::DuplicateLead(Expr::Sym(Symbol::Jet(l.clone())).to_string()));
            }
        }
        self.equations.push(eq);
        Ok(())
    }

    pub fn with(mut self, eq: Equation) -> Result<Self, JetError> {
        self.push(eq)?;
        Ok(self)
    }

    pub fn space(&self) -> JetSpace {
        JetSpace { independents: self.independents.clone(), ..JetSpace::default() }
    }
}

/// Independent variables plus optional definitions of auxiliary symbols
/// (`omega := x2 - v2`, differentiated through their definition) and
/// potentials (`u_x = p`, so that `D_x u = p`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JetSpace {
    pub independents: Vec<Name>,
    definitions: BTreeMap<Symbol, Expr>,
    potentials: BTreeMap<(Name, Name), Name>,
}

impl JetSpace {
    pub fn new(independents: &[&str]) -> Self {
        JetSpace { independents: independents.iter().map(|s| name(s)).collect(), ..JetSpace::default() }
    }

    pub fn define(&mut self, s: Symbol, def: Expr) {
        self.definitions.insert(s, def);
    }

    pub fn definitions(&self) -> &BTreeMap<Symbol, Expr> {
        &self.definitions
    }

    pub fn set_potential(&mut self, u: &str, x: &str, p: &str) {
        self.potentials.insert((name(u), name(x)), name(p));
    }

    /// `D_x J` for a jet coordinate.
    pub fn raise(&self, j: &JetVar, x: &Name) -> Expr {
        if j.index.is_empty() {
            if let Some(p) = self.potentials.get(&(j.base.clone(), x.clone())) {
                return Expr::Sym(Symbol::Jet(JetVar { base: p.clone(), index: vec![] }));
            }
        }
        Expr::Sym(Symbol::Jet(j.raise(x)))
    }

    pub fn total_derivative(&self, e: &Expr, x: &Name) -> Expr {
        let mut terms = vec![differentiate(e, &Symbol::Indep(x.clone()))];
        for s in e.symbols() {
            match &s {
                Symbol::Jet(j) => {
                    let d = differentiate(e, &s);
                    if !d.is_zero() {
                        terms.push(d * self.raise(j, x));
                    }
                }
                Symbol::Param(_) => {
                    if let Some(def) = self.definitions.get(&s) {
                        let d = differentiate(e, &s);
                        if !d.is_zero() {
                            terms.push(d * self.total_derivative(def, x));
                        }
                    }
                }
                Symbol::Indep(_) => {}
            }
        }
        Expr::add(terms)
    }

    pub fn total_derivative_multi(&self, e: &Expr, xs: &[Name]) -> Expr {
        xs.iter().fold(e.clone(), |acc, x| self.total_derivative(&acc, x))
    }

    /// Replaces defined symbols by their definitions, recursively.
    pub fn expand(&self, e: &Expr) -> Expr {
        let mut cur = e.clone();
        for _ in 0..8 {
            let next = substitute(&cur, &self.definitions);
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }
}

/// `D_x e` with jet variables raised by `x`.
pub fn total_derivative(e: &Expr, x: &str) -> Expr {
    JetSpace::default().total_derivative(e, &name(x))
}

pub const DEFAULT_MAX_ORDER: usize = 4;
pub const DEFAULT_STEP_BUDGET: usize = 64;

/// Substitutes lead variables and their differential consequences.
pub struct OnShell<'a> {
    space: &'a JetSpace,
    rules: Vec<(JetVar, Expr)>,
    memo: HashMap<JetVar, Expr>,
    max_order: usize,
    budget: usize,
}

impl<'a> OnShell<'a> {
    pub fn new(sys: &EquationSystem, space: &'a JetSpace, max_order: usize) -> Result<Self, JetError> {
        let mut rules = Vec::new();
        for eq in &sys.equations {
            match &eq.solved {
                Some((l, r)) => rules.push((l.clone(), r.clone())),
                None => return Err(JetError::Unsolved(eq.residual.to_string())),
            }
        }
        Ok(OnShell { space, rules, memo: HashMap::new(), max_order, budget: DEFAULT_STEP_BUDGET })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    fn replacement(&mut self, j: &JetVar) -> Option<Expr> {
        if let Some(v) = self.memo.get(j) {
            return Some(v.clone());
        }
        let (lead, rhs, rest) = self.rules.iter().find_map(|(l, r)| {
            let rest = j.descends_from(l)?;
            (rest.len() <= self.max_order).then(|| (l.clone(), r.clone(), rest))
        })?;
        let mut cur = lead;
        let mut val = rhs;
        for x in rest {
            cur = cur.raise(&x);
            val = match self.memo.get(&cur) {
                Some(v) => v.clone(),
                None => {
                    let v = self.space.total_derivative(&val, &x);
                    self.memo.insert(cur.clone(), v.clone());
                    v
                }
            };
        }
        self.memo.insert(j.clone(), val.clone());
        Some(val)
    }

    pub fn reduce(&mut self, e: &Expr) -> Result<Expr, JetError> {
        let mut cur = e.clone();
        for _ in 0..self.budget {
            let mut map = BTreeMap::new();
            for j in cur.jets() {
                if let Some(r) = self.replacement(&j) {
                    map.insert(Symbol::Jet(j), r);
                }
            }
            if map.is_empty() {
                return Ok(cur);
            }
            cur = substitute(&cur, &map);
        }
        Err(JetError::StepBudget(self.budget))
    }
}

/// Reduces `e` modulo the solved equations of `sys` and their total
/// derivatives of order at most `max_order`.
pub fn reduce_on_shell(e: &Expr, sys: &EquationSystem, max_order: usize) -> Result<Expr, JetError> {
    let space = sys.space();
    OnShell::new(sys, &space, max_order)?.reduce(e)
}

/// Gaussian elimination over rational functions. Solves `a * y = b`.
pub fn solve_linear(mut a: Vec<Vec<Fraction>>, mut b: Vec<Fraction>) -> Result<Vec<Fraction>, JetError> {
    let n = b.len();
    let mut det = Fraction::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| (a[r][col].as_constant().is_none(), a[r][col].numerator().len()));
        let Some(p) = pivot else {
            return Err(JetError::Singular(Expr::zero().to_string()));
        };
        if p != col {
            a.swap(p, col);
            b.swap(p, col);
            det = det.neg();
        }
        det = det.mul(&a[col][col]);
        let inv = a[col][col].recip().expect("nonzero pivot");
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].mul(&inv);
            for c in col..n {
                let v = a[r][c].sub(&f.mul(&a[col][c]));
                a[r][c] = v;
            }
            b[r] = b[r].sub(&f.mul(&b[col]));
        }
    }
    Ok((0..n).map(|i| b[i].mul(&a[i][i].recip().expect("nonzero pivot"))).collect())
}

/// Differentiates solved relations totally by `wrt` and solves the
/// resulting linear system for the new derivatives of their lead variables.
/// Other jet variables stay free.
/// Leads of solved relations are substituted into the results.
pub fn solve_implicit(relations: &[Equation], wrt: &str, space: &JetSpace) -> Result<BTreeMap<JetVar, Expr>, JetError> {
    let x = name(wrt);
    let mut present: BTreeSet<JetVar> = BTreeSet::new();
    for r in relations {
        present.extend(space.expand(&r.residual).jets());
    }
    let targets: BTreeSet<&Name> = relations.iter().filter_map(|r| r.lead()).map(|l| &l.base).collect();
    let mut unknowns: Vec<JetVar> = Vec::new();
    for j in present.iter().filter(|j| targets.contains(&j.base)) {
        if let Expr::Sym(Symbol::Jet(k)) = space.raise(j, &x) {
            if !present.contains(&k) && !unknowns.contains(&k) {
                unknowns.push(k);
            }
        }
    }
    if unknowns.len() != relations.len() {
        return Err(JetError::NotSquare { equations: relations.len(), unknowns: unknowns.len() });
    }
    let zero: BTreeMap<Symbol, Expr> = unknowns.iter().map(|u| (Symbol::Jet(u.clone()), Expr::zero())).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for r in relations {
        let d = space.total_derivative(&r.residual, &x);
        a.push(unknowns.iter().map(|u| Fraction::from_expr(&differentiate(&d, &Symbol::Jet(u.clone())))).collect());
        b.push(Fraction::from_expr(&-substitute(&d, &zero)));
    }
    let sol = solve_linear(a, b)?;
    let leads: BTreeMap<Symbol, Expr> =
        relations.iter().filter_map(|r| r.solved.as_ref()).map(|(l, v)| (Symbol::Jet(l.clone()), v.clone())).collect();
    Ok(unknowns
        .into_iter()
        .zip(sol)
        .map(|(u, v)| {
            let e = substitute(&v.to_expr(), &leads);
            (u, crate::expr::simplify(&e))
        })
        .collect())
}

/// Derivative of `target` by `wrt` implied by the relations.
pub fn implicit_derivative(relations: &[Equation], target: &JetVar, wrt: &str, space: &JetSpace) -> Result<Expr, JetError> {
    let sols = solve_implicit(relations, wrt, space)?;
    let want = target.raise(&name(wrt));
    sols.get(&want).cloned().ok_or(JetError::NotSquare { equations: relations.len(), unknowns: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, parse, Context};

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

    #[test]
    fn total_derivatives() {
        assert_eq!(total_derivative(&p("x1*diff(u,x2)"), "x1"), p("diff(u,x2) + x1*diff(u,x1,x2)"));
        assert_eq!(total_derivative(&p("diff(u,x1) + alpha^2*u"), "x1"), p("diff(u,x1,x1) + alpha^2*diff(u,x1)"));
        let d = total_derivative(&p("F(diff(u,x1) + alpha^2*u)"), "x2");
        assert!(is_zero(&(d - p("F'(diff(u,x1) + alpha^2*u)*(diff(u,x1,x2) + alpha^2*diff(u,x2))"))));
    }

    fn ode29() -> EquationSystem {
        EquationSystem::new(&["x1", "x2"], &["u"])
            .with(Equation::solved(jet("diff(u,x1,x1)"), p("-alpha^2*diff(u,x1)")).unwrap())
            .unwrap()
    }

    #[test]
    fn on_shell_examples() {
        let sys = ode29();
        assert_eq!(reduce_on_shell(&p("diff(u,x1,x1)"), &sys, 4).unwrap(), p("-alpha^2*diff(u,x1)"));
        assert_eq!(reduce_on_shell(&p("diff(u,x1,x1,x2)"), &sys, 4).unwrap(), p("-alpha^2*diff(u,x1,x2)"));
        assert_eq!(reduce_on_shell(&p("sin(u)"), &sys, 4).unwrap(), p("sin(u)"));
        let r = reduce_on_shell(&p("diff(u,x1,x1,x1)"), &sys, 4).unwrap();
        assert_eq!(r, p("alpha^4*diff(u,x1)"));
    }

    #[test]
    fn step_budget_guard() {
        let sys = EquationSystem::new(&["x"], &["u"]).with(Equation::solved(jet("diff(u,x)"), p("diff(u,x,x)")).unwrap()).unwrap();
        let space = sys.space();
        let mut r = OnShell::new(&sys, &space, 50).unwrap().with_budget(10);
        assert_eq!(r.reduce(&p("diff(u,x)")), Err(JetError::StepBudget(10)));
    }

    #[test]
    fn lead_must_not_recur() {
        assert!(Equation::solved(jet("diff(u,x)"), p("diff(u,x)^2")).is_err());
        let eq = Equation::solve_for(p("2*diff(u,x,x) - u"), jet("diff(u,x,x)")).unwrap();
        assert_eq!(eq.solved.unwrap().1, p("u/2"));
    }

    #[test]
    fn implicit_examples() {
        let mut space = JetSpace::new(&["x1", "x2"]);
        space.define(Symbol::param("omega"), p("x2 - v2"));
        let rel = Equation::solved(jet("v2"), p("x1^(r/(r+1))*phi2(omega)")).unwrap();
        let d = implicit_derivative(&[rel], &jet("v2"), "x2", &space).unwrap();
        let expected = p("x1^(r/(r+1))*phi2'(omega)/(1 + x1^(r/(r+1))*phi2'(omega))");
        assert!(is_zero(&(d - expected)));

        let mut space = JetSpace::new(&["x", "t"]);
        space.define(Symbol::param("omega"), p("x*diff(u,x) - 2*u"));
        let rel = Equation::solved(jet("diff(u,x)"), p("f(omega)")).unwrap();
        let d = implicit_derivative(&[rel], &jet("diff(u,x)"), "x", &space).unwrap();
        assert!(is_zero(&(d - p("-f'(omega)*f(omega)/(1 - x*f'(omega))"))));

        let space = JetSpace::new(&["x", "t"]);
        let rel = Equation::solved(jet("diff(u,x)"), p("g(x)")).unwrap();
        assert_eq!(implicit_derivative(&[rel], &jet("diff(u,x)"), "x", &space).unwrap(), p("g'(x)"));
    }

    #[test]
    fn singular_system_reported() {
        let a = vec![vec![Fraction::from_expr(&parse("x").unwrap()), Fraction::from_expr(&parse("2*x").unwrap())]; 2];
        let b = vec![Fraction::one(), Fraction::zero()];
        assert!(matches!(solve_linear(a, b), Err(JetError::Singular(_))));
    }
}
