//! Ansatz substitution, compatibility conditions, collection by basis
//! functions and comparison with expected reduced equations.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::expr::{differentiate, name, replace, simplify, substitute, with_positive_bases, Expr, Fraction, JetVar, Mono, Name, Poly, Symbol};
use crate::jet::{solve_implicit, Equation, EquationSystem, JetError, JetSpace};
use crate::sampling::SampleOptions;
use crate::symmetry::{decide, InvarianceReport, Verdict};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("equation has order {0}; expected at most 2")]
    OrderTooHigh(usize),
    #[error("no prescription for derivative {0}")]
    MissingPrescription(String),
    #[error("prescription for {0} is not a jet of order 0 or 1")]
    BadPrescription(String),
    #[error("basis function `{0}` is not a single monomial")]
    BadBasis(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prescription {
    /// Values of the dependent variables, or of first derivatives of one
    /// dependent variable, through invariants.
    Derivatives(Vec<(JetVar, Expr)>),
    /// `u = F(x, phi_1, .., phi_m)`.
    Solution(Vec<(Name, Expr)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ansatz {
    pub prescription: Prescription,
    /// Invariant symbols and their definitions.
    pub invariants: Vec<(Symbol, Expr)>,
    /// Variables that survive in the reduced equations (besides invariant
    /// symbols), e.g. `u` when the unknown functions take `u` as argument.
    pub keep: Vec<Symbol>,
    /// Basis functions of the remaining explicit dependence; `[1]` if empty.
    pub basis: Vec<Expr>,
}

impl Ansatz {
    pub fn derivatives(pairs: Vec<(JetVar, Expr)>) -> Self {
        Ansatz { prescription: Prescription::Derivatives(pairs), invariants: vec![], keep: vec![], basis: vec![] }
    }

    pub fn solution(pairs: Vec<(Name, Expr)>) -> Self {
        Ansatz { prescription: Prescription::Solution(pairs), invariants: vec![], keep: vec![], basis: vec![] }
    }

    pub fn with_invariant(mut self, s: Symbol, def: Expr) -> Self {
        self.invariants.push((s, def));
        self
    }

    pub fn keeping(mut self, s: Symbol) -> Self {
        self.keep.push(s);
        self
    }

    pub fn with_basis(mut self, basis: Vec<Expr>) -> Self {
        self.basis = basis;
        self
    }

    /// Opaque functions introduced by the prescriptions.
    pub fn unknown_functions(&self) -> BTreeSet<Name> {
        let es: Vec<&Expr> = match &self.prescription {
            Prescription::Derivatives(p) => p.iter().map(|(_, e)| e).collect(),
            Prescription::Solution(p) => p.iter().map(|(_, e)| e).collect(),
        };
        es.iter().flat_map(|e| e.opaque_apps()).map(|o| o.name).collect()
    }
}

/// One reduced equation: the coefficient of `basis` in the cleared
/// residual of `source`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedEquation {
    pub source: String,
    pub basis: Expr,
    pub residual: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Collected {
    /// Least common denominator that was cleared.
    pub lcd: Expr,
    /// Cleared numerator with monomial content removed.
    pub cleared: Expr,
    pub coefficients: Vec<(Expr, Expr)>,
    pub leftover: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    pub equations: Vec<ReducedEquation>,
    pub basis: Vec<Expr>,
    pub lcds: Vec<Expr>,
    pub leftover: Vec<Expr>,
    /// Number of unknown functions in the ansatz.
    pub unknowns: usize,
}

impl ReducedSystem {
    pub fn succeeded(&self) -> bool {
        self.leftover.iter().all(Expr::is_zero)
    }

    pub fn residuals(&self) -> Vec<Expr> {
        self.equations.iter().map(|e| e.residual.clone()).collect()
    }
}

fn eliminated(s: &Symbol, keep: &[Symbol]) -> bool {
    matches!(s, Symbol::Indep(_) | Symbol::Jet(_)) && !keep.contains(s)
}

fn x_dependent(k: &Expr, e: &Expr, keep: &[Symbol]) -> bool {
    k.symbols().iter().chain(e.symbols().iter()).any(|s| eliminated(s, keep))
}

fn split(m: &Mono, keep: &[Symbol]) -> (Mono, Mono) {
    let mut x = Mono::one();
    let mut rest = Mono::one();
    for (k, e) in m.iter() {
        let part = Mono::kernel(k.clone(), e.clone());
        if x_dependent(k, e, keep) {
            x = x.mul(&part);
        } else {
            rest = rest.mul(&part);
        }
    }
    (x, rest)
}

/// Clears denominators, removes the monomial content in the eliminated
/// variables and collects the coefficient of each basis function; terms
/// whose explicit dependence matches no basis function form the leftover.
pub fn collect(residual: &Expr, basis: &[Expr], keep: &[Symbol]) -> Result<Collected, ReductionError> {
    let f = Fraction::from_expr(residual);
    let lcd = f.denominator_expr();
    let num = f.numerator();
    let (q, content) = num.content();
    let (cx, _) = split(&content, keep);
    let num = num.scale(&(BigRational::one() / q), &cx.inv());
    let default = [Expr::one()];
    let basis = if basis.is_empty() { &default[..] } else { basis };
    let mut keys = Vec::new();
    for b in basis {
        let bf = Fraction::from_expr(b);
        let terms: Vec<_> = bf.numerator().terms().collect();
        if bf.denominator().next().is_some() || terms.len() != 1 {
            return Err(ReductionError::BadBasis(b.to_string()));
        }
        keys.push(split(terms[0].0, keep).0);
    }
    let mut coeffs: Vec<Poly> = vec![Poly::zero(); basis.len()];
    let mut leftover = Poly::zero();
    for (m, c) in num.terms() {
        let (x, rest) = split(m, keep);
        match keys.iter().position(|k| *k == x) {
            Some(i) => coeffs[i].add_term(rest, c.clone()),
            None => leftover.add_term(m.clone(), c.clone()),
        }
    }
    Ok(Collected {
        lcd,
        cleared: num.to_expr(),
        coefficients: basis.iter().cloned().zip(coeffs.iter().map(Poly::to_expr)).collect(),
        leftover: leftover.to_expr(),
    })
}

/// Numerator of `e` divided by its rational and monomial content.
pub fn clear(e: &Expr) -> Expr {
    let f = Fraction::from_expr(e);
    let num = f.numerator();
    if num.is_zero() {
        return Expr::zero();
    }
    let (q, m) = num.content();
    num.scale(&(BigRational::one() / q), &m.inv()).to_expr()
}

fn potential_name(u: &Name, x: &Name) -> Name {
    name(&format!("{u}_{x}"))
}

/// Rewrites derivatives of `u` through the potentials `u_x`.
fn to_potentials(e: &Expr, pots: &BTreeMap<Name, BTreeSet<Name>>) -> Result<Expr, ReductionError> {
    let mut map = BTreeMap::new();
    for j in e.jets() {
        if let Some(dirs) = pots.get(&j.base) {
            if let Some(first) = j.index.first() {
                if !dirs.contains(first) {
                    return Err(ReductionError::MissingPrescription(Expr::sym(Symbol::Jet(j.clone())).to_string()));
                }
                let v = JetVar { base: potential_name(&j.base, first), index: j.index[1..].to_vec() };
                map.insert(Symbol::Jet(j), Expr::sym(Symbol::Jet(v)));
            }
        }
    }
    Ok(substitute(e, &map))
}

/// Internal form of a derivative ansatz: jet space with potentials and
/// definitions, solved relations and the implicit first derivatives.
struct DerivativeForm {
    space: JetSpace,
    relations: Vec<Equation>,
    pots: BTreeMap<Name, BTreeSet<Name>>,
    derivs: BTreeMap<JetVar, Expr>,
}

impl DerivativeForm {
    fn new(pairs: &[(JetVar, Expr)], ans: &Ansatz, independents: &[Name]) -> Result<Self, ReductionError> {
        let mut pots: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
        for (l, _) in pairs {
            match l.index.len() {
                0 => {}
                1 => {
                    pots.entry(l.base.clone()).or_default().insert(l.index[0].clone());
                }
                _ => return Err(ReductionError::BadPrescription(Expr::sym(Symbol::Jet(l.clone())).to_string())),
            }
        }
        let ind: Vec<&str> = independents.iter().map(|s| &**s).collect();
        let mut space = JetSpace::new(&ind);
        for (u, dirs) in &pots {
            for x in dirs {
                space.set_potential(u, x, &potential_name(u, x));
            }
        }
        for (s, d) in &ans.invariants {
            space.define(s.clone(), to_potentials(d, &pots)?);
        }
        let mut relations = Vec::new();
        for (l, r) in pairs {
            let lead = if l.index.is_empty() { l.clone() } else { JetVar { base: potential_name(&l.base, &l.index[0]), index: vec![] } };
            relations.push(Equation::solved(lead, to_potentials(r, &pots)?)?);
        }
        let mut derivs = BTreeMap::new();
        for x in independents {
            derivs.extend(solve_implicit(&relations, x, &space)?);
        }
        Ok(DerivativeForm { space, relations, pots, derivs })
    }

    fn leads(&self) -> BTreeMap<Symbol, Expr> {
        self.relations.iter().filter_map(|r| r.solved.as_ref()).map(|(l, v)| (Symbol::Jet(l.clone()), v.clone())).collect()
    }

    fn lead_bases(&self) -> BTreeSet<Name> {
        self.relations.iter().filter_map(|r| r.lead()).map(|l| l.base.clone()).collect()
    }

    fn value(&self, j: &JetVar) -> Option<Expr> {
        if j.index.is_empty() {
            return self.leads().get(&Symbol::Jet(j.clone())).cloned();
        }
        if let Some(v) = self.derivs.get(j) {
            return Some(v.clone());
        }
        let mut parent = j.clone();
        let x = parent.index.pop()?;
        let pv = self.value(&parent)?;
        let d = self.space.total_derivative(&pv, &x);
        Some(self.resolve(&d))
    }

    /// Substitutes every jet of a lead variable by its value on the ansatz.
    fn resolve(&self, e: &Expr) -> Expr {
        let bases = self.lead_bases();
        let mut cur = e.clone();
        for _ in 0..6 {
            let map: BTreeMap<Symbol, Expr> = cur
                .jets()
                .into_iter()
                .filter(|j| bases.contains(&j.base))
                .filter_map(|j| self.value(&j).map(|v| (Symbol::Jet(j), v)))
                .collect();
            if map.is_empty() {
                break;
            }
            cur = substitute(&cur, &map);
        }
        cur
    }

    fn compatibility(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        for (u, dirs) in &self.pots {
            let dirs: Vec<&Name> = dirs.iter().collect();
            for (i, a) in dirs.iter().enumerate() {
                for b in &dirs[i + 1..] {
                    let pa = JetVar { base: potential_name(u, a), index: vec![(*b).clone()] };
                    let pb = JetVar { base: potential_name(u, b), index: vec![(*a).clone()] };
                    let r = self.resolve(&(Expr::sym(Symbol::Jet(pa)) - Expr::sym(Symbol::Jet(pb))));
                    out.push(simplify(&r));
                }
            }
        }
        out
    }
}

/// Cross-derivative residuals `D_b R_a - D_a R_b` of a derivative ansatz,
/// expressed through the invariants.
pub fn compatibility_conditions(ans: &Ansatz, independents: &[Name]) -> Result<Vec<Expr>, ReductionError> {
    match &ans.prescription {
        Prescription::Derivatives(p) => Ok(DerivativeForm::new(p, ans, independents)?.compatibility()),
        Prescription::Solution(_) => Err(ReductionError::Precondition("compatibility needs a derivative ansatz".into())),
    }
}

/// Residuals of the equations on the ansatz, before collection, labelled
/// by their source. Compatibility residuals are appended for derivative
/// ansatzes given through first derivatives.
pub fn substituted_residuals(equations: &[Expr], ans: &Ansatz, independents: &[Name]) -> Result<Vec<(String, Expr)>, ReductionError> {
    let mut out = Vec::new();
    match &ans.prescription {
        Prescription::Derivatives(p) => {
            let form = DerivativeForm::new(p, ans, independents)?;
            for (i, e) in equations.iter().enumerate() {
                let v = to_potentials(e, &form.pots)?;
                out.push((format!("equation {}", i + 1), simplify(&form.resolve(&v))));
            }
            for (i, c) in form.compatibility().into_iter().enumerate() {
                out.push((format!("compatibility {}", i + 1), c));
            }
        }
        Prescription::Solution(p) => {
            let mut space = JetSpace::new(&independents.iter().map(|s| &**s).collect::<Vec<_>>());
            for (s, d) in &ans.invariants {
                space.define(s.clone(), d.clone());
            }
            let sols: BTreeMap<&Name, &Expr> = p.iter().map(|(n, e)| (n, e)).collect();
            for (i, e) in equations.iter().enumerate() {
                let map: BTreeMap<Symbol, Expr> = e
                    .jets()
                    .into_iter()
                    .filter_map(|j| sols.get(&j.base).map(|s| (Symbol::Jet(j.clone()), space.total_derivative_multi(s, &j.index))))
                    .collect();
                let r = simplify(&substitute(e, &map));
                out.push((format!("equation {}", i + 1), eliminate_by_invariants(&r, ans, independents)));
            }
        }
    }
    Ok(out)
}

/// Replaces an independent variable `x` by the invariant `s = d` when `d`
/// carries no jets and is homogeneous in `x`: `d = x^k g`, so
/// `x = (s/g)^(1/k)`. Independents listed in `keep` are left alone.
fn eliminate_by_invariants(e: &Expr, ans: &Ansatz, independents: &[Name]) -> Expr {
    let mut cur = e.clone();
    for (s, d) in &ans.invariants {
        if !d.jets().is_empty() {
            continue;
        }
        for x in independents {
            let xs = Symbol::Indep(x.clone());
            if ans.keep.contains(&xs) || !d.contains_symbol(&xs) || !cur.contains_symbol(&xs) {
                continue;
            }
            let xe = Expr::sym(xs.clone());
            let k = simplify(&(xe.clone() * differentiate(d, &xs) / d.clone()));
            if !matches!(k, Expr::Num(_)) || k.is_zero() {
                continue;
            }
            let g = simplify(&(d.clone() / Expr::pow(xe, k.clone())));
            if g.contains_symbol(&xs) {
                continue;
            }
            let value = Expr::pow(Expr::sym(s.clone()) / g, Expr::one() / k);
            // the invariant is taken on the branch where x and s/g are positive
            cur = with_positive_bases(|| simplify(&substitute(&cur, &BTreeMap::from([(xs, value)]))));
            break;
        }
    }
    cur
}

/// Substitutes the ansatz and collects each residual by the basis.
pub fn apply_ansatz(equations: &[Expr], ans: &Ansatz, independents: &[Name]) -> Result<ReducedSystem, ReductionError> {
    let basis = if ans.basis.is_empty() { vec![Expr::one()] } else { ans.basis.clone() };
    let mut keep = ans.keep.clone();
    keep.extend(ans.invariants.iter().map(|(s, _)| s.clone()));
    let mut rs = ReducedSystem { equations: vec![], basis: basis.clone(), lcds: vec![], leftover: vec![], unknowns: ans.unknown_functions().len() };
    for (source, r) in substituted_residuals(equations, ans, independents)? {
        if r.is_zero() {
            continue;
        }
        let c = collect(&r, &basis, &keep)?;
        rs.lcds.push(c.lcd);
        if !c.leftover.is_zero() {
            rs.leftover.push(c.leftover);
        }
        for (b, coef) in c.coefficients {
            if !coef.is_zero() {
                rs.equations.push(ReducedEquation { source: source.clone(), basis: b, residual: clear(&coef) });
            }
        }
    }
    Ok(rs)
}

pub fn system_residuals(sys: &EquationSystem) -> Vec<Expr> {
    sys.equations.iter().map(|e| e.residual.clone()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Match {
    pub expected: Expr,
    /// Index of the matching actual equation and the constant ratio
    /// `expected / actual`.
    pub matched: Option<(usize, Expr)>,
    /// `expected - actual` against the closest candidate when unmatched.
    pub difference: Option<Expr>,
    pub report: InvarianceReport,
}

/// For each expected residual, finds an actual residual it is a nonzero
/// constant multiple of, after both are cleared of denominators and
/// monomial content. `variables` lists the symbols the ratio must not
/// depend on besides independents, jets and function values; every other
/// parameter counts as a constant.
pub fn compare_reduced(actual: &[Expr], expected: &[Expr], variables: &[Symbol]) -> Vec<Match> {
    let mut frozen: BTreeMap<Expr, Expr> = BTreeMap::new();
    let mut freeze = |e: &Expr| -> Expr {
        let mut apps: Vec<_> = e.opaque_apps().into_iter().collect();
        apps.sort();
        for o in apps {
            let key = Expr::Opaque(std::sync::Arc::new(o));
            let n = frozen.len();
            frozen.entry(key).or_insert_with(|| Expr::param(&format!("fn_value_{n}")));
        }
        replace(e, &frozen)
    };
    let act: Vec<Expr> = actual.iter().map(|e| freeze(&clear(e))).collect();
    let exp: Vec<Expr> = expected.iter().map(|e| freeze(&clear(e))).collect();
    let frozen_syms: BTreeSet<Symbol> = frozen.values().filter_map(|e| e.as_symbol().cloned()).collect();
    let mut used = vec![false; act.len()];
    let mut out = Vec::new();
    for (ei, e) in exp.iter().enumerate() {
        let mut found = None;
        let mut last_report = None;
        for (ai, a) in act.iter().enumerate() {
            if used[ai] || a.is_zero() || e.is_zero() {
                continue;
            }
            let vars: BTreeSet<Symbol> = e
                .symbols()
                .into_iter()
                .chain(a.symbols())
                .filter(|s| matches!(s, Symbol::Indep(_) | Symbol::Jet(_)) || frozen_syms.contains(s) || variables.contains(s))
                .collect();
            let wr: Vec<Expr> = vars.iter().map(|v| e.clone() * differentiate(a, v) - a.clone() * differentiate(e, v)).collect();
            let rep = decide(wr, &SampleOptions::default());
            if rep.verdict.holds() {
                found = Some((ai, rep));
                break;
            }
            last_report = Some(rep);
        }
        match found {
            Some((ai, rep)) => {
                used[ai] = true;
                let ratio = simplify(&(expected[ei].clone() / actual[ai].clone()));
                out.push(Match { expected: expected[ei].clone(), matched: Some((ai, ratio)), difference: None, report: rep });
            }
            None => {
                let diff = actual.get(ei.min(actual.len().saturating_sub(1))).map(|a| simplify(&(expected[ei].clone() - a.clone())));
                let report = last_report.unwrap_or(InvarianceReport { verdict: Verdict::Nonzero, residuals: vec![], sampling: None, seed: None, cross_check: None });
                out.push(Match { expected: expected[ei].clone(), matched: None, difference: diff, report });
            }
        }
    }
    out
}

/// First-order system for a second-order equation.
///
/// General equations get `v^a = u_{x_a}` with the rewritten equation and
/// the compatibility `v^1_{x_2} = v^2_{x_1}`. Equations `u_{x_a x_a} =
/// R` with `R` depending on second derivatives only get one variable per
/// second derivative, the rewritten equation, the mixed-partial relation
/// and the `x_b` derivative of the equation.
pub fn corresponding_system(residual: &Expr, u: &str, independents: [&str; 2], new_names: &[&str]) -> Result<EquationSystem, ReductionError> {
    let order = residual.jets().iter().filter(|j| &*j.base == u).map(|j| j.order()).max().unwrap_or(0);
    if order > 2 {
        return Err(ReductionError::OrderTooHigh(order));
    }
    let [a, b] = independents;
    let (xa, xb) = (name(a), name(b));
    let jets_of_u: Vec<JetVar> = residual.jets().into_iter().filter(|j| &*j.base == u).collect();
    let pure_second = jets_of_u.iter().all(|j| j.order() == 2)
        && residual.symbols().iter().all(|s| !matches!(s, Symbol::Indep(_)));
    let jv = |n: &str, idx: &[&Name]| JetVar { base: name(n), index: { let mut v: Vec<Name> = idx.iter().map(|s| (*s).clone()).collect(); v.sort(); v } };
    let ujet = |idx: &[&Name]| jv(u, idx);
    if pure_second && new_names.len() == 3 {
        let (n1, n2, n3) = (new_names[0], new_names[1], new_names[2]);
        let map = BTreeMap::from([
            (Symbol::Jet(ujet(&[&xa, &xa])), Expr::sym(Symbol::Jet(jv(n1, &[])))),
            (Symbol::Jet(ujet(&[&xa, &xb])), Expr::sym(Symbol::Jet(jv(n2, &[])))),
            (Symbol::Jet(ujet(&[&xb, &xb])), Expr::sym(Symbol::Jet(jv(n3, &[])))),
        ]);
        let r = substitute(residual, &map);
        let lead1 = jv(n1, &[]);
        let eq1 = Equation::solve_for(r, lead1.clone())?;
        let rhs = eq1.solved.as_ref().unwrap().1.clone();
        let mut sys = EquationSystem::new(&[a, b], &[n1, n2, n3]);
        // D_b of the equation, with (u_aa)_b = (u_ab)_a.
        let space = JetSpace::new(&[a, b]);
        let d = space.total_derivative(&rhs, &xb);
        sys.push(Equation::solved(jv(n2, &[&xa]), d)?)?;
        sys.push(Equation::solved(jv(n3, &[&xa]), Expr::sym(Symbol::Jet(jv(n2, &[&xb]))))?)?;
        sys.push(eq1)?;
        return Ok(sys);
    }
    if new_names.len() != 2 {
        return Err(ReductionError::Precondition("expected two new variable names".into()));
    }
    let (n1, n2) = (new_names[0], new_names[1]);
    let mut map = BTreeMap::new();
    for j in &jets_of_u {
        let first = j.index.first().cloned();
        let v = match first {
            None => continue,
            Some(f) => {
                let base = if f == xa { n1 } else { n2 };
                JetVar { base: name(base), index: j.index[1..].to_vec() }
            }
        };
        map.insert(Symbol::Jet(j.clone()), Expr::sym(Symbol::Jet(v)));
    }
    let r = substitute(residual, &map);
    let mut sys = EquationSystem::new(&[a, b], &[n1, n2]);
    let candidates = [jv(n2, &[&xb]), jv(n1, &[&xa]), jv(n1, &[&xb])];
    let eq = candidates
        .iter()
        .filter(|c| r.contains_symbol(&Symbol::Jet((*c).clone())))
        .find_map(|c| Equation::solve_for(r.clone(), c.clone()).ok())
        .unwrap_or_else(|| Equation::new(r.clone()));
    match eq.solved.clone() {
        // the mixed derivative is the lead: the compatibility is solved
        // for the other mixed derivative instead
        Some((l, rhs)) if l == jv(n1, &[&xb]) => {
            sys.push(Equation::solved(jv(n2, &[&xa]), rhs)?)?;
        }
        _ => sys.push(Equation::solved(jv(n1, &[&xb]), Expr::sym(Symbol::Jet(jv(n2, &[&xa]))))?)?,
    }
    sys.push(eq)?;
    Ok(sys)
}

/// Hodograph transformation of a homogeneous quasilinear 2x2 system
/// `A(v) v_{x_a} + B(v) v_{x_b} = 0`: the roles of `(x_a, x_b)` and
/// `(v^1, v^2)` are exchanged. Returns residuals linear in the
/// derivatives of `x_a, x_b` with respect to `v^1, v^2`.
pub struct Hodograph {
    pub residuals: Vec<Expr>,
    /// New independents (the old dependents) and new dependents.
    pub independents: [Name; 2],
    pub dependents: [Name; 2],
}

impl Hodograph {
    /// Coefficients are free of the new dependent variables and the result
    /// is linear in their derivatives.
    pub fn is_linear(&self) -> bool {
        let deps: Vec<&Name> = self.dependents.iter().collect();
        self.residuals.iter().all(|r| {
            let jets: Vec<JetVar> = r.jets().into_iter().collect();
            if jets.iter().any(|j| j.index.is_empty() || !deps.contains(&&j.base)) {
                return false;
            }
            jets.iter().all(|j| {
                let c = differentiate(r, &Symbol::Jet(j.clone()));
                c.jets().is_empty()
            })
        })
    }
}

pub fn hodograph_transform(residuals: &[Expr], independents: [&str; 2], dependents: [&str; 2]) -> Result<Hodograph, ReductionError> {
    let (x, y) = (name(independents[0]), name(independents[1]));
    let (v, w) = (name(dependents[0]), name(dependents[1]));
    let dj = |b: &Name, i: &Name| JetVar { base: b.clone(), index: vec![i.clone()] };
    for r in residuals {
        if r.symbols().iter().any(|s| matches!(s, Symbol::Indep(_))) {
            return Err(ReductionError::Precondition(format!("coefficients depend on the independent variables in {r}")));
        }
        for j in r.jets() {
            if j.order() > 1 || (j.base != v && j.base != w) {
                return Err(ReductionError::Precondition(format!("unexpected variable in {r}")));
            }
        }
        let firsts: Vec<JetVar> = r.jets().into_iter().filter(|j| j.order() == 1).collect();
        let zero: BTreeMap<Symbol, Expr> = firsts.iter().map(|j| (Symbol::Jet(j.clone()), Expr::zero())).collect();
        if !crate::expr::is_zero(&substitute(r, &zero)) {
            return Err(ReductionError::Precondition(format!("not homogeneous: {r}")));
        }
        for j in &firsts {
            if !differentiate(r, &Symbol::Jet(j.clone())).jets().iter().all(|k| k.order() == 0) {
                return Err(ReductionError::Precondition(format!("not quasilinear: {r}")));
            }
        }
    }
    // new coordinates: independents v, w; dependents x, y
    let xv = Expr::sym(Symbol::Jet(dj(&x, &v)));
    let xw = Expr::sym(Symbol::Jet(dj(&x, &w)));
    let yv = Expr::sym(Symbol::Jet(dj(&y, &v)));
    let yw = Expr::sym(Symbol::Jet(dj(&y, &w)));
    let jac = xv.clone() * yw.clone() - xw.clone() * yv.clone();
    if crate::expr::is_zero(&jac) {
        return Err(ReductionError::Precondition("hodograph Jacobian vanishes".into()));
    }
    // v_x = y_w / J, v_y = -x_w / J, w_x = -y_v / J, w_y = x_v / J; the
    // system is homogeneous so the common factor 1/J drops out.
    let map = BTreeMap::from([
        (Symbol::Jet(dj(&v, &x)), yw),
        (Symbol::Jet(dj(&v, &y)), -xw),
        (Symbol::Jet(dj(&w, &x)), -yv),
        (Symbol::Jet(dj(&w, &y)), xv),
        (Symbol::Jet(JetVar { base: v.clone(), index: vec![] }), Expr::sym(Symbol::Indep(v.clone()))),
        (Symbol::Jet(JetVar { base: w.clone(), index: vec![] }), Expr::sym(Symbol::Indep(w.clone()))),
    ]);
    let out = residuals.iter().map(|r| simplify(&substitute(r, &map))).collect();
    Ok(Hodograph { residuals: out, independents: [v, w], dependents: [x, y] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, Context};

    fn ctx() -> Context {
        Context::standard().with_dependents(&["v1", "v2", "v3"])
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

    fn names(xs: &[&str]) -> Vec<Name> {
        xs.iter().map(|s| name(s)).collect()
    }

    fn assert_matches(actual: &[Expr], expected: &[&str], vars: &[Symbol]) {
        let exp: Vec<Expr> = expected.iter().map(|s| p(s)).collect();
        for m in compare_reduced(actual, &exp, vars) {
            assert!(m.matched.is_some(), "no match for {} among {:?}", m.expected, actual.iter().map(|a| a.to_string()).collect::<Vec<_>>());
        }
    }

    fn invariant_ansatz() -> Ansatz {
        Ansatz::derivatives(vec![
            (jet("v1"), p("x1^(-1/(r+1))*phi1(omega)")),
            (jet("v2"), p("x1^(r/(r+1))*phi2(omega)")),
        ])
        .with_invariant(Symbol::param("omega"), p("x2 - v2"))
    }

    #[test]
    fn corresponding_system_of_eq2() {
        let sys = corresponding_system(&p("diff(u,x2,x2) - 1/(1 - diff(u,x1)^r)"), "u", ["x1", "x2"], &["v1", "v2"]).unwrap();
        assert_eq!(sys.equations.len(), 2);
        assert_eq!(sys.equations[0].solved, Some((jet("diff(v1,x2)"), p("diff(v2,x1)"))));
        let (l, r) = sys.equations[1].solved.clone().unwrap();
        assert_eq!(l, jet("diff(v2,x2)"));
        assert!(is_zero(&(r - p("1/(1 - v1^r)"))));
        let t = corresponding_system(&p("diff(u,x1,x2)"), "u", ["x1", "x2"], &["v1", "v2"]).unwrap();
        assert_eq!(t.equations.len(), 2);
        assert!(corresponding_system(&p("diff(u,x1,x1,x2)"), "u", ["x1", "x2"], &["v1", "v2"]).is_err());
    }

    #[test]
    fn reduction_of_eq2() {
        let sys = vec![p("diff(v1,x2) - diff(v2,x1)"), p("diff(v2,x2) - 1/(1 - v1^r)")];
        let rs = apply_ansatz(&sys, &invariant_ansatz(), &names(&["x1", "x2"])).unwrap();
        assert!(rs.succeeded(), "{:?}", rs.leftover);
        assert!(rs.equations.len() <= rs.unknowns);
        let om = [Symbol::param("omega")];
        assert_matches(&rs.residuals(), &["phi2'(omega)*phi1(omega)^r + 1", "r/(r+1)*phi2(omega) - phi1'(omega)"], &om);
        let compat = compatibility_conditions(&invariant_ansatz(), &names(&["x1", "x2"])).unwrap();
        assert_eq!(compat.len(), 0);
    }

    #[test]
    fn reduction_of_wave_equation() {
        let ans = Ansatz::derivatives(vec![(jet("diff(u,x1)"), p("f(u)/x1")), (jet("diff(u,x2)"), p("x1*phi(u)"))]).keeping(Symbol::jet("u", &[]));
        let rs = apply_ansatz(&[p("diff(u,x1,x2) - F(u)")], &ans, &names(&["x1", "x2"])).unwrap();
        assert!(rs.succeeded());
        assert_matches(&rs.residuals(), &["f'(u)*phi(u) - F(u)", "f'(u)*phi(u) - phi(u) - phi'(u)*f(u)"], &[Symbol::jet("u", &[])]);
    }

    #[test]
    fn reduction_of_evolution_equation() {
        let ans = Ansatz::derivatives(vec![(jet("diff(u,x)"), p("f(omega)")), (jet("diff(u,t)"), p("exp(phi(omega) + x/f(omega))"))])
            .with_invariant(Symbol::param("omega"), p("x*diff(u,x) - 2*u"));
        let rs = apply_ansatz(&[p("ln(diff(u,t)) - 1/diff(u,x,x)")], &ans, &names(&["t", "x"])).unwrap();
        assert!(rs.succeeded(), "{:?}", rs.leftover);
        assert_matches(&rs.residuals(), &["f'(omega)*f(omega)*phi(omega) + 1", "(f(omega) - phi'(omega)*f(omega)^3)/f(omega)^2 + 2*f'(omega)"], &[Symbol::param("omega")]);
    }

    #[test]
    fn reduction_with_two_basis_functions() {
        let ans = Ansatz::solution(vec![(name("u"), p("phi1(x2) + exp(-alpha^2*x1)*phi2(x2)"))])
            .keeping(Symbol::indep("x2"))
            .with_basis(vec![p("1"), p("exp(-alpha^2*x1)")]);
        let z = "diff(u,x1) + alpha^2*u";
        let pde = p(&format!("diff(u,x1,x2) - diff(u,x1)*F({z}) - A({z})*u - B({z}) - k*diff(u,x2) - exp(-alpha^2*x1)*h({z})"));
        let rs = apply_ansatz(&[pde], &ans, &names(&["x1", "x2"])).unwrap();
        assert!(rs.succeeded(), "{:?}", rs.leftover);
        assert_eq!(rs.equations.len(), 2);
        assert_matches(
            &rs.residuals(),
            &[
                "-alpha^2*phi2'(x2) + alpha^2*phi2(x2)*F(alpha^2*phi1(x2)) - A(alpha^2*phi1(x2))*phi2(x2) - k*phi2'(x2) - h(alpha^2*phi1(x2))",
                "A(alpha^2*phi1(x2))*phi1(x2) + B(alpha^2*phi1(x2)) + k*phi1'(x2)",
            ],
            &[Symbol::indep("x2")],
        );
    }

    #[test]
    fn similarity_reduction_eliminates_an_independent() {
        let ans = Ansatz::solution(vec![(name("u"), p("phi(omega)"))]).with_invariant(Symbol::param("omega"), p("x/sqrt(t)"));
        let rs = apply_ansatz(&[p("diff(u,t) - diff(u,x,x)")], &ans, &names(&["t", "x"])).unwrap();
        assert!(rs.succeeded(), "{:?}", rs.leftover);
        assert_matches(&rs.residuals(), &["phi''(omega) + omega/2*phi'(omega)"], &[Symbol::param("omega")]);
    }

    #[test]
    fn failed_reduction_keeps_leftover() {
        let ans = Ansatz::solution(vec![(name("u"), p("phi1(x2) + x1^2*phi2(x2)"))]).keeping(Symbol::indep("x2"));
        let rs = apply_ansatz(&[p("diff(u,x1) - u")], &ans, &names(&["x1", "x2"])).unwrap();
        assert!(!rs.succeeded());
    }

    #[test]
    fn collection_is_complete() {
        let r = p("(x1*a + exp(x1)*b + c*x1^2)/(1 + d)");
        let c = collect(&r, &[p("1"), p("exp(x1)")], &[]).unwrap();
        let rebuilt = Expr::add(c.coefficients.iter().map(|(b, e)| b.clone() * e.clone())) + c.leftover.clone();
        assert!(is_zero(&(rebuilt - c.cleared.clone())));
        assert!(!c.leftover.is_zero());
    }

    #[test]
    fn compatibility_of_backlund_ansatz() {
        let ans = Ansatz::derivatives(vec![(jet("diff(u,x1)"), p("diff(w,x1) + k*sin(u)")), (jet("diff(u,x2)"), p("sin(u - w)/k"))]);
        let c = compatibility_conditions(&ans, &names(&["x1", "x2"])).unwrap();
        assert_eq!(c.len(), 1);
        let rep = decide(vec![c[0].clone() - p("diff(w,x1,x2) - sin(w)")], &SampleOptions::default());
        assert_eq!(rep.verdict, Verdict::NumericZero, "{}", c[0]);
        let trivial = Ansatz::derivatives(vec![(jet("diff(u,x1)"), p("c1")), (jet("diff(u,x2)"), p("c2"))]);
        assert_eq!(compatibility_conditions(&trivial, &names(&["x1", "x2"])).unwrap(), vec![Expr::zero()]);
    }

    #[test]
    fn ratio_test() {
        let a = [p("phi2'(omega)*phi1(omega)^r + 1")];
        let om = [Symbol::param("omega")];
        assert!(compare_reduced(&a, &[p("2*phi2'(omega)*phi1(omega)^r + 2")], &om)[0].matched.is_some());
        let m = &compare_reduced(&a, &[p("phi2'(omega)*phi1(omega)^r - 1")], &om)[0];
        assert!(m.matched.is_none());
        assert!(m.difference.is_some());
    }

    #[test]
    fn hodograph_of_corresponding_system() {
        let ctx = ctx().with_function("F", 2);
        let sys = corresponding_system(&ctx.parse("diff(u,x0,x0) - F(diff(u,x0,x1), diff(u,x1,x1))").unwrap(), "u", ["x0", "x1"], &["v1", "v2", "v3"]).unwrap();
        assert_eq!(sys.equations.len(), 3);
        let sub: Vec<Expr> = sys.equations[..2].iter().map(|e| e.residual.clone()).collect();
        let h = hodograph_transform(&sub, ["x0", "x1"], ["v2", "v3"]).unwrap();
        assert!(h.is_linear(), "{:?}", h.residuals.iter().map(|r| r.to_string()).collect::<Vec<_>>());
        let lin = hodograph_transform(&[p("diff(v2,x0) - 3*diff(v3,x1)"), p("diff(v3,x0) - diff(v2,x1)")], ["x0", "x1"], ["v2", "v3"]).unwrap();
        assert!(lin.is_linear());
        assert!(hodograph_transform(&[p("diff(v2,x0) - x0*diff(v3,x1)")], ["x0", "x1"], ["v2", "v3"]).is_err());
    }
}
