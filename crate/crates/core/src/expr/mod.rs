//! Immutable symbolic expressions over exact numbers, parameters, jet
//! variables, elementary functions and opaque (uninterpreted) functions.
//!
//! Every constructor returns the canonical form: sums and products are
//! flattened and sorted, numeric subterms are folded, like terms and like
//! powers are merged and the identities `x + 0 = x`, `x*1 = x`, `x*0 = 0`,
//! `x^1 = x`, `x^0 = 1` are applied. Structural equality of canonical forms is
//! expression identity. Powers are taken on the positive real branch, so
//! `(a*b)^e = a^e*b^e` and `(a^e)^f = a^(e*f)`.

mod context;
mod diff;
mod eval;
mod normal;
mod number;
mod parse;
mod print;
mod subst;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use context::Context;
pub use diff::differentiate;
pub use eval::{evaluate, Bindings, Compiled, EvalError, ExprFunction, FnSampler, OpaqueSampler};
pub use normal::{is_zero, simplify, with_positive_bases, Fraction, Mono, Poly};
pub use number::Number;
pub use parse::{parse, ParseError};
pub use subst::{replace, substitute, substitute_functions, FunctionDef};

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Dependent-variable derivative coordinate. The multi-index is kept sorted,
/// so `u_{x1 x2}` and `u_{x2 x1}` are the same variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub base: Name,
    pub index: Vec<Name>,
}

impl JetVar {
    pub fn new(base: &str, index: &[&str]) -> Self {
        let mut index: Vec<Name> = index.iter().map(|s| name(s)).collect();
        index.sort();
        JetVar { base: name(base), index }
    }

    pub fn order(&self) -> usize {
        self.index.len()
    }

    /// The jet variable differentiated once more by `x`.
    pub fn raise(&self, x: &Name) -> JetVar {
        let mut index = self.index.clone();
        let pos = index.partition_point(|v| v <= x);
        index.insert(pos, x.clone());
        JetVar { base: self.base.clone(), index }
    }

    /// If `self` is a derivative of `other`, the remaining multi-index.
    pub fn descends_from(&self, other: &JetVar) -> Option<Vec<Name>> {
        if self.base != other.base || self.index.len() < other.index.len() {
            return None;
        }
        let mut rest = self.index.clone();
        for v in &other.index {
            let pos = rest.iter().position(|r| r == v)?;
            rest.remove(pos);
        }
        Some(rest)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Param(Name),
    Indep(Name),
    Jet(JetVar),
}

impl Symbol {
    pub fn param(s: &str) -> Self {
        Symbol::Param(name(s))
    }

    pub fn indep(s: &str) -> Self {
        Symbol::Indep(name(s))
    }

    pub fn jet(base: &str, index: &[&str]) -> Self {
        Symbol::Jet(JetVar::new(base, index))
    }

    pub fn as_jet(&self) -> Option<&JetVar> {
        match self {
            Symbol::Jet(j) => Some(j),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Ln,
    Sqrt,
}

impl Elementary {
    pub const ALL: [Elementary; 7] = [
        Elementary::Sin,
        Elementary::Cos,
        Elementary::Tan,
        Elementary::Atan,
        Elementary::Exp,
        Elementary::Ln,
        Elementary::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Tan => "tan",
            Elementary::Atan => "atan",
            Elementary::Exp => "exp",
            Elementary::Ln => "ln",
            Elementary::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Application of an uninterpreted function. `orders[k]` counts derivatives
/// taken with respect to argument `k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Opaque {
    pub name: Name,
    pub orders: Vec<u32>,
    pub args: Vec<Expr>,
}

impl Opaque {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn total_order(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// Same function differentiated once more in argument `k`.
    pub fn bump(&self, k: usize) -> Opaque {
        let mut orders = self.orders.clone();
        orders[k] += 1;
        Opaque { name: self.name.clone(), orders, args: self.args.clone() }
    }
}

/// Variant order fixes the canonical ordering of nodes: numbers first, then
/// symbols (parameters, independent variables, jet variables), compound
/// nodes, and function applications last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Num(Number),
    Sym(Symbol),
    Pow(Arc<Expr>, Arc<Expr>),
    Mul(Arc<[Expr]>),
    Add(Arc<[Expr]>),
    Func(Elementary, Arc<Expr>),
    Opaque(Arc<Opaque>),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Num(Number::int(0))
    }

    pub fn one() -> Expr {
        Expr::Num(Number::int(1))
    }

    pub fn int(v: i64) -> Expr {
        Expr::Num(Number::int(v))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Num(Number::ratio(n, d))
    }

    pub fn rational(q: BigRational) -> Expr {
        Expr::Num(Number::Rational(q))
    }

    pub fn decimal(v: f64) -> Expr {
        Expr::Num(Number::Decimal(v))
    }

    pub fn param(s: &str) -> Expr {
        Expr::Sym(Symbol::param(s))
    }

    pub fn indep(s: &str) -> Expr {
        Expr::Sym(Symbol::indep(s))
    }

    pub fn jet(base: &str, index: &[&str]) -> Expr {
        Expr::Sym(Symbol::jet(base, index))
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::Sym(s)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(n) if n.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Expr::Num(Number::Rational(q)) => Some(q),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Expr::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Expr::Num(_))
    }

    /// Canonical sum.
    pub fn add(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat = Vec::new();
        for t in terms {
            match t {
                Expr::Add(ts) => flat.extend(ts.iter().cloned()),
                t => flat.push(t),
            }
        }
        let mut rational = BigRational::zero();
        let mut decimal: Option<f64> = None;
        let mut groups: BTreeMap<Expr, BigRational> = BTreeMap::new();
        for t in flat {
            match t {
                Expr::Num(Number::Rational(q)) => rational += q,
                Expr::Num(Number::Decimal(d)) => *decimal.get_or_insert(0.0) += d,
                t => {
                    let (c, rest) = t.split_coefficient();
                    *groups.entry(rest).or_insert_with(BigRational::zero) += c;
                }
            }
        }
        let mut out = Vec::new();
        if !rational.is_zero() {
            out.push(Expr::rational(rational));
        }
        if let Some(d) = decimal {
            out.push(Expr::decimal(d));
        }
        for (rest, c) in groups {
            if c.is_zero() {
                continue;
            }
            out.push(Expr::with_coefficient(c, rest));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out.into()),
        }
    }

    /// Splits `c * rest` with `c` the exact rational coefficient.
    pub fn split_coefficient(&self) -> (BigRational, Expr) {
        match self {
            Expr::Num(Number::Rational(q)) => (q.clone(), Expr::one()),
            Expr::Mul(fs) => match fs.first() {
                Some(Expr::Num(Number::Rational(q))) => {
                    let rest: Vec<Expr> = fs[1..].to_vec();
                    let rest = if rest.len() == 1 {
                        rest.into_iter().next().unwrap()
                    } else {
                        Expr::Mul(rest.into())
                    };
                    (q.clone(), rest)
                }
                _ => (BigRational::one(), self.clone()),
            },
            _ => (BigRational::one(), self.clone()),
        }
    }

    fn with_coefficient(c: BigRational, rest: Expr) -> Expr {
        if c.is_one() {
            return rest;
        }
        if rest.is_one() {
            return Expr::rational(c);
        }
        let mut fs = vec![Expr::rational(c)];
        match rest {
            Expr::Mul(rs) => fs.extend(rs.iter().cloned()),
            r => fs.push(r),
        }
        Expr::Mul(fs.into())
    }

    /// Canonical product.
    pub fn mul(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut pending: Vec<Expr> = factors.into_iter().collect();
        let mut rational = BigRational::one();
        let mut decimal: Option<f64> = None;
        let mut groups: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
        let mut rounds = 0;
        loop {
            let mut next = Vec::new();
            for f in pending.drain(..) {
                match f {
                    Expr::Mul(fs) => next.extend(fs.iter().cloned()),
                    Expr::Num(Number::Rational(q)) => rational *= q,
                    Expr::Num(Number::Decimal(d)) => *decimal.get_or_insert(1.0) *= d,
                    Expr::Pow(b, e) => groups.entry((*b).clone()).or_default().push((*e).clone()),
                    f => groups.entry(f).or_default().push(Expr::one()),
                }
            }
            if next.is_empty() {
                break;
            }
            pending = next;
        }
        if rational.is_zero() {
            return Expr::zero();
        }
        let mut out: Vec<Expr> = Vec::new();
        loop {
            rounds += 1;
            let mut again = Vec::new();
            for (base, exps) in std::mem::take(&mut groups) {
                let e = if exps.len() == 1 { exps.into_iter().next().unwrap() } else { Expr::add(exps) };
                let p = Expr::pow(base.clone(), e);
                match p {
                    Expr::Num(Number::Rational(q)) => rational *= q,
                    Expr::Num(Number::Decimal(d)) => *decimal.get_or_insert(1.0) *= d,
                    Expr::Mul(_) => again.push(p),
                    Expr::Pow(ref b, _) if **b != base => again.push(p),
                    p => out.push(p),
                }
            }
            if again.is_empty() || rounds > 8 {
                out.extend(again);
                break;
            }
            // Re-group products produced by distributing powers.
            for f in out.drain(..).chain(again) {
                let parts: Vec<Expr> = match f {
                    Expr::Mul(fs) => fs.to_vec(),
                    f => vec![f],
                };
                for f in parts {
                    match f {
                        Expr::Num(Number::Rational(q)) => rational *= q,
                        Expr::Num(Number::Decimal(d)) => *decimal.get_or_insert(1.0) *= d,
                        Expr::Pow(b, e) => groups.entry((*b).clone()).or_default().push((*e).clone()),
                        f => groups.entry(f).or_default().push(Expr::one()),
                    }
                }
            }
        }
        if rational.is_zero() {
            return Expr::zero();
        }
        out.sort();
        let mut fs = Vec::with_capacity(out.len() + 2);
        match decimal {
            // Sign flips are exact, so a unit rational is absorbed by the decimal.
            Some(d) if rational.is_one() => fs.push(Expr::decimal(d)),
            Some(d) if (-rational.clone()).is_one() => fs.push(Expr::decimal(-d)),
            // The sign goes on the decimal, so that -c*d and c*(-d) coincide.
            Some(d) if rational.is_negative() => {
                fs.push(Expr::rational(-rational));
                fs.push(Expr::decimal(-d));
            }
            Some(d) => {
                fs.push(Expr::rational(rational));
                fs.push(Expr::decimal(d));
            }
            None if !rational.is_one() => fs.push(Expr::rational(rational)),
            None => {}
        }
        fs.extend(out);
        match fs.len() {
            0 => Expr::one(),
            1 => fs.pop().unwrap(),
            _ => Expr::Mul(fs.into()),
        }
    }

    /// Canonical power.
    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if exp.is_zero() {
            return Expr::one();
        }
        if exp.is_one() {
            return base;
        }
        if base.is_one() {
            return Expr::one();
        }
        match (&base, &exp) {
            (Expr::Num(Number::Rational(b)), Expr::Num(Number::Rational(e))) => {
                if b.is_zero() {
                    return if e.is_positive() { Expr::zero() } else { Expr::Pow(Arc::new(base), Arc::new(exp)) };
                }
                if let Some(v) = number::rational_pow(b, e) {
                    return Expr::rational(v);
                }
                return Expr::Pow(Arc::new(base), Arc::new(exp));
            }
            (Expr::Num(Number::Decimal(b)), Expr::Num(n)) => {
                let e = n.to_f64();
                let integral = matches!(n, Number::Rational(q) if q.is_integer());
                if *b >= 0.0 || integral {
                    let v = b.powf(e);
                    if v.is_finite() {
                        return Expr::decimal(v);
                    }
                }
                return Expr::Pow(Arc::new(base), Arc::new(exp));
            }
            _ => {}
        }
        let integral_exp = matches!(&exp, Expr::Num(Number::Rational(q)) if q.is_integer());
        match base {
            Expr::Pow(b, e) => {
                // (b^2)^(1/2) is |b|, not b
                let even = matches!(&*e, Expr::Num(Number::Rational(q)) if q.is_integer() && q.numer().is_even());
                if even && !integral_exp {
                    return Expr::Pow(Arc::new(Expr::Pow(b, e)), Arc::new(exp));
                }
                Expr::pow((*b).clone(), Expr::mul([(*e).clone(), exp]))
            }
            Expr::Mul(fs) => {
                let negative = matches!(fs.first(), Some(Expr::Num(n)) if n.is_negative());
                if negative && !integral_exp {
                    let (c, rest) = Expr::Mul(fs.clone()).split_coefficient();
                    if c == -BigRational::one() {
                        return Expr::Pow(Arc::new(Expr::Mul(fs)), Arc::new(exp));
                    }
                    // Keep the sign inside: (-c*rest)^e = c^e * (-rest)^e.
                    let rest = Expr::mul([Expr::int(-1), rest]);
                    let c = Expr::rational(-c);
                    return Expr::mul([Expr::pow(c, exp.clone()), Expr::Pow(Arc::new(rest), Arc::new(exp))]);
                }
                Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), exp.clone())))
            }
            Expr::Func(Elementary::Exp, a) => Expr::func(Elementary::Exp, Expr::mul([(*a).clone(), exp])),
            Expr::Func(Elementary::Sqrt, a) => Expr::pow((*a).clone(), Expr::mul([Expr::ratio(1, 2), exp])),
            base => Expr::Pow(Arc::new(base), Arc::new(exp)),
        }
    }

    pub fn func(f: Elementary, arg: Expr) -> Expr {
        match (f, &arg) {
            (Elementary::Exp, a) if a.is_zero() => Expr::one(),
            (Elementary::Ln, a) if a.is_one() => Expr::zero(),
            (Elementary::Sin | Elementary::Tan | Elementary::Atan, a) if a.is_zero() => Expr::zero(),
            (Elementary::Cos, a) if a.is_zero() => Expr::one(),
            (Elementary::Sqrt, Expr::Num(Number::Rational(q))) => {
                match number::rational_pow(q, &BigRational::new(1.into(), 2.into())) {
                    Some(v) => Expr::rational(v),
                    None => Expr::Func(f, Arc::new(arg)),
                }
            }
            (Elementary::Ln, Expr::Func(Elementary::Exp, inner)) => (**inner).clone(),
            (Elementary::Exp, Expr::Func(Elementary::Ln, inner)) => (**inner).clone(),
            _ => Expr::Func(f, Arc::new(arg)),
        }
    }

    pub fn opaque(name_: &str, orders: Vec<u32>, args: Vec<Expr>) -> Expr {
        Expr::Opaque(Arc::new(Opaque { name: name(name_), orders, args }))
    }

    /// Application of an underived opaque function.
    pub fn apply(name_: &str, args: Vec<Expr>) -> Expr {
        let orders = vec![0; args.len()];
        Expr::opaque(name_, orders, args)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::func(Elementary::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::func(Elementary::Cos, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::func(Elementary::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::func(Elementary::Ln, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::func(Elementary::Sqrt, a)
    }

    pub fn powi(self, n: i64) -> Expr {
        Expr::pow(self, Expr::int(n))
    }

    pub fn recip(self) -> Expr {
        Expr::pow(self, Expr::int(-1))
    }

    /// Rebuilds a node from (possibly rewritten) children through the
    /// canonical constructors.
    pub fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self {
            Expr::Num(_) | Expr::Sym(_) => self.clone(),
            Expr::Pow(b, e) => Expr::pow(f(b), f(e)),
            Expr::Mul(fs) => Expr::mul(fs.iter().map(&mut f)),
            Expr::Add(ts) => Expr::add(ts.iter().map(&mut f)),
            Expr::Func(g, a) => Expr::func(*g, f(a)),
            Expr::Opaque(o) => Expr::Opaque(Arc::new(Opaque {
                name: o.name.clone(),
                orders: o.orders.clone(),
                args: o.args.iter().map(&mut f).collect(),
            })),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Num(_) | Expr::Sym(_) => vec![],
            Expr::Pow(b, e) => vec![b, e],
            Expr::Mul(fs) | Expr::Add(fs) => fs.iter().collect(),
            Expr::Func(_, a) => vec![a],
            Expr::Opaque(o) => o.args.iter().collect(),
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Sym(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    pub fn jets(&self) -> BTreeSet<JetVar> {
        self.symbols().into_iter().filter_map(|s| match s {
            Symbol::Jet(j) => Some(j),
            _ => None,
        })
        .collect()
    }

    pub fn opaque_apps(&self) -> BTreeSet<Opaque> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Opaque(o) = e {
                out.insert((**o).clone());
            }
        });
        out
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Sym(t) => t == s,
            _ => self.children().into_iter().any(|c| c.contains_symbol(s)),
        }
    }

    pub fn contains(&self, pred: &impl Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.contains(pred))
    }

    /// Highest jet order present (0 when only order-0 jets, -1 when none).
    pub fn max_jet_order(&self) -> i32 {
        self.jets().iter().map(|j| j.order() as i32).max().unwrap_or(-1)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print(self))
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::Sym(s)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add([self, rhs])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::add([self, -rhs])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul([self, rhs])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::mul([self, rhs.recip()])
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(Number::Rational(q)) => Expr::rational(-q),
            Expr::Num(Number::Decimal(d)) => Expr::decimal(-d),
            e => Expr::mul([Expr::int(-1), e]),
        }
    }
}

impl<'a> ops::Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.clone() + rhs.clone()
    }
}

impl<'a> ops::Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.clone() - rhs.clone()
    }
}

impl<'a> ops::Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.clone() * rhs.clone()
    }
}

impl<'a> ops::Div<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        self.clone() / rhs.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::indep("x1")
    }

    #[test]
    fn identities_apply() {
        assert_eq!(x() + Expr::zero(), x());
        assert_eq!(x() * Expr::one(), x());
        assert_eq!(x() * Expr::zero(), Expr::zero());
        assert_eq!(Expr::pow(x(), Expr::one()), x());
        assert_eq!(Expr::pow(x(), Expr::zero()), Expr::one());
    }

    #[test]
    fn like_terms_and_powers_merge() {
        assert_eq!(x() + x(), Expr::int(2) * x());
        assert_eq!(x() * x(), x().powi(2));
        assert_eq!(x() - x(), Expr::zero());
        let r = Expr::param("r");
        let e = Expr::pow(x(), r.clone()) * Expr::pow(x(), Expr::int(1) - r);
        assert_eq!(e, x());
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        assert_eq!(Expr::ratio(1, 3) + Expr::ratio(1, 6), Expr::ratio(1, 2));
        assert_eq!(Expr::pow(Expr::int(4), Expr::ratio(1, 2)), Expr::int(2));
        assert!(matches!(Expr::pow(Expr::int(2), Expr::ratio(1, 2)), Expr::Pow(_, _)));
    }

    #[test]
    fn decimals_stay_apart_from_rationals() {
        let e = Expr::decimal(0.5) + Expr::ratio(1, 3);
        assert!(matches!(e, Expr::Add(_)));
        assert_eq!(Expr::decimal(0.5) + Expr::decimal(0.25), Expr::decimal(0.75));
        assert_eq!(-Expr::decimal(0.5), Expr::decimal(-0.5));
    }

    #[test]
    fn power_of_product_distributes() {
        let v = Expr::mul([Expr::pow(x(), Expr::ratio(-1, 3)), Expr::apply("phi1", vec![Expr::param("w")])]);
        let e = Expr::pow(v, Expr::param("r"));
        let expected = Expr::mul([
            Expr::pow(x(), Expr::mul([Expr::ratio(-1, 3), Expr::param("r")])),
            Expr::pow(Expr::apply("phi1", vec![Expr::param("w")]), Expr::param("r")),
        ]);
        assert_eq!(e, expected);
    }

    #[test]
    fn jet_raise_keeps_index_sorted() {
        let j = JetVar::new("u", &["x2"]).raise(&name("x1"));
        assert_eq!(j, JetVar::new("u", &["x1", "x2"]));
        assert_eq!(j.descends_from(&JetVar::new("u", &["x2"])), Some(vec![name("x1")]));
        assert_eq!(JetVar::new("u", &["x1"]).descends_from(&JetVar::new("u", &["x2"])), None);
    }
}
