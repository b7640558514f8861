use std::collections::BTreeMap;
use std::sync::Arc;

use super::{differentiate, Expr, Name, Opaque, Symbol};

/// Simultaneous substitution of symbols.
pub fn substitute(e: &Expr, map: &BTreeMap<Symbol, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Num(_) => e.clone(),
        Expr::Sym(s) => map.get(s).cloned().unwrap_or_else(|| e.clone()),
        e => e.map_children(|c| substitute(c, map)),
    }
}

/// Replaces whole subexpressions, outermost matches first.
pub fn replace(e: &Expr, map: &BTreeMap<Expr, Expr>) -> Expr {
    if let Some(r) = map.get(e) {
        return r.clone();
    }
    match e {
        Expr::Num(_) | Expr::Sym(_) => e.clone(),
        e => e.map_children(|c| replace(c, map)),
    }
}

/// Interpretation of an opaque function.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionDef {
    /// `f(params) = body`.
    Body { params: Vec<Symbol>, body: Expr },
    /// Unary `f` known only through `f' = derivative`; underived
    /// applications stay opaque.
    Antiderivative { param: Symbol, derivative: Expr },
}

impl FunctionDef {
    pub fn body(params: Vec<Symbol>, body: Expr) -> Self {
        FunctionDef::Body { params, body }
    }

    pub fn antiderivative(param: Symbol, derivative: Expr) -> Self {
        FunctionDef::Antiderivative { param, derivative }
    }

    fn apply(&self, o: &Opaque, args: Vec<Expr>) -> Option<Expr> {
        match self {
            FunctionDef::Body { params, body } => {
                if params.len() != args.len() {
                    return None;
                }
                let mut d = body.clone();
                for (p, n) in params.iter().zip(&o.orders) {
                    for _ in 0..*n {
                        d = differentiate(&d, p);
                    }
                }
                let map: BTreeMap<Symbol, Expr> = params.iter().cloned().zip(args).collect();
                Some(substitute(&d, &map))
            }
            FunctionDef::Antiderivative { param, derivative } => {
                if args.len() != 1 || o.orders[0] == 0 {
                    return None;
                }
                let mut d = derivative.clone();
                for _ in 1..o.orders[0] {
                    d = differentiate(&d, param);
                }
                let map = BTreeMap::from([(param.clone(), args.into_iter().next().unwrap())]);
                Some(substitute(&d, &map))
            }
        }
    }
}

/// Replaces applications of defined opaque functions (and their derivatives)
/// by the corresponding expressions.
pub fn substitute_functions(e: &Expr, defs: &BTreeMap<Name, FunctionDef>) -> Expr {
    if defs.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Num(_) | Expr::Sym(_) => e.clone(),
        Expr::Opaque(o) => {
            let args: Vec<Expr> = o.args.iter().map(|a| substitute_functions(a, defs)).collect();
            if let Some(r) = defs.get(&o.name).and_then(|d| d.apply(o, args.clone())) {
                return r;
            }
            Expr::Opaque(Arc::new(Opaque { name: o.name.clone(), orders: o.orders.clone(), args }))
        }
        e => e.map_children(|c| substitute_functions(c, defs)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{name, parse};
    use super::*;

    #[test]
    fn simultaneous() {
        let e = parse("x + t").unwrap();
        let map = BTreeMap::from([(Symbol::indep("x"), parse("t").unwrap()), (Symbol::indep("t"), parse("x").unwrap())]);
        assert_eq!(substitute(&e, &map), e);
    }

    #[test]
    fn function_bodies_and_derivatives() {
        let z = Symbol::param("z");
        let defs = BTreeMap::from([
            (name("F"), FunctionDef::body(vec![z.clone()], parse("z^3").unwrap())),
            (name("H"), FunctionDef::antiderivative(z.clone(), parse("cos(z)").unwrap())),
        ]);
        let e = parse("F''(x) + H(x) + H''(x)").unwrap();
        assert_eq!(substitute_functions(&e, &defs), parse("6*x + H(x) - sin(x)").unwrap());
    }
}
