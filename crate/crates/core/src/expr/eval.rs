use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::{differentiate, substitute, Elementary, Expr, Name, Number, Symbol};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("no sampler for function `{0}`")]
    UnknownFunction(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
}

impl EvalError {
    /// Failures caused by the sample point rather than by the expression.
    pub fn is_domain(&self) -> bool {
        matches!(self, EvalError::Domain(_) | EvalError::DivisionByZero)
    }
}

/// Numeric stand-in for an opaque function: returns the partial derivative
/// of the given orders at `args`.
pub trait OpaqueSampler: Send + Sync {
    fn sample(&self, orders: &[u32], args: &[f64]) -> Result<f64, EvalError>;
}

type SampleFn = dyn Fn(&[u32], &[f64]) -> Result<f64, EvalError> + Send + Sync;

/// Sampler backed by a closure.
#[derive(Clone)]
pub struct FnSampler(Arc<SampleFn>);

impl FnSampler {
    pub fn new(f: impl Fn(&[u32], &[f64]) -> Result<f64, EvalError> + Send + Sync + 'static) -> Self {
        FnSampler(Arc::new(f))
    }
}

impl OpaqueSampler for FnSampler {
    fn sample(&self, orders: &[u32], args: &[f64]) -> Result<f64, EvalError> {
        (self.0)(orders, args)
    }
}

/// Sampler given by a closed-form body; derivatives are taken symbolically
/// and cached.
pub struct ExprFunction {
    params: Vec<Symbol>,
    body: Expr,
    env: Bindings,
    cache: Mutex<HashMap<Vec<u32>, Expr>>,
}

impl ExprFunction {
    pub fn new(params: Vec<Symbol>, body: Expr) -> Self {
        ExprFunction { params, body, env: Bindings::new(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn with_env(mut self, env: Bindings) -> Self {
        self.env = env;
        self
    }

    fn derivative(&self, orders: &[u32]) -> Expr {
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(orders.to_vec())
            .or_insert_with(|| {
                let mut d = self.body.clone();
                for (p, n) in self.params.iter().zip(orders) {
                    for _ in 0..*n {
                        d = differentiate(&d, p);
                    }
                }
                d
            })
            .clone()
    }
}

impl OpaqueSampler for ExprFunction {
    fn sample(&self, orders: &[u32], args: &[f64]) -> Result<f64, EvalError> {
        let d = self.derivative(orders);
        let mut env = self.env.clone();
        for (p, a) in self.params.iter().zip(args) {
            env.set(p.clone(), *a);
        }
        evaluate(&d, &env)
    }
}

/// Numeric values for symbols plus samplers for opaque functions.
#[derive(Clone, Default)]
pub struct Bindings {
    values: BTreeMap<Symbol, f64>,
    functions: BTreeMap<Name, Arc<dyn OpaqueSampler>>,
}

impl fmt::Debug for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bindings")
            .field("values", &self.values)
            .field("functions", &self.functions.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: Symbol, v: f64) -> &mut Self {
        self.values.insert(s, v);
        self
    }

    pub fn with(mut self, s: Symbol, v: f64) -> Self {
        self.values.insert(s, v);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.values.get(s).copied()
    }

    pub fn set_function(&mut self, name: &str, f: Arc<dyn OpaqueSampler>) -> &mut Self {
        self.functions.insert(super::name(name), f);
        self
    }

    pub fn function(&self, name: &str) -> Option<&Arc<dyn OpaqueSampler>> {
        self.functions.get(name)
    }

    pub fn values(&self) -> impl Iterator<Item = (&Symbol, f64)> {
        self.values.iter().map(|(s, v)| (s, *v))
    }

    pub fn extend(&mut self, other: &Bindings) {
        self.values.extend(other.values.iter().map(|(k, v)| (k.clone(), *v)));
        self.functions.extend(other.functions.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
}

fn pow(b: f64, e: f64) -> Result<f64, EvalError> {
    if b == 0.0 && e < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    let v = if e.fract() == 0.0 && e.abs() <= 64.0 {
        b.powi(e as i32)
    } else {
        if b < 0.0 {
            return Err(EvalError::Domain(format!("{b}^{e}")));
        }
        b.powf(e)
    };
    finite(v, "power")
}

fn finite(v: f64, what: &str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(format!("{what} is not finite")))
    }
}

pub(crate) fn elementary(f: Elementary, a: f64) -> Result<f64, EvalError> {
    let v = match f {
        Elementary::Sin => a.sin(),
        Elementary::Cos => a.cos(),
        Elementary::Tan => a.tan(),
        Elementary::Atan => a.atan(),
        Elementary::Exp => a.exp(),
        Elementary::Ln => {
            if a <= 0.0 {
                return Err(EvalError::Domain(format!("ln({a})")));
            }
            a.ln()
        }
        Elementary::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::Domain(format!("sqrt({a})")));
            }
            a.sqrt()
        }
    };
    finite(v, f.name())
}

/// Evaluates on the real positive branch; domain violations are errors.
pub fn evaluate(e: &Expr, b: &Bindings) -> Result<f64, EvalError> {
    match e {
        Expr::Num(n) => Ok(n.to_f64()),
        Expr::Sym(s) => b.get(s).ok_or_else(|| EvalError::Unbound(Expr::Sym(s.clone()).to_string())),
        Expr::Add(ts) => {
            let mut acc = 0.0;
            for t in ts.iter() {
                acc += evaluate(t, b)?;
            }
            Ok(acc)
        }
        Expr::Mul(fs) => {
            let mut acc = 1.0;
            for f in fs.iter() {
                acc *= evaluate(f, b)?;
            }
            Ok(acc)
        }
        Expr::Pow(x, y) => pow(evaluate(x, b)?, evaluate(y, b)?),
        Expr::Func(f, a) => elementary(*f, evaluate(a, b)?),
        Expr::Opaque(o) => {
            let sampler = b.function(&o.name).ok_or_else(|| EvalError::UnknownFunction(o.name.to_string()))?;
            let args = o.args.iter().map(|a| evaluate(a, b)).collect::<Result<Vec<_>, _>>()?;
            finite(sampler.sample(&o.orders, &args)?, &o.name)
        }
    }
}

#[derive(Clone)]
enum Op {
    Const(f64),
    Var(usize),
    Add(usize),
    Mul(usize),
    Pow,
    Func(Elementary),
    Opaque(usize),
}

/// Expression flattened to a stack program over a fixed list of variables,
/// for repeated evaluation on grids.
#[derive(Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    nvars: usize,
    calls: Vec<(Arc<dyn OpaqueSampler>, Vec<u32>, usize, Name)>,
}

impl Compiled {
    /// Symbols in `vars` become inputs; every other symbol is read from
    /// `consts` now.
    pub fn new(e: &Expr, vars: &[Symbol], consts: &Bindings) -> Result<Self, EvalError> {
        let mut c = Compiled { ops: Vec::new(), nvars: vars.len(), calls: Vec::new() };
        let mut known: BTreeMap<Symbol, Expr> = BTreeMap::new();
        for (s, v) in consts.values() {
            if !vars.contains(s) {
                known.insert(s.clone(), Expr::Num(Number::Decimal(v)));
            }
        }
        let e = substitute(e, &known);
        c.emit(&e, vars, consts)?;
        Ok(c)
    }

    fn emit(&mut self, e: &Expr, vars: &[Symbol], consts: &Bindings) -> Result<(), EvalError> {
        match e {
            Expr::Num(n) => self.ops.push(Op::Const(n.to_f64())),
            Expr::Sym(s) => {
                let i = vars.iter().position(|v| v == s).ok_or_else(|| EvalError::Unbound(e.to_string()))?;
                self.ops.push(Op::Var(i));
            }
            Expr::Add(ts) => {
                for t in ts.iter() {
                    self.emit(t, vars, consts)?;
                }
                self.ops.push(Op::Add(ts.len()));
            }
            Expr::Mul(fs) => {
                for f in fs.iter() {
                    self.emit(f, vars, consts)?;
                }
                self.ops.push(Op::Mul(fs.len()));
            }
            Expr::Pow(b, x) => {
                self.emit(b, vars, consts)?;
                self.emit(x, vars, consts)?;
                self.ops.push(Op::Pow);
            }
            Expr::Func(f, a) => {
                self.emit(a, vars, consts)?;
                self.ops.push(Op::Func(*f));
            }
            Expr::Opaque(o) => {
                let sampler =
                    consts.function(&o.name).ok_or_else(|| EvalError::UnknownFunction(o.name.to_string()))?.clone();
                for a in &o.args {
                    self.emit(a, vars, consts)?;
                }
                self.calls.push((sampler, o.orders.clone(), o.args.len(), o.name.clone()));
                self.ops.push(Op::Opaque(self.calls.len() - 1));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(x.len(), self.nvars);
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for op in &self.ops {
            match op {
                Op::Const(v) => stack.push(*v),
                Op::Var(i) => stack.push(x[*i]),
                Op::Add(n) => {
                    let at = stack.len() - n;
                    let s = stack[at..].iter().sum();
                    stack.truncate(at);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let at = stack.len() - n;
                    let p = stack[at..].iter().product();
                    stack.truncate(at);
                    stack.push(p);
                }
                Op::Pow => {
                    let e = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    stack.push(pow(b, e)?);
                }
                Op::Func(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(elementary(*f, a)?);
                }
                Op::Opaque(k) => {
                    let (sampler, orders, n, name) = &self.calls[*k];
                    let at = stack.len() - n;
                    let v = sampler.sample(orders, &stack[at..])?;
                    stack.truncate(at);
                    stack.push(finite(v, name)?);
                }
            }
        }
        Ok(stack.pop().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn domain_errors() {
        let b = Bindings::new().with(Symbol::indep("x"), -1.0);
        assert!(evaluate(&parse("ln(x)").unwrap(), &b).unwrap_err().is_domain());
        assert!(evaluate(&parse("x^(1/2)").unwrap(), &b).unwrap_err().is_domain());
        assert_eq!(evaluate(&parse("x^3").unwrap(), &b).unwrap(), -1.0);
        let z = Bindings::new().with(Symbol::indep("x"), 0.0);
        assert_eq!(evaluate(&parse("1/x").unwrap(), &z).unwrap_err(), EvalError::DivisionByZero);
        assert!(matches!(evaluate(&parse("y").unwrap(), &z).unwrap_err(), EvalError::Unbound(_)));
    }

    #[test]
    fn samplers_and_tape_agree() {
        let mut b = Bindings::new().with(Symbol::param("a"), 2.0);
        b.set_function("F", Arc::new(ExprFunction::new(vec![Symbol::param("z")], parse("sin(z)").unwrap())));
        let e = parse("a*F(x) + F''(x^2)").unwrap();
        let x = Symbol::indep("x");
        let direct = evaluate(&e, &b.clone().with(x.clone(), 0.7)).unwrap();
        let expected = 2.0 * 0.7f64.sin() - 0.49f64.sin();
        assert!((direct - expected).abs() < 1e-15);
        let tape = Compiled::new(&e, &[x], &b).unwrap();
        assert!((tape.eval(&[0.7]).unwrap() - expected).abs() < 1e-15);
    }
}
