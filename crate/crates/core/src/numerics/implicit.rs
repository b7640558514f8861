use std::sync::Mutex;

use super::{newton_solve, safeguarded_newton, NewtonOptions, NewtonResult, NumericsError};
use crate::expr::{differentiate, Bindings, Compiled, EvalError, Expr, Symbol};

/// A field defined through an auxiliary unknown `theta`: at each point the
/// relation `g(theta, x) = 0` is solved by Newton's method and the field is
/// `value(theta, x)`. Successive solves are warm-started from the previous
/// root so that evaluation stays on one branch.
pub struct ImplicitSolution {
    pub vars: Vec<Symbol>,
    pub unknown: Symbol,
    pub relation: Expr,
    pub value: Expr,
    pub newton: NewtonOptions,
    g: Compiled,
    dg: Compiled,
    val: Compiled,
    bracket: Option<(Compiled, Compiled)>,
    guess: Option<Compiled>,
    last: Mutex<Option<f64>>,
}

impl ImplicitSolution {
    pub fn new(vars: Vec<Symbol>, unknown: Symbol, relation: Expr, value: Expr, consts: &Bindings) -> Result<Self, EvalError> {
        let mut all = vec![unknown.clone()];
        all.extend(vars.iter().cloned());
        let dg = differentiate(&relation, &unknown);
        Ok(ImplicitSolution {
            g: Compiled::new(&relation, &all, consts)?,
            dg: Compiled::new(&dg, &all, consts)?,
            val: Compiled::new(&value, &all, consts)?,
            vars,
            unknown,
            relation,
            value,
            newton: NewtonOptions::default(),
            bracket: None,
            guess: None,
            last: Mutex::new(None),
        })
    }

    /// Bracket `[lo(x), hi(x)]` containing exactly the wanted root.
    pub fn with_bracket(mut self, lo: &Expr, hi: &Expr, consts: &Bindings) -> Result<Self, EvalError> {
        self.bracket = Some((Compiled::new(lo, &self.vars, consts)?, Compiled::new(hi, &self.vars, consts)?));
        Ok(self)
    }

    pub fn with_guess(mut self, guess: &Expr, consts: &Bindings) -> Result<Self, EvalError> {
        self.guess = Some(Compiled::new(guess, &self.vars, consts)?);
        Ok(self)
    }

    pub fn with_newton(mut self, opts: NewtonOptions) -> Self {
        self.newton = opts;
        self
    }

    fn args(theta: f64, p: &[f64]) -> Vec<f64> {
        let mut a = vec![theta];
        a.extend_from_slice(p);
        a
    }

    pub fn relation_at(&self, theta: f64, p: &[f64]) -> Result<f64, EvalError> {
        self.g.eval(&Self::args(theta, p))
    }

    pub fn root(&self, p: &[f64]) -> Result<NewtonResult, NumericsError> {
        let f = |t: f64| self.g.eval(&Self::args(t, p));
        let df = |t: f64| self.dg.eval(&Self::args(t, p));
        let ev = |c: &Compiled| c.eval(p).map_err(|s| NumericsError::Eval { at: p.to_vec(), source: s });
        let last = *self.last.lock().unwrap();
        let r = match &self.bracket {
            Some((lo, hi)) => {
                let (a, b) = (ev(lo)?, ev(hi)?);
                // endpoints may sit on the singular locus; pull them in
                let w = (b - a).abs();
                let (a, b) = (a.min(b) + 1e-12 * w, a.max(b) - 1e-12 * w);
                let x0 = match (last, &self.guess) {
                    (Some(l), _) if l > a && l < b => l,
                    (_, Some(g)) => ev(g)?,
                    _ => 0.5 * (a + b),
                };
                safeguarded_newton(&f, Some(&df), a, b, x0, self.newton)?
            }
            None => {
                let x0 = match (last, &self.guess) {
                    (Some(l), _) => l,
                    (_, Some(g)) => ev(g)?,
                    _ => 0.0,
                };
                newton_solve(&f, Some(&df), x0, self.newton)?
            }
        };
        *self.last.lock().unwrap() = Some(r.root);
        Ok(r)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        let r = self.root(p).map_err(|e| match e {
            NumericsError::Eval { source, .. } => source,
            other => EvalError::Domain(other.to_string()),
        })?;
        self.val.eval(&Self::args(r.root, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn circle_branch() {
        let b = Bindings::new();
        let s = ImplicitSolution::new(vec![Symbol::indep("x")], Symbol::param("y"), parse("x^2 + y^2 - 1").unwrap(), parse("y").unwrap(), &b)
            .unwrap()
            .with_bracket(&parse("0").unwrap(), &parse("1.5").unwrap(), &b)
            .unwrap();
        let v = s.eval(&[0.6]).unwrap();
        assert!((v - 0.8).abs() < 1e-12);
    }
}
