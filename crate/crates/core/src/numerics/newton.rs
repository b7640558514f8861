use super::NumericsError;
use crate::expr::EvalError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 50 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Iterates, starting with the initial guess.
    pub history: Vec<f64>,
}

type Func<'a> = &'a dyn Fn(f64) -> Result<f64, EvalError>;

fn slope(f: Func, df: Option<Func>, x: f64) -> Result<f64, NumericsError> {
    let e = |s| NumericsError::Eval { at: vec![x], source: s };
    match df {
        Some(d) => d(x).map_err(e),
        None => {
            let h = 1e-6 * x.abs().max(1.0);
            Ok((f(x + h).map_err(e)? - f(x - h).map_err(e)?) / (2.0 * h))
        }
    }
}

/// Plain Newton iteration. Stops once `|f| < tol` and a further step no
/// longer improves the residual.
pub fn newton_solve(f: Func, df: Option<Func>, x0: f64, opts: NewtonOptions) -> Result<NewtonResult, NumericsError> {
    let mut x = x0;
    let mut history = vec![x];
    let mut fx = f(x).map_err(|s| NumericsError::Eval { at: vec![x], source: s })?;
    for it in 0..opts.max_iter {
        let d = slope(f, df, x)?;
        if d.abs() < 1e-14 {
            return Err(NumericsError::DerivativeZero(x));
        }
        let next = x - fx / d;
        let fn_ = f(next).map_err(|s| NumericsError::Eval { at: vec![next], source: s })?;
        if fx.abs() < opts.tol && fn_.abs() >= fx.abs() {
            return Ok(NewtonResult { root: x, residual: fx.abs(), iterations: it, history });
        }
        x = next;
        fx = fn_;
        history.push(x);
        if fx == 0.0 {
            return Ok(NewtonResult { root: x, residual: 0.0, iterations: it + 1, history });
        }
    }
    if fx.abs() < opts.tol {
        return Ok(NewtonResult { root: x, residual: fx.abs(), iterations: opts.max_iter, history });
    }
    Err(NumericsError::Divergence(opts.max_iter))
}

/// Newton iteration kept inside a sign-change bracket; steps that leave
/// the bracket or fail to shrink the residual are replaced by bisection.
pub fn safeguarded_newton(f: Func, df: Option<Func>, lo: f64, hi: f64, x0: f64, opts: NewtonOptions) -> Result<NewtonResult, NumericsError> {
    let ev = |x: f64| f(x).map_err(|s| NumericsError::Eval { at: vec![x], source: s });
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, fb) = (ev(a)?, ev(b)?);
    if fa * fb > 0.0 {
        return Err(NumericsError::NoBracket(a, b));
    }
    let mut x = if x0 > a && x0 < b { x0 } else { 0.5 * (a + b) };
    let mut fx = ev(x)?;
    let mut history = vec![x];
    for it in 0..opts.max_iter * 4 {
        if fx == 0.0 {
            return Ok(NewtonResult { root: x, residual: 0.0, iterations: it, history });
        }
        if (fa < 0.0) == (fx < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let d = slope(f, df, x)?;
        let mut next = if d != 0.0 { x - fx / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let fnext = ev(next)?;
        if fx.abs() < opts.tol && (fnext.abs() >= fx.abs() || next == x) {
            return Ok(NewtonResult { root: x, residual: fx.abs(), iterations: it, history });
        }
        x = next;
        fx = fnext;
        history.push(x);
        if b - a < 1e-15 * x.abs().max(1.0) && fx.abs() < opts.tol {
            return Ok(NewtonResult { root: x, residual: fx.abs(), iterations: it + 1, history });
        }
    }
    if fx.abs() < opts.tol {
        return Ok(NewtonResult { root: x, residual: fx.abs(), iterations: opts.max_iter, history });
    }
    Err(NumericsError::Divergence(opts.max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_four() {
        let f = |x: f64| Ok(x * x - 4.0);
        let df = |x: f64| Ok(2.0 * x);
        let r = newton_solve(&f, Some(&df), 3.0, NewtonOptions::default()).unwrap();
        assert!((r.root - 2.0).abs() < 1e-12);
        let r = newton_solve(&f, None, 3.0, NewtonOptions::default()).unwrap();
        assert!((r.root - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_start_is_an_error() {
        let f = |x: f64| Ok(x * x - 4.0);
        let df = |x: f64| Ok(2.0 * x);
        assert_eq!(newton_solve(&f, Some(&df), 0.0, NewtonOptions::default()), Err(NumericsError::DerivativeZero(0.0)));
    }

    #[test]
    fn bracketed() {
        let f = |x: f64| Ok(x.cos() - x);
        let r = safeguarded_newton(&f, None, 0.0, 1.0, 0.0, NewtonOptions::default()).unwrap();
        assert!((r.root.cos() - r.root).abs() < 1e-12);
        assert!(matches!(safeguarded_newton(&f, None, 2.0, 3.0, 2.5, NewtonOptions::default()), Err(NumericsError::NoBracket(..))));
    }
}
