use super::NumericsError;
use crate::expr::{Bindings, Compiled, EvalError, Expr, Symbol};

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> (f64, &[f64]) {
        (*self.xs.last().unwrap(), self.ys.last().unwrap())
    }

    /// Linear interpolation between samples.
    pub fn at(&self, x: f64, component: usize) -> f64 {
        let n = self.xs.len();
        let up = self.xs[n - 1] >= self.xs[0];
        let i = self
            .xs
            .windows(2)
            .position(|w| if up { x >= w[0] && x <= w[1] } else { x <= w[0] && x >= w[1] })
            .unwrap_or(if (x - self.xs[0]).abs() < (x - self.xs[n - 1]).abs() { 0 } else { n.saturating_sub(2) });
        let (x0, x1) = (self.xs[i], self.xs[(i + 1).min(n - 1)]);
        let (y0, y1) = (self.ys[i][component], self.ys[(i + 1).min(n - 1)][component]);
        if x1 == x0 {
            y0
        } else {
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

pub type Rhs<'a> = &'a dyn Fn(f64, &[f64]) -> Result<Vec<f64>, EvalError>;

/// Classical fourth-order Runge-Kutta with `steps` equal steps from `x0`
/// to `x1` (either direction).
pub fn rk4(f: Rhs, x0: f64, y0: &[f64], x1: f64, steps: usize) -> Result<Trajectory, NumericsError> {
    let h = (x1 - x0) / steps as f64;
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut out = Trajectory { xs: vec![x], ys: vec![y.clone()] };
    let err = |x: f64| move |s| NumericsError::Eval { at: vec![x], source: s };
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    for i in 0..steps {
        let k1 = f(x, &y).map_err(err(x))?;
        let k2 = f(x + h / 2.0, &axpy(&y, &k1, h / 2.0)).map_err(err(x))?;
        let k3 = f(x + h / 2.0, &axpy(&y, &k2, h / 2.0)).map_err(err(x))?;
        let k4 = f(x + h, &axpy(&y, &k3, h)).map_err(err(x))?;
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        x = x0 + (i + 1) as f64 * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::Eval { at: vec![x], source: EvalError::Domain("non-finite state".into()) });
        }
        out.xs.push(x);
        out.ys.push(y.clone());
    }
    Ok(out)
}

/// RK4 for `y_i' = rhs_i(x, y)` given symbolically. `consts` supplies
/// parameters and function samplers.
pub fn integrate_ode(rhs: &[Expr], x: &Symbol, ys: &[Symbol], consts: &Bindings, x0: f64, y0: &[f64], x1: f64, h: f64) -> Result<Trajectory, NumericsError> {
    let mut vars = vec![x.clone()];
    vars.extend(ys.iter().cloned());
    let progs: Vec<Compiled> = rhs
        .iter()
        .map(|e| Compiled::new(e, &vars, consts))
        .collect::<Result<_, _>>()
        .map_err(|s| NumericsError::Eval { at: vec![x0], source: s })?;
    let f = |t: f64, y: &[f64]| -> Result<Vec<f64>, EvalError> {
        let mut args = Vec::with_capacity(y.len() + 1);
        args.push(t);
        args.extend_from_slice(y);
        progs.iter().map(|p| p.eval(&args)).collect()
    };
    let steps = ((x1 - x0).abs() / h).round().max(1.0) as usize;
    rk4(&f, x0, y0, x1, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn exponential() {
        let f = |_: f64, y: &[f64]| Ok(vec![y[0]]);
        let t = rk4(&f, 0.0, &[1.0], 1.0, 1000).unwrap();
        assert!((t.last().1[0] - 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn symbolic_rhs_backwards() {
        let x = Symbol::indep("x");
        let y = Symbol::param("y");
        let t = integrate_ode(&[parse("-y").unwrap()], &x, &[y], &Bindings::new(), 1.0, &[1.0], 0.0, 1e-3).unwrap();
        assert!((t.last().1[0] - 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn domain_error_is_located() {
        let x = Symbol::indep("x");
        let y = Symbol::param("y");
        let r = integrate_ode(&[parse("ln(1 - x)").unwrap()], &x, &[y], &Bindings::new(), 0.0, &[0.0], 2.0, 0.1);
        assert!(matches!(r, Err(NumericsError::Eval { .. })));
    }
}
