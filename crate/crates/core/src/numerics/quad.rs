use std::sync::{Arc, Mutex};

use super::NumericsError;
use crate::expr::{EvalError, OpaqueSampler};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 2_000_000;

struct State<'a> {
    f: &'a dyn Fn(f64) -> Result<f64, EvalError>,
    evals: usize,
    err: f64,
}

impl State<'_> {
    fn eval(&mut self, x: f64) -> Result<f64, NumericsError> {
        self.evals += 1;
        if self.evals > MAX_EVALS {
            return Err(NumericsError::QuadratureBudget);
        }
        (self.f)(x).map_err(|s| NumericsError::Eval { at: vec![x], source: s })
    }

    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, NumericsError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.eval(lm)?, self.eval(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-14 {
            self.err += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(NumericsError::QuadratureBudget);
        }
        Ok(self.step(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)? + self.step(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?)
    }
}

/// Adaptive Simpson rule with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64, EvalError>, a: f64, b: f64, tol: f64) -> Result<Quadrature, NumericsError> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    let mut s = State { f, evals: 0, err: 0.0 };
    let (fa, fb) = (s.eval(a)?, s.eval(b)?);
    let m = 0.5 * (a + b);
    let fm = s.eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = s.step(a, b, fa, fm, fb, whole, tol, 0)?;
    Ok(Quadrature { value, error_estimate: s.err, evaluations: s.evals })
}

type Integrand = dyn Fn(f64) -> Result<f64, EvalError> + Send + Sync;

/// `x -> integral of f from a to x`, with cumulative values memoized on
/// knots spaced `step` apart. Usable as the sampler of a unary function
/// whose derivative is `f`.
pub struct IntegralSampler {
    f: Arc<Integrand>,
    a: f64,
    step: f64,
    tol: f64,
    knots: Mutex<(Vec<f64>, Vec<f64>)>,
}

impl IntegralSampler {
    pub fn new(f: impl Fn(f64) -> Result<f64, EvalError> + Send + Sync + 'static, a: f64, step: f64, tol: f64) -> Self {
        IntegralSampler { f: Arc::new(f), a, step, tol, knots: Mutex::new((vec![0.0], vec![0.0])) }
    }

    fn quad(&self, lo: f64, hi: f64) -> Result<f64, EvalError> {
        let f = self.f.clone();
        let g = move |x: f64| f(x);
        adaptive_simpson(&g, lo, hi, self.tol).map(|q| q.value).map_err(|e| match e {
            NumericsError::Eval { source, .. } => source,
            other => EvalError::Domain(other.to_string()),
        })
    }

    /// Cumulative value at knot `k` (negative `k` goes left of `a`).
    fn knot(&self, k: i64) -> Result<f64, EvalError> {
        let mut g = self.knots.lock().unwrap();
        let (right, left) = &mut *g;
        let (store, dir) = if k >= 0 { (right, 1.0) } else { (left, -1.0) };
        let n = k.unsigned_abs() as usize;
        while store.len() <= n {
            let i = store.len() - 1;
            let lo = self.a + dir * i as f64 * self.step;
            let hi = self.a + dir * (i + 1) as f64 * self.step;
            let v = store[i] + self.quad(lo, hi)?;
            store.push(v);
        }
        Ok(store[n])
    }

    pub fn integral(&self, x: f64) -> Result<f64, EvalError> {
        let k = ((x - self.a) / self.step).trunc() as i64;
        let base = self.knot(k)?;
        let from = self.a + k as f64 * self.step;
        Ok(base + self.quad(from, x)?)
    }
}

impl OpaqueSampler for IntegralSampler {
    fn sample(&self, orders: &[u32], args: &[f64]) -> Result<f64, EvalError> {
        match orders {
            [0] => self.integral(args[0]),
            [1] => (self.f)(args[0]),
            [n] => {
                // higher derivatives by central differences of f
                let h = 1e-4;
                let x = args[0];
                let f = &self.f;
                match n {
                    2 => Ok((f(x + h)? - f(x - h)?) / (2.0 * h)),
                    _ => Err(EvalError::Domain(format!("derivative order {n} of an integral"))),
                }
            }
            _ => Err(EvalError::Domain("integral sampler is unary".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let q = adaptive_simpson(&|x| Ok(x * x), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() < 1e-12);
        let q = adaptive_simpson(&|x: f64| Ok(x.sin()), 0.0, 1.0, 1e-12).unwrap();
        let exact = 1.0 - 1f64.cos();
        assert!((q.value - exact).abs() < 1e-12);
        assert!((q.value - exact).abs() <= q.error_estimate.max(1e-15));
    }

    #[test]
    fn memoized_cumulative_integral() {
        let s = IntegralSampler::new(|x: f64| Ok(x.sin()), 0.0, 0.25, 1e-12);
        let h1 = (-s.integral(1.0).unwrap()).exp();
        assert!((h1 - (1f64.cos() - 1.0).exp()).abs() < 1e-12);
        assert!((s.integral(-0.6).unwrap() - (1.0 - 0.6f64.cos())).abs() < 1e-12);
        assert!((s.sample(&[1], &[0.3]).unwrap() - 0.3f64.sin()).abs() < 1e-15);
    }
}
