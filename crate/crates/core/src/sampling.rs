//! Seeded random evaluation of residuals that did not simplify to zero.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{evaluate, Bindings, Expr, ExprFunction, Fraction, Name, Symbol};

pub const DEFAULT_SEED: u64 = 20240611;

#[derive(Clone, Debug)]
pub struct SampleOptions {
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub half_width: f64,
    /// One sampling run per instance; each fixes some parameters.
    pub instances: Vec<Bindings>,
    /// Points where any of these is not strictly positive are rejected.
    pub constraints: Vec<Expr>,
    pub min_denominator: f64,
    /// Divide each value by the largest of 1 and the magnitudes of the
    /// residual's top-level summands, so that rounding in large
    /// cancelling terms is not mistaken for a nonzero residual.
    pub relative: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            seed: DEFAULT_SEED,
            samples: 200,
            tolerance: 1e-10,
            half_width: 2.0,
            instances: vec![Bindings::new()],
            constraints: Vec::new(),
            min_denominator: 1e-3,
            relative: false,
        }
    }
}

impl SampleOptions {
    pub fn with_instances(mut self, instances: Vec<Bindings>) -> Self {
        self.instances = instances;
        self
    }

    pub fn with_constraint(mut self, c: Expr) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub max_abs: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub worst: Option<Vec<(String, f64)>>,
}

impl SampleOutcome {
    pub fn passes(&self, opts: &SampleOptions) -> bool {
        self.accepted >= opts.samples * opts.instances.len().max(1) && self.max_abs < opts.tolerance
    }
}

/// A smooth test function `c0 + d.z + c1 sin(a1 w.z + b1) + c2 cos(a2 w.z + b2)`
/// with seeded coefficients.
pub fn random_function(rng: &mut ChaCha8Rng, arity: usize) -> ExprFunction {
    let params: Vec<Symbol> = (0..arity).map(|i| Symbol::param(&format!("z{}", i + 1))).collect();
    let mut coef = |lo: f64, hi: f64| Expr::decimal(rng.gen_range(lo..hi));
    let lin: Vec<Expr> = params.iter().map(|p| coef(-1.0, 1.0) * Expr::sym(p.clone())).collect();
    let w: Vec<Expr> = params.iter().map(|p| coef(0.5, 1.5) * Expr::sym(p.clone())).collect();
    let s = Expr::add(w);
    let body = Expr::add([
        coef(-1.0, 1.0),
        Expr::add(lin),
        coef(-1.0, 1.0) * Expr::sin(coef(0.5, 1.5) * s.clone() + coef(-1.0, 1.0)),
        coef(-1.0, 1.0) * Expr::cos(coef(0.5, 1.5) * s + coef(-1.0, 1.0)),
    ]);
    ExprFunction::new(params, body)
}

fn opaque_names(es: &[Expr]) -> BTreeSet<(Name, usize)> {
    let mut out = BTreeSet::new();
    for e in es {
        for o in e.opaque_apps() {
            out.insert((o.name.clone(), o.args.len()));
        }
    }
    out
}

/// Evaluates every residual at random points and records the largest
/// magnitude. Unbound symbols are drawn from `[-w, w]`; unknown functions
/// get random smooth stand-ins.
pub fn sample_residuals(residuals: &[Expr], opts: &SampleOptions) -> SampleOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let dens: Vec<Expr> = residuals.iter().map(|r| Fraction::from_expr(r).denominator_expr()).collect();
    let mut out = SampleOutcome { max_abs: 0.0, accepted: 0, rejected: 0, worst: None };
    let mut all: Vec<Expr> = residuals.to_vec();
    all.extend(opts.constraints.iter().cloned());
    let instances = if opts.instances.is_empty() { vec![Bindings::new()] } else { opts.instances.clone() };
    for inst in &instances {
        let mut base = inst.clone();
        for (n, arity) in opaque_names(&all) {
            if base.function(&n).is_none() {
                base.set_function(&n, Arc::new(random_function(&mut rng, arity)));
            }
        }
        let free: Vec<Symbol> = all
            .iter()
            .flat_map(|e| e.symbols())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|s| base.get(s).is_none())
            .collect();
        let mut got = 0;
        let mut tries = 0;
        while got < opts.samples && tries < opts.samples * 20 {
            tries += 1;
            let mut b = base.clone();
            for s in &free {
                b.set(s.clone(), rng.gen_range(-opts.half_width..opts.half_width));
            }
            let ok_constraints = opts.constraints.iter().all(|c| matches!(evaluate(c, &b), Ok(v) if v > 0.0));
            let ok_dens = dens.iter().all(|d| matches!(evaluate(d, &b), Ok(v) if v.abs() > opts.min_denominator));
            if !ok_constraints || !ok_dens {
                out.rejected += 1;
                continue;
            }
            let vals: Result<Vec<f64>, crate::expr::EvalError> = residuals
                .iter()
                .map(|r| {
                    let v = evaluate(r, &b)?;
                    if !opts.relative {
                        return Ok(v);
                    }
                    let mut scale: f64 = 1.0;
                    if let Expr::Add(ts) = r {
                        for t in ts.iter() {
                            scale = scale.max(evaluate(t, &b)?.abs());
                        }
                    }
                    Ok(v / scale)
                })
                .collect();
            match vals {
                Ok(vs) if vs.iter().all(|v| v.is_finite()) => {
                    got += 1;
                    out.accepted += 1;
                    let m = vs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if m > out.max_abs || out.worst.is_none() {
                        out.max_abs = out.max_abs.max(m);
                        out.worst = Some(free.iter().map(|s| (Expr::sym(s.clone()).to_string(), b.get(s).unwrap())).collect());
                    }
                }
                _ => out.rejected += 1,
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn identities_vanish_and_others_do_not() {
        let opts = SampleOptions::default();
        let ok = sample_residuals(&[parse("F(x)^2 - F(x)*F(x) + sin(x)^2 + cos(x)^2 - 1").unwrap()], &opts);
        assert!(ok.passes(&opts), "{ok:?}");
        let bad = sample_residuals(&[parse("F'(x) - F(x)").unwrap()], &opts);
        assert!(!bad.passes(&opts));
    }

    #[test]
    fn deterministic() {
        let opts = SampleOptions::default();
        let e = [parse("sqrt(x) + F(t)/x").unwrap()];
        assert_eq!(sample_residuals(&e, &opts), sample_residuals(&e, &opts));
    }
}
