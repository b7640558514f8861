mod common;

use std::collections::BTreeMap;

use common::p;
use proptest::prelude::*;
use symverify::expr::{name, Bindings, Compiled, EvalError, Name, Symbol};
use symverify::numerics::{adaptive_simpson, fd_residual, integrate_ode, newton_solve, rk4, Axis, Grid, NewtonOptions};

fn rk4_error(steps: usize) -> f64 {
    let f = |_: f64, y: &[f64]| Ok(vec![y[0]]);
    let t = rk4(&f, 0.0, &[1.0], 1.0, steps).unwrap();
    (t.last().1[0] - 1f64.exp()).abs()
}

#[test]
fn rk4_is_fourth_order() {
    for n in [10, 20, 40] {
        let order = (rk4_error(n) / rk4_error(2 * n)).log2();
        assert!((3.8..=4.2).contains(&order), "{n} steps: order {order}");
    }
    assert!(rk4_error(1000) < 1e-8);
}

#[test]
fn symbolic_right_hand_side_matches_closed_form() {
    let x = Symbol::indep("x");
    let y = Symbol::param("y");
    let t = integrate_ode(&[p("y*cos(x)")], &x, &[y], &Bindings::new(), 0.0, &[1.0], 2.0, 1e-3).unwrap();
    for (xi, yi) in t.xs.iter().zip(&t.ys) {
        assert!((yi[0] - xi.sin().exp()).abs() < 1e-10);
    }
}

fn newton_ratios(x0: f64, analytic: bool) -> Vec<f64> {
    let f = |x: f64| Ok(x * x - 4.0);
    let df = |x: f64| Ok(2.0 * x);
    let d: Option<&dyn Fn(f64) -> Result<f64, EvalError>> = if analytic { Some(&df) } else { None };
    let r = newton_solve(&f, d, x0, NewtonOptions::default()).unwrap();
    assert!((r.root - 2.0).abs() < 1e-12, "{x0}: {}", r.root);
    let errs: Vec<f64> = r.history.iter().map(|x| (x - 2.0).abs()).collect();
    errs.windows(2).filter(|w| w[0] > 1e-6).map(|w| w[1] / (w[0] * w[0])).collect()
}

proptest! {
    #[test]
    fn newton_converges_quadratically(x0 in 0.5..20.0f64, analytic in any::<bool>()) {
        for q in newton_ratios(x0, analytic) {
            // e_{n+1} / e_n^2 = 1 / (2 x_n) for x^2 - 4
            prop_assert!(q <= 1.0 + 1e-6, "{x0}: ratio {q}");
        }
    }
}

type Field<'a> = &'a dyn Fn(&[f64]) -> Result<f64, EvalError>;

fn fd_max(residual: &str, u: &str, h: f64) -> f64 {
    let vars = [Symbol::indep("t"), Symbol::indep("x")];
    let c = Compiled::new(&p(u), &vars, &Bindings::new()).unwrap();
    let f = |q: &[f64]| c.eval(q);
    let fields: BTreeMap<Name, Field> = BTreeMap::from([(name("u"), &f as Field)]);
    let grid = Grid::new(vec![Axis::new(vars[0].clone(), -1.0, 1.0, 7), Axis::new(vars[1].clone(), -1.0, 1.0, 7)], h);
    fd_residual(&p(residual), &fields, &grid).unwrap().max
}

proptest! {
    #[test]
    fn stencils_are_exact_on_quadratics(c in prop::array::uniform6(-3i64..4)) {
        let [c0, c1, c2, c3, c4, c5] = c;
        let u = format!("{c0} + {c1}*t + {c2}*x + {c3}*t^2 + {c4}*t*x + {c5}*x^2");
        let checks = [
            format!("diff(u,x) - ({c2} + {c4}*t + 2*{c5}*x)"),
            format!("diff(u,t) - ({c1} + 2*{c3}*t + {c4}*x)"),
            format!("diff(u,x,x) + diff(u,t,t) - 2*({c3} + {c5})"),
            format!("diff(u,t,x) - {c4}"),
        ];
        // no truncation error at any step; a wide one keeps rounding small
        for r in &checks {
            let m = fd_max(r, &u, 0.1);
            prop_assert!(m <= 1e-10, "{r} on {u}: {m:e}");
        }
    }
}

#[test]
fn stencils_are_exact_on_polynomial_solutions_of_linear_equations() {
    assert!(fd_max("diff(u,t) - diff(u,x,x)", "x^2 + 2*t", 0.1) <= 1e-10);
    assert!(fd_max("diff(u,t,x)", "t^2 - 3*x^2 + 5", 0.1) <= 1e-10);
    assert!(fd_max("diff(u,t) + 2*diff(u,x)", "2*t - x + 1", 0.1) <= 1e-10);
}

#[test]
fn quadrature_error_estimate_bounds_the_error() {
    let cases: [(&dyn Fn(f64) -> Result<f64, EvalError>, f64); 3] = [
        (&|x: f64| Ok(x * x), 1.0 / 3.0),
        (&|x: f64| Ok(x.sin()), 1.0 - 1f64.cos()),
        (&|x: f64| Ok(x.exp() * x.cos()), 0.5 * (1f64.exp() * (1f64.cos() + 1f64.sin()) - 1.0)),
    ];
    for tol in [1e-6, 1e-10] {
        for (f, exact) in cases {
            let q = adaptive_simpson(f, 0.0, 1.0, tol).unwrap();
            let err = (q.value - exact).abs();
            assert!(err <= q.error_estimate + 4.0 * f64::EPSILON * exact.abs(), "error {err:e}, estimate {:e}", q.error_estimate);
            assert!(err < tol);
        }
    }
}
