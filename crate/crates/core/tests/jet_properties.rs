mod common;

use common::{jet_expr, p};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symverify::expr::{evaluate, is_zero, Bindings, Expr, JetVar, Symbol};
use symverify::jet::{implicit_derivative, reduce_on_shell, total_derivative, Equation, EquationSystem, JetSpace};

fn heat() -> EquationSystem {
    EquationSystem::new(&["t", "x"], &["u"]).with(Equation::solved(JetVar::new("u", &["t"]), p("diff(u,x,x)")).unwrap()).unwrap()
}

fn burgers() -> EquationSystem {
    EquationSystem::new(&["t", "x"], &["u"])
        .with(Equation::solved(JetVar::new("u", &["t"]), p("diff(u,x,x) + u*diff(u,x)")).unwrap())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn total_derivatives_commute(e in jet_expr()) {
        let tx = total_derivative(&total_derivative(&e, "t"), "x");
        let xt = total_derivative(&total_derivative(&e, "x"), "t");
        prop_assert!(is_zero(&(tx - xt)), "{e}");
    }

    #[test]
    fn leibniz_rule(a in jet_expr(), b in jet_expr()) {
        let lhs = total_derivative(&(a.clone() * b.clone()), "x");
        let rhs = total_derivative(&a, "x") * b.clone() + a.clone() * total_derivative(&b, "x");
        prop_assert!(is_zero(&(lhs - rhs)), "{a}, {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn on_shell_reduction_is_idempotent(e in jet_expr(), extra in prop::sample::select(vec!["diff(u,t,t)", "diff(u,t,x,x)", "diff(u,t,t,x)", "1"])) {
        let e = e * p(extra);
        for sys in [heat(), burgers()] {
            let once = reduce_on_shell(&e, &sys, 4).unwrap();
            let twice = reduce_on_shell(&once, &sys, 4).unwrap();
            prop_assert_eq!(&twice, &once, "{}", e);
            prop_assert!(!once.jets().iter().any(|j| j.index.iter().any(|n| &**n == "t")), "{once}");
        }
    }
}

/// `v2 = g(x1)*(x2 - v2)` has the explicit solution `v2 = g*x2/(1 + g)`.
#[test]
fn implicit_derivative_matches_explicit_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for (g, dg) in [("x1", "1"), ("exp(x1)", "exp(x1)"), ("x1^2 + 1", "2*x1"), ("a*sin(x1) + 2", "a*cos(x1)")] {
        let mut space = JetSpace::new(&["x1", "x2"]);
        space.define(Symbol::param("omega"), p("x2 - v2"));
        let rel = Equation::solved(JetVar::new("v2", &[]), p(&format!("({g})*omega"))).unwrap();
        let d2 = implicit_derivative(std::slice::from_ref(&rel), &JetVar::new("v2", &[]), "x2", &space).unwrap();
        let d1 = implicit_derivative(&[rel], &JetVar::new("v2", &[]), "x1", &space).unwrap();
        let (g, dg) = (p(g), p(dg));
        let one = Expr::int(1);
        let exp2 = g.clone() / (one.clone() + g.clone());
        let exp1 = dg * p("x2") / (one.clone() + g.clone()).powi(2);
        let explicit = p("x2") * g.clone() / (one + g.clone());
        for _ in 0..100 {
            let mut b = Bindings::new();
            b.set(Symbol::indep("x1"), rng.gen_range(0.1..2.0));
            b.set(Symbol::indep("x2"), rng.gen_range(-2.0..2.0));
            b.set(Symbol::param("a"), rng.gen_range(0.0..1.0));
            let v2 = evaluate(&explicit, &b).unwrap();
            b.set(Symbol::param("omega"), evaluate(&p("x2"), &b).unwrap() - v2);
            b.set(Symbol::jet("v2", &[]), v2);
            for (imp, exp) in [(&d2, &exp2), (&d1, &exp1)] {
                let (i, e) = (evaluate(imp, &b).unwrap(), evaluate(exp, &b).unwrap());
                assert!((i - e).abs() < 1e-10, "{imp} vs {exp}: {i} vs {e}");
            }
        }
    }
}

/// The builtin diffusion scenario writes the flux derivative out by hand.
#[test]
fn expanded_flux_matches_total_derivative() {
    let flux = p("(w - 1)^((1-r)/r)*diff(w,x)/w^((1+r)/r)");
    let by_hand = p("diff(w,t) - 1/r*((1-r)/r*(w-1)^((1-2*r)/r)*diff(w,x)^2/w^((1+r)/r) + (w-1)^((1-r)/r)*diff(w,x,x)/w^((1+r)/r) - (1+r)/r*(w-1)^((1-r)/r)*diff(w,x)^2/w^((1+2*r)/r))");
    let derived = p("diff(w,t)") - total_derivative(&flux, "x") / p("r");
    assert!(is_zero(&(by_hand - derived)));
}
