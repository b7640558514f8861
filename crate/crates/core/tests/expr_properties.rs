mod common;

use std::sync::Arc;

use common::{any_expr, ctx, p, smooth_expr};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symverify::expr::{differentiate, evaluate, is_zero, simplify, Bindings, Expr, Symbol};
use symverify::sampling::random_function;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn print_then_parse_is_identity(e in any_expr()) {
        let text = e.to_string();
        let back = ctx().parse(&text);
        prop_assert!(back.is_ok(), "{text}: {:?}", back);
        prop_assert_eq!(back.unwrap(), e, "{}", text);
    }
}

fn at(e: &Expr, x: f64, y: f64) -> f64 {
    let b = Bindings::new().with(Symbol::indep("x"), x).with(Symbol::param("y"), y);
    evaluate(e, &b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn central_differences_converge_at_second_order(e in smooth_expr(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let d = differentiate(&e, &Symbol::indep("x"));
        let exact = at(&d, x, y);
        let err = |h: f64| ((at(&e, x + h, y) - at(&e, x - h, y)) / (2.0 * h) - exact).abs();
        let (e3, e4) = (err(1e-3), err(1e-4));
        let scale = at(&e, x, y).abs().max(1.0);
        if e3 > 1e-7 * scale {
            let order = (e3 / e4).log10();
            prop_assert!(order >= 1.9, "{e}: errors {e3:e}, {e4:e}, order {order}");
        } else {
            // truncation error below what rounding lets us resolve
            prop_assert!(e4 < 1e-8 * scale, "{e}: errors {e3:e}, {e4:e}");
        }
    }

    #[test]
    fn differentiation_is_linear(e1 in any_expr(), e2 in any_expr(), a in -4i64..5, b in (-4i64..5, 1i64..4)) {
        let (a, b) = (Expr::int(a), Expr::ratio(b.0, b.1));
        let x = Symbol::indep("x");
        let lhs = differentiate(&(a.clone() * e1.clone() + b.clone() * e2.clone()), &x);
        let rhs = a * differentiate(&e1, &x) + b * differentiate(&e2, &x);
        prop_assert!(is_zero(&(lhs - rhs)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn simplification_preserves_values(e in any_expr(), seed in any::<u64>()) {
        let s = simplify(&e);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut base = Bindings::new();
        base.set_function("F", Arc::new(random_function(&mut rng, 1)));
        base.set_function("G", Arc::new(random_function(&mut rng, 2)));
        let symbols: Vec<Symbol> = e.symbols().into_iter().collect();
        for _ in 0..100 {
            let mut b = base.clone();
            for sym in &symbols {
                b.set(sym.clone(), rng.gen_range(-2.0..2.0));
            }
            let (Ok(v), Ok(w)) = (evaluate(&e, &b), evaluate(&s, &b)) else { continue };
            if !v.is_finite() || !w.is_finite() {
                continue;
            }
            // an expanded power cancels large terms; its rounding scales with them
            let terms = match &s {
                Expr::Add(ts) => ts.iter().filter_map(|t| evaluate(t, &b).ok()).fold(0.0, |m: f64, t| m.max(t.abs())),
                _ => 0.0,
            };
            let scale = v.abs().max(w.abs()).max(terms).max(1.0);
            prop_assert!((v - w).abs() <= 1e-12 * scale, "{e} -> {s}: {v} vs {w}");
        }
    }
}

#[test]
fn grammar_examples_round_trip() {
    for s in ["diff(u,t,x)*F''(x/t)", "G__12(a, x)^(-1/2)", "-(x - 1)^(2/(r + 1))", "exp(-alpha^2*x1)*sin(u)"] {
        let e = p(s);
        assert_eq!(ctx().parse(&e.to_string()).unwrap(), e);
    }
}
