#![allow(dead_code)]

use proptest::prelude::*;
use symverify::expr::{Context, Expr};

pub fn ctx() -> Context {
    Context::standard().with_function("G", 2)
}

pub fn p(s: &str) -> Expr {
    ctx().parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn number() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-6i64..7).prop_map(Expr::int),
        (-5i64..6, 1i64..5).prop_map(|(n, d)| Expr::ratio(n, d)),
        prop::sample::select(vec![0.25, 1.5, -0.75, 2.125]).prop_map(Expr::decimal),
    ]
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        number(),
        prop::sample::select(vec!["a", "r", "alpha", "x", "t", "x1", "u", "diff(u,x)", "diff(u,x,x)", "diff(u,t,x)", "v2"]).prop_map(p),
    ]
}

/// Arbitrary expressions over the standard context, including opaque
/// functions with derivatives.
pub fn any_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 40, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::mul),
            (inner.clone(), prop_oneof![(-3i64..4).prop_map(Expr::int), (-3i64..4, 2i64..4).prop_map(|(n, d)| Expr::ratio(n, d))])
                .prop_map(|(b, e)| Expr::pow(b, e)),
            (inner.clone(), inner.clone()).prop_map(|(b, e)| Expr::pow(b, e)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::exp),
            inner.clone().prop_map(Expr::ln),
            inner.clone().prop_map(Expr::sqrt),
            (inner.clone(), 0u32..3).prop_map(|(a, k)| Expr::opaque("F", vec![k], vec![a])),
            (inner.clone(), inner, 0u32..2, 0u32..2).prop_map(|(a, b, i, j)| Expr::opaque("G", vec![i, j], vec![a, b])),
        ]
    })
}

/// Smooth, everywhere-defined expressions in `x` and `y`.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3i64..4).prop_map(Expr::int), (1i64..4, 2i64..5).prop_map(|(n, d)| Expr::ratio(n, d)), Just(p("x")), Just(p("y"))];
    leaf.prop_recursive(3, 20, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), 2i64..4).prop_map(|(b, n)| b.powi(n)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(|a| Expr::exp(Expr::sin(a))),
            inner.clone().prop_map(|a| (Expr::int(2) + Expr::cos(a)).recip()),
            inner.prop_map(|a| Expr::sqrt(Expr::int(1) + a.powi(2))),
        ]
    })
}

/// Polynomial-and-exponential expressions in jets of `u` over `(t, x)`,
/// with an opaque function.
pub fn jet_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i64..4).prop_map(Expr::int),
        prop::sample::select(vec!["t", "x", "u", "diff(u,x)", "diff(u,t)", "diff(u,x,x)", "diff(u,t,x)", "a"]).prop_map(p),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), 2i64..4).prop_map(|(b, n)| b.powi(n)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::exp),
            inner.prop_map(|a| Expr::apply("F", vec![a])),
        ]
    })
}
