mod common;

use common::p;
use proptest::prelude::*;
use symverify::expr::{is_zero, name, Expr, Symbol};
use symverify::jet::JetSpace;
use symverify::symmetry::{lie_bracket, prolong, VectorField};

fn vars() -> [Symbol; 3] {
    [Symbol::indep("x1"), Symbol::indep("x2"), Symbol::jet("u", &[])]
}

fn field(coefs: [&str; 3]) -> VectorField {
    VectorField::coefficients(vars().into_iter().zip(coefs.map(p)))
}

/// `d/dx1`, `d/dx2` and `x1 d/dx1 - x2 d/dx2`.
fn basis() -> [VectorField; 3] {
    [field(["1", "0", "0"]), field(["0", "1", "0"]), field(["x1", "-x2", "0"])]
}

fn combine(cs: &[(Expr, &VectorField)]) -> VectorField {
    VectorField::coefficients(vars().map(|s| {
        let c = Expr::add(cs.iter().map(|(k, f)| k.clone() * f.coefficient(&s)).collect::<Vec<_>>());
        (s, c)
    }))
}

fn space() -> JetSpace {
    JetSpace::new(&["x1", "x2"])
}

fn br(a: &VectorField, b: &VectorField) -> VectorField {
    lie_bracket(a, b, &space()).unwrap()
}

fn vanishes(f: &VectorField) -> bool {
    vars().iter().all(|s| is_zero(&f.coefficient(s)))
}

fn coef() -> impl Strategy<Value = Expr> {
    (-5i64..6, 1i64..4).prop_map(|(n, d)| Expr::ratio(n, d))
}

fn element() -> impl Strategy<Value = VectorField> {
    (coef(), coef(), coef()).prop_map(|(a, b, c)| {
        let [e1, e2, e3] = basis();
        combine(&[(a, &e1), (b, &e2), (c, &e3)])
    })
}

#[test]
fn structure_constants() {
    let [e1, e2, e3] = basis();
    assert!(vanishes(&br(&e1, &e2)));
    assert!(vanishes(&combine(&[(Expr::int(1), &br(&e1, &e3)), (Expr::int(-1), &e1)])));
    assert!(vanishes(&combine(&[(Expr::int(1), &br(&e2, &e3)), (Expr::int(1), &e2)])));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn bracket_is_antisymmetric(a in element(), b in element()) {
        let one = Expr::int(1);
        prop_assert!(vanishes(&combine(&[(one.clone(), &br(&a, &b)), (one, &br(&b, &a))])));
    }

    #[test]
    fn jacobi_identity(a in element(), b in element(), c in element()) {
        let one = Expr::int(1);
        let (x, y, z) = (br(&a, &br(&b, &c)), br(&b, &br(&c, &a)), br(&c, &br(&a, &b)));
        prop_assert!(vanishes(&combine(&[(one.clone(), &x), (one.clone(), &y), (one, &z)])));
    }
}

fn poly_coef() -> impl Strategy<Value = Expr> {
    prop::collection::vec((-3i64..4, prop::sample::select(vec!["1", "x1", "x2", "u", "x1*u", "x2^2", "u^2", "x1*x2"])), 1..4)
        .prop_map(|ts| Expr::add(ts.into_iter().map(|(k, m)| Expr::int(k) * p(m)).collect::<Vec<_>>()))
}

fn point_field() -> impl Strategy<Value = VectorField> {
    (poly_coef(), poly_coef(), poly_coef()).prop_map(|(a, b, c)| VectorField::coefficients(vars().into_iter().zip([a, b, c])))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, ..ProptestConfig::default() })]

    #[test]
    fn prolongation_is_linear(v in point_field(), w in point_field(), a in coef(), b in coef()) {
        let s = space();
        let deps = [name("u")];
        let lhs = prolong(&combine(&[(a.clone(), &v), (b.clone(), &w)]), &s, &deps, 2);
        let pv = prolong(&v, &s, &deps, 2);
        let pw = prolong(&w, &s, &deps, 2);
        prop_assert!(lhs.len() >= 8);
        for (k, c) in &lhs {
            let z = Expr::zero();
            let rhs = a.clone() * pv.get(k).unwrap_or(&z).clone() + b.clone() * pw.get(k).unwrap_or(&z).clone();
            prop_assert!(is_zero(&(c.clone() - rhs)), "{:?}", k);
        }
    }
}
