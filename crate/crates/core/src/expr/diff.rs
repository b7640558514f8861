use super::{Elementary, Expr, Symbol};

/// Partial derivative with respect to a symbol. All symbols, including jet
/// variables, are treated as independent coordinates; opaque functions are
/// differentiated by the chain rule.
pub fn differentiate(e: &Expr, s: &Symbol) -> Expr {
    if !e.contains_symbol(s) {
        return Expr::zero();
    }
    match e {
        Expr::Num(_) => Expr::zero(),
        Expr::Sym(t) => {
            if t == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Add(ts) => Expr::add(ts.iter().map(|t| differentiate(t, s))),
        Expr::Mul(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let df = differentiate(f, s);
                if df.is_zero() {
                    continue;
                }
                let mut parts: Vec<Expr> = fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
                parts.push(df);
                terms.push(Expr::mul(parts));
            }
            Expr::add(terms)
        }
        Expr::Pow(b, x) => {
            let b = (**b).clone();
            let x = (**x).clone();
            let db = differentiate(&b, s);
            if !x.contains_symbol(s) {
                return Expr::mul([x.clone(), Expr::pow(b, x - Expr::one()), db]);
            }
            let dx = differentiate(&x, s);
            let p = Expr::pow(b.clone(), x.clone());
            p * (dx * Expr::ln(b.clone()) + x * db / b)
        }
        Expr::Func(f, a) => {
            let a = (**a).clone();
            let da = differentiate(&a, s);
            let outer = match f {
                Elementary::Sin => Expr::cos(a),
                Elementary::Cos => -Expr::sin(a),
                Elementary::Tan => Expr::one() + Expr::func(Elementary::Tan, a).powi(2),
                Elementary::Atan => (Expr::one() + a.powi(2)).recip(),
                Elementary::Exp => Expr::exp(a),
                Elementary::Ln => a.recip(),
                Elementary::Sqrt => (Expr::int(2) * Expr::sqrt(a)).recip(),
            };
            outer * da
        }
        Expr::Opaque(o) => {
            let mut terms = Vec::new();
            for (k, a) in o.args.iter().enumerate() {
                let da = differentiate(a, s);
                if !da.is_zero() {
                    terms.push(Expr::Opaque(std::sync::Arc::new(o.bump(k))) * da);
                }
            }
            Expr::add(terms)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, simplify};
    use super::*;

    fn d(s: &str, v: &str) -> Expr {
        differentiate(&parse(s).unwrap(), &Symbol::indep(v))
    }

    #[test]
    fn elementary_rules() {
        assert_eq!(d("x^3", "x"), parse("3*x^2").unwrap());
        assert_eq!(d("sin(x^2)", "x"), parse("2*x*cos(x^2)").unwrap());
        assert_eq!(d("exp(a*x)", "x"), parse("a*exp(a*x)").unwrap());
        assert_eq!(simplify(&d("x^r", "x")), simplify(&parse("r*x^(r-1)").unwrap()));
    }

    #[test]
    fn chain_rule_through_opaque() {
        assert_eq!(d("F(x^2)", "x"), parse("2*x*F'(x^2)").unwrap());
        assert_eq!(d("F(t)", "x"), Expr::zero());
    }

    #[test]
    fn symbolic_exponent() {
        let e = d("2^x", "x");
        assert_eq!(e, parse("2^x*ln(2)").unwrap());
    }
}
