use num_traits::{One, Signed};

use super::{Expr, Number, Symbol};

/// Renders an expression in the input grammar; the output parses back to
/// the same canonical form.
pub fn print(e: &Expr) -> String {
    match e {
        Expr::Add(ts) => {
            let mut out = String::new();
            for (i, t) in ts.iter().enumerate() {
                let (neg, body) = signed_term(t);
                match (i, neg) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&body);
            }
            out
        }
        e => {
            let (neg, body) = signed_term(e);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
    }
}

fn signed_term(e: &Expr) -> (bool, String) {
    match e {
        Expr::Num(n) if n.is_negative() => (true, number(&negate(n))),
        Expr::Num(n) => (false, number(n)),
        Expr::Mul(fs) => match &fs[0] {
            Expr::Num(n) if n.is_negative() => (true, product(Some(&negate(n)), &fs[1..])),
            Expr::Num(n) => (false, product(Some(n), &fs[1..])),
            _ => (false, product(None, fs)),
        },
        e => (false, product(None, std::slice::from_ref(e))),
    }
}

fn negate(n: &Number) -> Number {
    match n {
        Number::Rational(q) => Number::Rational(-q),
        Number::Decimal(d) => Number::Decimal(-d),
    }
}

fn number(n: &Number) -> String {
    n.to_string()
}

fn negative_exponent(e: &Expr) -> bool {
    match e {
        Expr::Num(n) => n.is_negative(),
        Expr::Mul(fs) => matches!(&fs[0], Expr::Num(n) if n.is_negative()),
        _ => false,
    }
}

fn product(coef: Option<&Number>, factors: &[Expr]) -> String {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    match coef {
        Some(Number::Rational(q)) => {
            if !q.numer().is_one() || factors.is_empty() && q.denom().is_one() {
                num.push(q.numer().to_string());
            }
            if !q.denom().is_one() {
                den.push(q.denom().to_string());
            }
        }
        Some(n @ Number::Decimal(_)) => num.push(number(n)),
        None => {}
    }
    for f in factors {
        match f {
            // 0^e folds to 0 when reparsed, so 0^(-e) stays as written
            Expr::Pow(b, e) if negative_exponent(e) && !b.is_zero() => den.push(power(b, &-(**e).clone())),
            f => num.push(factor(f)),
        }
    }
    let mut out = if num.is_empty() { "1".to_string() } else { num.join("*") };
    match den.len() {
        0 => {}
        1 => {
            out.push('/');
            out.push_str(&den[0]);
        }
        _ => {
            out.push_str("/(");
            out.push_str(&den.join("*"));
            out.push(')');
        }
    }
    out
}

fn factor(f: &Expr) -> String {
    match f {
        Expr::Pow(b, e) => power(b, e),
        Expr::Num(n) if n.is_negative() => format!("({})", number(n)),
        Expr::Num(Number::Rational(q)) if !q.is_integer() => format!("({})", number(&Number::Rational(q.clone()))),
        Expr::Add(_) | Expr::Mul(_) => format!("({})", print(f)),
        f => atom(f),
    }
}

fn power(b: &Expr, e: &Expr) -> String {
    if e.is_one() {
        return factor(b);
    }
    let base = match b {
        Expr::Sym(_) | Expr::Func(..) | Expr::Opaque(_) => atom(b),
        Expr::Num(Number::Rational(q)) if q.is_integer() && !q.is_negative() => atom(b),
        b => format!("({})", print(b)),
    };
    let exp = match e {
        Expr::Sym(_) => atom(e),
        Expr::Num(Number::Rational(q)) if q.is_integer() && !q.is_negative() => atom(e),
        e => format!("({})", print(e)),
    };
    format!("{base}^{exp}")
}

fn atom(e: &Expr) -> String {
    match e {
        Expr::Num(n) => number(n),
        Expr::Sym(Symbol::Param(n) | Symbol::Indep(n)) => n.to_string(),
        Expr::Sym(Symbol::Jet(j)) => {
            if j.index.is_empty() {
                j.base.to_string()
            } else {
                let idx: Vec<&str> = j.index.iter().map(|s| &**s).collect();
                format!("diff({},{})", j.base, idx.join(","))
            }
        }
        Expr::Func(f, a) => format!("{}({})", f.name(), print(a)),
        Expr::Opaque(o) => {
            let args: Vec<String> = o.args.iter().map(print).collect();
            let head = if o.arity() == 1 {
                format!("{}{}", o.name, "'".repeat(o.orders[0] as usize))
            } else if o.total_order() == 0 {
                o.name.to_string()
            } else {
                let mut suffix = String::new();
                for (k, n) in o.orders.iter().enumerate() {
                    for _ in 0..*n {
                        suffix.push_str(&(k + 1).to_string());
                    }
                }
                format!("{}__{}", o.name, suffix)
            };
            format!("{}({})", head, args.join(", "))
        }
        e => format!("({})", print(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Context};

    fn round(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn readable_output() {
        assert_eq!(round("x1 - 2*x2"), "x1 - 2*x2");
        assert_eq!(round("x/(2*t)"), "x/(2*t)");
        assert_eq!(round("x^(1/2)"), "x^(1/2)");
        assert_eq!(round("diff(u, x2, x1)"), "diff(u,x1,x2)");
        assert_eq!(round("F''(x) + sin(-u)"), "sin(-u) + F''(x)");
        assert_eq!(round("-1/2"), "-1/2");
        assert_eq!(round("0.5*x"), "0.5*x");
    }

    #[test]
    fn round_trips() {
        let ctx = Context::standard().with_function("G", 2);
        for s in [
            "x^(-r/3)*phi1(w)^r",
            "(a + b)^(-1/2)/(x - 1)",
            "(-x)^(1/2)",
            "2^(1/2)*3",
            "G__12(u, x)*exp(-alpha^2*x1)",
            "(1/2)^x",
            "-0.25*x + 1.5",
            "0^(-2/3)*x",
        ] {
            let e = ctx.parse(s).unwrap();
            let back = ctx.parse(&e.to_string()).unwrap();
            assert_eq!(back, e, "{s} -> {e}");
        }
    }
}
