//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-' unary | pow
//! pow   := atom ('^' unary)?
//! atom  := NUMBER | IDENT | IDENT '\''* '(' expr (',' expr)* ')'
//!        | 'diff' '(' IDENT (',' IDENT)+ ')' | '(' expr ')'
//! ```
//!
//! Opaque functions of several arguments carry partial derivatives in the
//! identifier: `F__12(a, b)` is the derivative of `F` once in each argument.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::{Context, Elementary, Expr, JetVar, Number, Symbol};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", .expected.join(" | "))]
    Syntax { offset: usize, expected: Vec<String>, found: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` takes {expected} argument(s), got {found} (offset {offset})")]
    Arity { name: String, expected: usize, found: usize, offset: usize },
    #[error("`{name}` at offset {offset} is not a declared {role}")]
    Undeclared { name: String, role: &'static str, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::Undeclared { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Number),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Prime,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "number `{n}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Prime => f.write_str("`'`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'\'' => Tok::Prime,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut decimal = false;
                if i < bytes.len() && bytes[i] == b'.' {
                    decimal = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let s = &text[start..i];
                if s == "." {
                    return Err(ParseError::Syntax {
                        offset: start,
                        expected: vec!["number".into()],
                        found: "`.`".into(),
                    });
                }
                let n = if decimal {
                    Number::Decimal(s.parse::<f64>().expect("decimal literal"))
                } else {
                    let v: BigInt = s.parse().expect("integer literal");
                    Number::Rational(BigRational::from_integer(v))
                };
                out.push((Tok::Num(n), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["expression".into()],
                    found: format!("`{}`", text[start..].chars().next().unwrap()),
                })
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    ctx: &'a Context,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, t: Tok, label: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    acc = acc / self.unary()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.pow()
    }

    fn pow(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::pow(base, e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        let found = self.peek().to_string();
        match self.bump() {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(id) => {
                let mut primes = 0u32;
                while *self.peek() == Tok::Prime {
                    self.bump();
                    primes += 1;
                }
                if *self.peek() == Tok::LParen {
                    self.bump();
                    if id == "diff" && primes == 0 {
                        return self.jet();
                    }
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    self.call(&id, primes, args, at)
                } else if primes > 0 {
                    Err(self.error(&["`(`"]))
                } else {
                    Ok(self.symbol(&id))
                }
            }
            _ => Err(ParseError::Syntax {
                offset: at,
                expected: vec!["number".into(), "identifier".into(), "`(`".into(), "`-`".into()],
                found,
            }),
        }
    }

    fn symbol(&self, id: &str) -> Expr {
        if self.ctx.is_independent(id) {
            Expr::indep(id)
        } else if self.ctx.is_dependent(id) {
            Expr::jet(id, &[])
        } else {
            Expr::param(id)
        }
    }

    fn jet(&mut self) -> Result<Expr, ParseError> {
        let base_at = self.offset();
        let base = match self.bump() {
            Tok::Ident(s) => s,
            _ => {
                self.pos -= 1;
                return Err(self.error(&["identifier"]));
            }
        };
        if !self.ctx.is_dependent(&base) {
            return Err(ParseError::Undeclared { name: base, role: "dependent variable", offset: base_at });
        }
        let mut index = Vec::new();
        while *self.peek() == Tok::Comma {
            self.bump();
            let var_at = self.offset();
            match self.bump() {
                Tok::Ident(s) => {
                    if !self.ctx.is_independent(&s) {
                        return Err(ParseError::Undeclared { name: s, role: "independent variable", offset: var_at });
                    }
                    index.push(s)
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.error(&["identifier"]));
                }
            }
        }
        if index.is_empty() {
            return Err(self.error(&["`,`"]));
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        let refs: Vec<&str> = index.iter().map(String::as_str).collect();
        Ok(Expr::Sym(Symbol::Jet(JetVar::new(&base, &refs))))
    }

    fn call(&self, id: &str, primes: u32, args: Vec<Expr>, at: usize) -> Result<Expr, ParseError> {
        if let Some(f) = Elementary::from_name(id) {
            if primes > 0 {
                return Err(ParseError::UnknownFunction { name: format!("{id}'"), offset: at });
            }
            if args.len() != 1 {
                return Err(ParseError::Arity { name: id.into(), expected: 1, found: args.len(), offset: at });
            }
            return Ok(Expr::func(f, args.into_iter().next().unwrap()));
        }
        let (fname, suffix) = split_partial_suffix(id);
        let arity = match self.ctx.arity(fname) {
            Some(a) => a,
            None => return Err(ParseError::UnknownFunction { name: id.into(), offset: at }),
        };
        if args.len() != arity {
            return Err(ParseError::Arity { name: fname.into(), expected: arity, found: args.len(), offset: at });
        }
        let mut orders = vec![0u32; arity];
        if let Some(digits) = suffix {
            for d in digits.bytes() {
                let k = (d - b'1') as usize;
                if k >= arity {
                    return Err(ParseError::Arity { name: id.into(), expected: arity, found: k + 1, offset: at });
                }
                orders[k] += 1;
            }
        }
        if primes > 0 {
            if arity != 1 {
                return Err(ParseError::Arity { name: format!("{fname}'"), expected: 1, found: arity, offset: at });
            }
            orders[0] += primes;
        }
        Ok(Expr::opaque(fname, orders, args))
    }
}

/// `F__12` -> (`F`, Some("12")) when the suffix is made of digits 1-9.
fn split_partial_suffix(id: &str) -> (&str, Option<&str>) {
    if let Some(pos) = id.rfind("__") {
        let (head, tail) = (&id[..pos], &id[pos + 2..]);
        if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| (b'1'..=b'9').contains(&b)) {
            return (head, Some(tail));
        }
    }
    (id, None)
}

pub(crate) fn parse_with(ctx: &Context, text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { ctx, toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Parses with [`Context::standard`] declarations.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(&Context::standard(), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_sum() {
        let e = parse("x1^2 + sin(u)").unwrap();
        let expected = Expr::add([Expr::indep("x1").powi(2), Expr::sin(Expr::jet("u", &[]))]);
        assert_eq!(e, expected);
    }

    #[test]
    fn operator_coefficient() {
        let e = parse("(r+1)*x1").unwrap();
        assert_eq!(e, Expr::mul([Expr::param("r") + Expr::one(), Expr::indep("x1")]));
    }

    #[test]
    fn trailing_operator_reports_offset() {
        let err = parse("x1 + ").unwrap_err();
        assert_eq!(err.offset(), 5);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_function_and_arity() {
        assert!(matches!(parse("foo(x)").unwrap_err(), ParseError::UnknownFunction { .. }));
        assert!(matches!(parse("F(x, t)").unwrap_err(), ParseError::Arity { .. }));
        assert!(matches!(parse("sin(x, t)").unwrap_err(), ParseError::Arity { .. }));
    }

    #[test]
    fn jets_and_primes() {
        assert_eq!(parse("diff(u,x2,x1)").unwrap(), Expr::jet("u", &["x1", "x2"]));
        let e = parse("F''(x)").unwrap();
        assert_eq!(e, Expr::opaque("F", vec![2], vec![Expr::indep("x")]));
        let ctx = Context::standard().with_function("G", 2);
        let e = ctx.parse("G__112(v2, v3)").unwrap();
        assert_eq!(e, Expr::opaque("G", vec![2, 1], vec![Expr::jet("v2", &[]), Expr::jet("v3", &[])]));
        assert!(parse("diff(r, x1)").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-x^2").unwrap(), -Expr::indep("x").powi(2));
        assert_eq!(parse("2^3^2").unwrap(), Expr::int(512));
        assert_eq!(parse("x/y*z").unwrap(), parse("x*z/y").unwrap());
        assert_eq!(parse("x^-1").unwrap(), Expr::indep("x").recip());
    }
}
