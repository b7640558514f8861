//! Rational normal form used for zero testing and simplification.
//!
//! An expression is brought to `N / (D1^m1 * ... * Dk^mk)` where `N` is an
//! expanded Laurent polynomial in kernels and the `Di` are primitive
//! multi-term polynomials. Kernels are symbols, elementary and opaque
//! applications with normalized arguments, fractional or symbolic powers of
//! integers and of polynomials, and `e` (so `exp(a)` is `e^a`). Kernel
//! exponents are normalized expressions; exponents of numeric and polynomial
//! bases are kept in `[0, 1)` by moving integer parts out.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::number::{rational_gcd, rational_pow};
use super::{Elementary, Expr, Number, Opaque};

const DIVISION_BUDGET: usize = 20_000;
const CACHE_LIMIT: usize = 50_000;

fn e_kernel() -> Expr {
    Expr::Func(Elementary::Exp, Arc::new(Expr::one()))
}

fn q_int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Product of kernels raised to exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono(BTreeMap<Expr, Expr>);

impl Mono {
    pub fn one() -> Self {
        Mono::default()
    }

    pub fn kernel(k: Expr, e: Expr) -> Self {
        let mut m = Mono::one();
        if !e.is_zero() {
            m.0.insert(k, e);
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Expr, &Expr)> {
        self.0.iter()
    }

    pub fn exponent(&self, k: &Expr) -> Option<&Expr> {
        self.0.get(k)
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let mut out = self.0.clone();
        for (k, e) in &o.0 {
            match out.get(k) {
                Some(f) => {
                    let s = add_exp(f, e);
                    if s.is_zero() {
                        out.remove(k);
                    } else {
                        out.insert(k.clone(), s);
                    }
                }
                None => {
                    out.insert(k.clone(), e.clone());
                }
            }
        }
        Mono(out)
    }

    pub fn pow(&self, x: &Expr) -> Mono {
        let mut out = BTreeMap::new();
        for (k, e) in &self.0 {
            let p = mul_exp(e, x);
            if !p.is_zero() {
                out.insert(k.clone(), p);
            }
        }
        Mono(out)
    }

    pub fn inv(&self) -> Mono {
        self.pow(&Expr::int(-1))
    }

    /// Splits off kernels with even integer exponents, whose sign is lost
    /// under a fractional power.
    pub fn split_even(&self) -> (Mono, Mono) {
        let (even, rest) = self.0.iter().map(|(k, e)| (k.clone(), e.clone())).partition(|(_, e)| is_even(e));
        (Mono(rest), Mono(even))
    }

    pub fn without(&self, k: &Expr) -> Mono {
        let mut m = self.clone();
        m.0.remove(k);
        m
    }

    pub fn to_expr(&self) -> Expr {
        Expr::mul(self.0.iter().map(|(k, e)| kernel_expr(k, e)))
    }
}

fn is_even(e: &Expr) -> bool {
    matches!(e.as_rational(), Some(q) if q.is_integer() && q.numer().is_even())
}

fn kernel_expr(k: &Expr, e: &Expr) -> Expr {
    if *k == e_kernel() {
        Expr::exp(e.clone())
    } else {
        Expr::pow(k.clone(), e.clone())
    }
}

fn add_exp(a: &Expr, b: &Expr) -> Expr {
    match (a.as_rational(), b.as_rational()) {
        (Some(x), Some(y)) => Expr::rational(x + y),
        _ => simplify(&Expr::add([a.clone(), b.clone()])),
    }
}

fn sub_exp(a: &Expr, b: &Expr) -> Expr {
    match (a.as_rational(), b.as_rational()) {
        (Some(x), Some(y)) => Expr::rational(x - y),
        _ => simplify(&(a.clone() - b.clone())),
    }
}

fn mul_exp(a: &Expr, b: &Expr) -> Expr {
    match (a.as_rational(), b.as_rational()) {
        (Some(x), Some(y)) => Expr::rational(x * y),
        _ => simplify(&Expr::mul([a.clone(), b.clone()])),
    }
}

/// Laurent polynomial with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly(BTreeMap<Mono, BigRational>);

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(q: BigRational) -> Self {
        Poly::term(Mono::one(), q)
    }

    pub fn term(m: Mono, c: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.0.iter()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.0.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.0.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.0.remove(&m);
                }
            }
            None => {
                self.0.insert(m, c);
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn scale(&self, c: &BigRational, m: &Mono) -> Poly {
        let mut out = Poly::zero();
        for (n, d) in &self.0 {
            out.add_term(n.mul(m), d * c);
        }
        out
    }

    /// Product without re-normalizing kernel exponents.
    fn mul_raw(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.0 {
            for (n, d) in &o.0 {
                out.add_term(m.mul(n), c * d);
            }
        }
        out
    }

    pub fn to_expr(&self) -> Expr {
        Expr::add(self.0.iter().map(|(m, c)| Expr::mul([Expr::rational(c.clone()), m.to_expr()])))
    }

    /// Positive rational content and the monomial content (kernel-wise
    /// minimum exponent, where comparable).
    pub fn content(&self) -> (BigRational, Mono) {
        let mut c = BigRational::zero();
        for v in self.0.values() {
            c = rational_gcd(&c, v);
        }
        if c.is_zero() {
            return (BigRational::one(), Mono::one());
        }
        let mut kernels: Vec<&Expr> = self.0.keys().flat_map(|m| m.0.keys()).collect();
        kernels.sort();
        kernels.dedup();
        let zero = Expr::zero();
        let mut mc = BTreeMap::new();
        'kernels: for k in kernels {
            let exps: Vec<&Expr> = self.0.keys().map(|m| m.0.get(k).unwrap_or(&zero)).collect();
            let base = exps[0];
            let mut low = BigRational::zero();
            for e in &exps[1..] {
                match sub_exp(e, base).as_rational() {
                    Some(d) => {
                        if *d < low {
                            low = d.clone();
                        }
                    }
                    None => continue 'kernels,
                }
            }
            let m = add_exp(base, &Expr::rational(low));
            if !m.is_zero() {
                mc.insert(k.clone(), m);
            }
        }
        (c, Mono(mc))
    }

    fn leading_negative(&self) -> bool {
        self.0.values().next().is_some_and(|c| c.is_negative())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

enum KernelKind {
    Numeric,
    PolyBase,
    Plain,
}

fn kind(k: &Expr) -> KernelKind {
    match k {
        Expr::Num(_) => KernelKind::Numeric,
        Expr::Add(_) | Expr::Mul(_) => KernelKind::PolyBase,
        _ => KernelKind::Plain,
    }
}

/// Integer part to move out of an exponent: floor of its rational part.
fn integer_part(e: &Expr) -> BigInt {
    let r = match e {
        Expr::Num(Number::Rational(q)) => q.clone(),
        Expr::Add(ts) => match &ts[0] {
            Expr::Num(Number::Rational(q)) => q.clone(),
            _ => return BigInt::zero(),
        },
        _ => return BigInt::zero(),
    };
    r.floor().to_integer()
}

/// Rational function `num / prod(den)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fraction {
    num: Poly,
    den: BTreeMap<Poly, u32>,
}

impl Fraction {
    pub fn zero() -> Self {
        Fraction::default()
    }

    pub fn one() -> Self {
        Fraction::constant(BigRational::one())
    }

    pub fn constant(q: BigRational) -> Self {
        Fraction { num: Poly::constant(q), den: BTreeMap::new() }
    }

    pub fn from_poly(p: Poly) -> Self {
        Fraction { num: p, den: BTreeMap::new() }
    }

    pub fn from_expr(e: &Expr) -> Self {
        normalize(e)
    }

    fn kernel(k: Expr, e: Expr) -> Self {
        settle(Poly::term(Mono::kernel(k, e), BigRational::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> impl Iterator<Item = (&Poly, u32)> {
        self.den.iter().map(|(p, m)| (p, *m))
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn numerator_expr(&self) -> Expr {
        self.num.to_expr()
    }

    pub fn denominator_expr(&self) -> Expr {
        Expr::mul(self.den.iter().map(|(p, m)| Expr::pow(p.to_expr(), Expr::int(*m as i64))))
    }

    pub fn to_expr(&self) -> Expr {
        let mut fs = vec![self.num.to_expr()];
        for (p, m) in &self.den {
            fs.push(Expr::pow(p.to_expr(), Expr::int(-(*m as i64))));
        }
        Expr::mul(fs)
    }

    pub fn neg(&self) -> Fraction {
        Fraction { num: self.num.neg(), den: self.den.clone() }
    }

    fn add_raw(&self, o: &Fraction) -> Fraction {
        let mut lcd = self.den.clone();
        for (p, m) in &o.den {
            let e = lcd.entry(p.clone()).or_insert(0);
            *e = (*e).max(*m);
        }
        let lift = |f: &Fraction| {
            let mut n = f.num.clone();
            for (p, m) in &lcd {
                for _ in f.den.get(p).copied().unwrap_or(0)..*m {
                    n = n.mul_raw(p);
                }
            }
            n
        };
        let n = lift(self).add(&lift(o));
        let s = settle(n);
        let mut den = lcd;
        for (p, m) in s.den {
            *den.entry(p).or_insert(0) += m;
        }
        Fraction { num: s.num, den }
    }

    fn mul_raw(&self, o: &Fraction) -> Fraction {
        let s = settle(self.num.mul_raw(&o.num));
        let mut den = self.den.clone();
        for (p, m) in o.den.iter().chain(&s.den) {
            *den.entry(p.clone()).or_insert(0) += m;
        }
        Fraction { num: s.num, den }
    }

    pub fn add(&self, o: &Fraction) -> Fraction {
        self.add_raw(o).cancel()
    }

    pub fn sub(&self, o: &Fraction) -> Fraction {
        self.add_raw(&o.neg()).cancel()
    }

    pub fn mul(&self, o: &Fraction) -> Fraction {
        self.mul_raw(o).cancel()
    }

    pub fn div(&self, o: &Fraction) -> Option<Fraction> {
        Some(self.mul(&o.recip()?))
    }

    pub fn recip(&self) -> Option<Fraction> {
        if self.num.is_zero() {
            return None;
        }
        let (mut c, mc) = self.num.content();
        let mut p = self.num.scale(&c.recip(), &mc.inv());
        if p.leading_negative() {
            p = p.neg();
            c = -c;
        }
        let mut n = Poly::term(mc.inv(), c.recip());
        for (d, m) in &self.den {
            for _ in 0..*m {
                n = n.mul_raw(d);
            }
        }
        let mut out = settle(n);
        if p.as_constant().is_none() {
            *out.den.entry(p).or_insert(0) += 1;
        } else if p.as_constant() != Some(BigRational::one()) {
            out = out.mul_raw(&Fraction::from_poly(p));
        }
        Some(out.cancel())
    }

    pub fn pow_int(&self, n: i64) -> Option<Fraction> {
        if n < 0 {
            return self.recip()?.pow_int(-n);
        }
        let mut acc = Fraction::one();
        let mut base = self.clone();
        let mut k = n as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Some(acc)
    }

    /// Divides out denominator factors that divide the numerator exactly.
    fn cancel(mut self) -> Fraction {
        if self.num.is_zero() {
            self.den.clear();
            return self;
        }
        let factors: Vec<(Poly, u32)> = std::mem::take(&mut self.den).into_iter().collect();
        for (p, mut m) in factors {
            while m > 0 {
                match divide(&self.num, &p) {
                    Some(q) => {
                        self.num = q;
                        m -= 1;
                    }
                    None => break,
                }
            }
            if m > 0 {
                self.den.insert(p, m);
            }
        }
        self
    }
}

/// Moves integer parts of numeric and polynomial-base kernel exponents out
/// of each monomial.
fn settle(p: Poly) -> Fraction {
    let needs = |m: &Mono| {
        m.0.iter().any(|(k, e)| match kind(k) {
            KernelKind::Plain => false,
            _ => !integer_part(e).is_zero(),
        })
    };
    if !p.0.keys().any(needs) {
        return Fraction::from_poly(p);
    }
    let mut plain = Poly::zero();
    let mut acc: Option<Fraction> = None;
    for (m, c) in p.0 {
        if !needs(&m) {
            plain.add_term(m, c);
            continue;
        }
        let mut rest = BTreeMap::new();
        let mut coef = c;
        let mut extra: Vec<Fraction> = Vec::new();
        for (k, e) in m.0 {
            let n = match kind(&k) {
                KernelKind::Plain => BigInt::zero(),
                _ => integer_part(&e),
            };
            if n.is_zero() {
                rest.insert(k, e);
                continue;
            }
            let f = sub_exp(&e, &Expr::rational(BigRational::from_integer(n.clone())));
            if !f.is_zero() {
                rest.insert(k.clone(), f);
            }
            let n = n.to_i64().expect("exponent overflow");
            match (&k, kind(&k)) {
                (Expr::Num(Number::Rational(b)), _) => {
                    coef *= rational_pow(b, &q_int(n)).expect("nonzero numeric kernel");
                }
                _ => match normalize(&k).pow_int(n) {
                    Some(f) => extra.push(f),
                    None => {
                        rest.insert(Expr::pow(k, Expr::int(n)), Expr::one());
                    }
                },
            }
        }
        let mut t = Fraction::from_poly(Poly::term(Mono(rest), coef));
        for f in extra {
            t = t.mul_raw(&f);
        }
        acc = Some(match acc {
            Some(a) => a.add_raw(&t),
            None => t,
        });
    }
    let plain = Fraction::from_poly(plain);
    match acc {
        Some(a) => a.add_raw(&plain),
        None => plain,
    }
}

/// Exact division of Laurent polynomials, by elimination of a kernel in
/// which the divisor has a monomial leading coefficient.
fn divide(n: &Poly, d: &Poly) -> Option<Poly> {
    let (z, dtop, lc_m, lc_c) = pick_variable(n, d)?;
    let deg = |m: &Mono| -> BigRational {
        m.0.get(&z).and_then(|e| e.as_rational().cloned()).unwrap_or_else(BigRational::zero)
    };
    let dmin = d.0.keys().map(&deg).min()?;
    let floor = n.0.keys().map(&deg).min()? - &dmin;
    let lc_inv = lc_m.inv();
    let mut rem = n.clone();
    let mut q = Poly::zero();
    let mut steps = 0usize;
    while !rem.is_zero() {
        steps += rem.len() * d.len();
        if steps > DIVISION_BUDGET {
            return None;
        }
        let top = rem.0.keys().map(&deg).max().unwrap();
        if &top - &dtop < floor {
            return None;
        }
        let lead: Vec<(Mono, BigRational)> =
            rem.0.iter().filter(|(m, _)| deg(m) == top).map(|(m, c)| (m.clone(), c.clone())).collect();
        for (m, c) in lead {
            let qm = m.mul(&lc_inv);
            let qc = c / &lc_c;
            rem = rem.add(&d.scale(&-qc.clone(), &qm));
            q.add_term(qm, qc);
        }
    }
    let settled = q.0.keys().all(|m| {
        m.0.iter().all(|(k, e)| match kind(k) {
            KernelKind::Plain => true,
            _ => integer_part(e).is_zero(),
        })
    });
    settled.then_some(q)
}

fn pick_variable(n: &Poly, d: &Poly) -> Option<(Expr, BigRational, Mono, BigRational)> {
    let mut kernels: Vec<&Expr> = d.0.keys().flat_map(|m| m.0.keys()).collect();
    kernels.sort();
    kernels.dedup();
    'k: for z in kernels {
        let mut degs = Vec::with_capacity(d.len());
        for m in d.0.keys().chain(n.0.keys()) {
            match m.0.get(z) {
                None => degs.push(BigRational::zero()),
                Some(e) => match e.as_rational() {
                    Some(q) => degs.push(q.clone()),
                    None => continue 'k,
                },
            }
        }
        let dd = &degs[..d.len()];
        let top = dd.iter().max().unwrap().clone();
        let lead: Vec<(&Mono, &BigRational)> = d.0.iter().zip(dd).filter(|(_, g)| **g == top).map(|(t, _)| t).collect();
        if lead.len() == 1 && dd.iter().any(|g| *g != top) {
            let (m, c) = lead[0];
            return Some((z.clone(), top, m.clone(), c.clone()));
        }
    }
    None
}

/// Whether `e` reads as a negated expression: negative leading coefficient.
fn is_negated(e: &Expr) -> bool {
    match e {
        Expr::Num(n) => n.is_negative(),
        Expr::Mul(fs) => matches!(&fs[0], Expr::Num(n) if n.is_negative()),
        Expr::Add(ts) => is_negated(&ts[0]),
        _ => false,
    }
}

fn small_factors(n: &BigInt) -> Option<Vec<(BigInt, u32)>> {
    let mut v = n.to_u64()?;
    if v > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= v {
        let mut k = 0;
        while v % p == 0 {
            v /= p;
            k += 1;
        }
        if k > 0 {
            out.push((BigInt::from(p), k));
        }
        p += 1;
    }
    if v > 1 {
        out.push((BigInt::from(v), 1));
    }
    Some(out)
}

/// `c^x` for a positive rational `c`.
fn numeric_power(c: &BigRational, x: &Expr) -> Fraction {
    if let Some(q) = x.as_rational() {
        if let Some(v) = rational_pow(c, q) {
            return Fraction::constant(v);
        }
    }
    let mut m = Mono::one();
    for (part, sign) in [(c.numer(), 1i64), (c.denom(), -1i64)] {
        if part.is_one() {
            continue;
        }
        let x = mul_exp(x, &Expr::int(sign));
        match small_factors(part) {
            Some(fs) => {
                for (p, k) in fs {
                    m = m.mul(&Mono::kernel(Expr::rational(BigRational::from_integer(p)), mul_exp(&x, &Expr::int(k as i64))));
                }
            }
            None => m = m.mul(&Mono::kernel(Expr::rational(BigRational::from_integer(part.clone())), x)),
        }
    }
    settle(Poly::term(m, BigRational::one()))
}

fn power(b: &Expr, x: &Expr) -> Fraction {
    let xs = simplify(x);
    if let Some(q) = xs.as_rational() {
        if q.is_integer() {
            if let Some(n) = q.to_integer().to_i64().filter(|n| n.abs() <= 10_000) {
                return normalize(b).pow_int(n).unwrap_or_else(|| Fraction::kernel(Expr::pow(b.clone(), xs.clone()), Expr::one()));
            }
        }
    }
    let integral = POSITIVE_BASES.with(Cell::get) || matches!(xs.as_rational(), Some(q) if q.is_integer());
    let fb = normalize(b);
    if fb.num.is_zero() {
        return match xs.as_rational() {
            Some(q) if q.is_positive() => Fraction::zero(),
            _ => Fraction::kernel(Expr::pow(Expr::zero(), xs), Expr::one()),
        };
    }
    let mut acc;
    let single = if fb.num.len() == 1 { fb.num.0.iter().next() } else { None };
    match single {
        Some((m, c)) if c.is_negative() => {
            // Keep the sign with the base: (-c*m)^x = c^x * (-m)^x.
            let base = Poly::term(m.clone(), -BigRational::one()).to_expr();
            acc = numeric_power(&-c, &xs).mul_raw(&settle(Poly::term(Mono::kernel(base, xs.clone()), BigRational::one())));
        }
        _ => {
            let (c, mc) = fb.num.content();
            let p = fb.num.scale(&c.recip(), &mc.inv());
            let (mc, kept) = if integral { (mc, Mono::one()) } else { mc.split_even() };
            acc = numeric_power(&c, &xs).mul_raw(&settle(Poly::term(mc.pow(&xs), BigRational::one())));
            for (k, e) in kept.iter() {
                acc = acc.mul_raw(&Fraction::kernel(Expr::pow(k.clone(), e.clone()), xs.clone()));
            }
            if p.as_constant().is_none() {
                acc = acc.mul_raw(&Fraction::kernel(p.to_expr(), xs.clone()));
            }
        }
    }
    for (d, m) in &fb.den {
        if !integral && m % 2 == 0 {
            let e = mul_exp(&xs, &Expr::int(-1));
            acc = acc.mul_raw(&Fraction::kernel(Expr::pow(d.to_expr(), Expr::int(*m as i64)), e));
        } else {
            let e = mul_exp(&xs, &Expr::int(-(*m as i64)));
            acc = acc.mul_raw(&Fraction::kernel(d.to_expr(), e));
        }
    }
    acc.cancel()
}

fn function(f: Elementary, a: &Expr) -> Fraction {
    match f {
        Elementary::Sqrt => power(a, &Expr::ratio(1, 2)),
        Elementary::Exp => {
            let fa = normalize(a);
            if !fa.den.is_empty() {
                return Fraction::kernel(e_kernel(), fa.to_expr());
            }
            let mut acc = Fraction::one();
            let mut rest = Poly::zero();
            for (m, c) in fa.num.terms() {
                let ln_arg = match m.0.iter().next() {
                    Some((Expr::Func(Elementary::Ln, y), e)) if m.0.len() == 1 && e.is_one() => Some(y),
                    _ => None,
                };
                match ln_arg {
                    Some(y) => acc = acc.mul_raw(&power(y, &Expr::rational(c.clone()))),
                    None => rest.add_term(m.clone(), c.clone()),
                }
            }
            if !rest.is_zero() {
                acc = acc.mul_raw(&Fraction::kernel(e_kernel(), rest.to_expr()));
            }
            acc.cancel()
        }
        Elementary::Ln => {
            let fa = normalize(a);
            if fa.den.is_empty() && fa.num.len() == 1 {
                let (m, c) = fa.num.0.iter().next().unwrap();
                if c.is_one() && m.0.len() == 1 {
                    let (k, y) = m.0.iter().next().unwrap();
                    if *k == e_kernel() {
                        return normalize(y);
                    }
                }
            }
            atom(Expr::func(f, fa.to_expr()))
        }
        Elementary::Sin | Elementary::Cos | Elementary::Tan | Elementary::Atan => {
            let mut arg = simplify(a);
            let neg = is_negated(&arg);
            if neg {
                arg = simplify(&-arg);
            }
            let v = atom(Expr::func(f, arg));
            if neg && f != Elementary::Cos {
                v.neg()
            } else {
                v
            }
        }
    }
}

fn atom(e: Expr) -> Fraction {
    match e {
        Expr::Func(..) | Expr::Opaque(_) | Expr::Sym(_) => Fraction::from_poly(Poly::term(Mono::kernel(e, Expr::one()), BigRational::one())),
        e => normalize(&e),
    }
}

thread_local! {
    static SIMPLIFY_CACHE: RefCell<HashMap<Expr, Expr>> = RefCell::new(HashMap::new());
    static POSITIVE_BASES: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with every power base taken as positive, so that
/// `(b^2)^(1/2)` merges to `b`. Only sound on such a branch.
pub fn with_positive_bases<T>(f: impl FnOnce() -> T) -> T {
    let prev = POSITIVE_BASES.with(|p| p.replace(true));
    let v = f();
    POSITIVE_BASES.with(|p| p.set(prev));
    v
}

fn normalize(e: &Expr) -> Fraction {
    match e {
        Expr::Num(Number::Rational(q)) => Fraction::constant(q.clone()),
        Expr::Num(Number::Decimal(d)) => match BigRational::from_float(*d) {
            Some(q) => Fraction::constant(q),
            None => Fraction::from_poly(Poly::term(Mono::kernel(e.clone(), Expr::one()), BigRational::one())),
        },
        Expr::Sym(_) => atom(e.clone()),
        Expr::Add(ts) => {
            let mut acc = Fraction::zero();
            for t in ts.iter() {
                acc = acc.add_raw(&normalize(t));
            }
            acc.cancel()
        }
        Expr::Mul(fs) => {
            let mut acc = Fraction::one();
            for f in fs.iter() {
                acc = acc.mul_raw(&normalize(f));
                if acc.is_zero() {
                    return acc;
                }
            }
            acc.cancel()
        }
        Expr::Pow(b, x) => power(b, x),
        Expr::Func(f, a) => function(*f, a),
        Expr::Opaque(o) => {
            let args = o.args.iter().map(simplify).collect();
            atom(Expr::Opaque(Arc::new(Opaque { name: o.name.clone(), orders: o.orders.clone(), args })))
        }
    }
}

/// Rewrites `e` into the expanded rational normal form.
pub fn simplify(e: &Expr) -> Expr {
    if matches!(e, Expr::Num(Number::Rational(_)) | Expr::Sym(_)) {
        return e.clone();
    }
    if POSITIVE_BASES.with(Cell::get) {
        return normalize(e).to_expr();
    }
    if let Some(v) = SIMPLIFY_CACHE.with(|c| c.borrow().get(e).cloned()) {
        return v;
    }
    let v = normalize(e).to_expr();
    SIMPLIFY_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > CACHE_LIMIT {
            c.clear();
        }
        c.insert(e.clone(), v.clone());
    });
    v
}

/// Symbolic zero test: true when the normal-form numerator vanishes.
/// A false result is not a proof of non-vanishing.
pub fn is_zero(e: &Expr) -> bool {
    normalize(e).is_zero()
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn z(s: &str) -> bool {
        is_zero(&parse(s).unwrap())
    }

    fn same(a: &str, b: &str) {
        assert_eq!(simplify(&parse(a).unwrap()), simplify(&parse(b).unwrap()), "{a} vs {b}");
    }

    #[test]
    fn expands_and_cancels() {
        assert!(z("(x + 1)^2 - x^2 - 2*x - 1"));
        assert!(z("(x^2 - 1)/(x - 1) - x - 1"));
        assert!(z("1/(x + 1) + 1/(x - 1) - 2*x/(x^2 - 1)"));
        assert!(z("a/b - a*b^-1"));
        assert!(!z("x/(x + 1) - 1"));
        same("(x^2 - 1)/(x + 1)", "x - 1");
    }

    #[test]
    fn powers_and_exponentials() {
        assert!(z("sqrt(x)^2 - x"));
        assert!(z("x^r*x^(1-r) - x"));
        assert!(z("exp(a)*exp(b) - exp(a + b)"));
        assert!(z("ln(exp(y)) - y"));
        assert!(z("exp(2*ln(x)) - x^2"));
        assert!(z("(x + y)^(1/2)*(x + y)^(3/2) - (x + y)^2"));
        assert!(z("2^(1/2)*8^(1/2) - 4"));
        assert!(z("(x^3)^(1/3) - x"));
        assert!(z("1/sqrt(1 + x) - (1 + x)^(-1/2)"));
        assert!(z("(4*x + 4*y)^(1/2) - 2*(x + y)^(1/2)"));
        assert!(!z("sqrt(x^2) - x"));
        assert!(!z("(x^2*y)^(3/2) - x^3*y^(3/2)"));
        assert!(!z("(1/(x + 1)^2)^(1/2) - 1/(x + 1)"));
        assert!(z("sqrt(x^2)^2 - x^2"));
        assert!(with_positive_bases(|| z("sqrt(x^2) - x")));
    }

    #[test]
    fn odd_and_even_functions() {
        assert!(z("sin(u - w) + sin(w - u)"));
        assert!(z("cos(u - w) - cos(w - u)"));
        assert!(!z("sin(u)^2 + cos(u)^2 - 1"));
    }

    #[test]
    fn decimals_are_exact() {
        assert!(z("0.5*x - x/2"));
        assert!(!z("0.1 - 1/10"));
    }

    #[test]
    fn simplify_is_idempotent() {
        for s in ["(a + b)^(1/2)/(x - y)^2", "exp(x)*(1 + exp(-x))", "(-x)^(1/2)*(-x)^(1/2)", "x^(-r/3)*(x*y)^(r/3)"] {
            let once = simplify(&parse(s).unwrap());
            assert_eq!(simplify(&once), once, "{s}");
        }
        same("(-x)^(1/2)*(-x)^(1/2)", "-x");
    }

    #[test]
    fn fraction_arithmetic() {
        let a = Fraction::from_expr(&parse("x + 1").unwrap());
        let b = Fraction::from_expr(&parse("x - 1").unwrap());
        let q = a.mul(&b).div(&b).unwrap();
        assert_eq!(q, a);
        assert!(a.sub(&a).is_zero());
        assert!(Fraction::zero().recip().is_none());
    }
}
