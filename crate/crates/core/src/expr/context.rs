use std::collections::{BTreeMap, BTreeSet};

use super::{name, Name};

/// Symbol declarations used to classify identifiers while parsing.
/// Identifiers that are neither independent nor dependent variables are
/// parameters. Calls are accepted only for built-ins and declared opaque
/// functions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    pub independents: BTreeSet<Name>,
    pub dependents: BTreeSet<Name>,
    pub functions: BTreeMap<Name, usize>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declarations shared by the built-in scenarios: independent variables
    /// `t, x, x0..x3`, dependent variables `u, w, v1..v3` and unary opaque
    /// functions `F, A, B, H, f, g, h, phi, phi1, phi2`.
    pub fn standard() -> Self {
        let mut c = Context::new()
            .with_independents(&["t", "x", "x0", "x1", "x2", "x3"])
            .with_dependents(&["u", "w", "v1", "v2", "v3"]);
        for f in ["F", "A", "B", "H", "f", "g", "h", "phi", "phi1", "phi2"] {
            c = c.with_function(f, 1);
        }
        c
    }

    pub fn with_independents(mut self, xs: &[&str]) -> Self {
        self.independents.extend(xs.iter().map(|s| name(s)));
        self
    }

    pub fn with_dependents(mut self, us: &[&str]) -> Self {
        self.dependents.extend(us.iter().map(|s| name(s)));
        self
    }

    pub fn with_function(mut self, f: &str, arity: usize) -> Self {
        self.functions.insert(name(f), arity);
        self
    }

    pub fn is_independent(&self, s: &str) -> bool {
        self.independents.contains(s)
    }

    pub fn is_dependent(&self, s: &str) -> bool {
        self.dependents.contains(s)
    }

    pub fn arity(&self, f: &str) -> Option<usize> {
        self.functions.get(f).copied()
    }

    pub fn parse(&self, text: &str) -> Result<super::Expr, super::ParseError> {
        super::parse::parse_with(self, text)
    }
}
