use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use symverify::expr::{differentiate, evaluate, is_zero, name, simplify, Bindings, Context, Expr, Symbol};
use symverify::jet::{total_derivative, Equation, EquationSystem, JetSpace};
use symverify::sampling::SampleOptions;
use symverify::scenario::{builtin, builtin_named, run_scenario, run_suite, RunOptions, Scenario};
use symverify::symmetry::{check_symmetry, lie_bracket, InvarianceReport, Verdict, VectorField};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Symbol of `e` whose printed form is `key`.
fn lookup(e: &Expr, key: &str) -> Option<Symbol> {
    e.symbols().into_iter().find(|s| Expr::Sym(s.clone()).to_string() == key)
}

fn as_symbol(ctx: &Context, text: &str) -> PyResult<Symbol> {
    match ctx.parse(text).map_err(err)? {
        Expr::Sym(s) => Ok(s),
        other => Err(err(format!("not a variable: {other}"))),
    }
}

#[pyclass(name = "Context", module = "pysymverify", from_py_object)]
#[derive(Clone)]
struct PyContext(Context);

#[pymethods]
impl PyContext {
    /// Identifiers that are neither independent nor dependent are parameters.
    #[new]
    #[pyo3(signature = (independents, dependents, functions = None))]
    fn new(independents: Vec<String>, dependents: Vec<String>, functions: Option<BTreeMap<String, usize>>) -> Self {
        let xs: Vec<&str> = independents.iter().map(String::as_str).collect();
        let us: Vec<&str> = dependents.iter().map(String::as_str).collect();
        let mut c = Context::new().with_independents(&xs).with_dependents(&us);
        for (f, n) in functions.unwrap_or_default() {
            c = c.with_function(&f, n);
        }
        PyContext(c)
    }

    #[staticmethod]
    fn standard() -> Self {
        PyContext(Context::standard())
    }

    fn parse(&self, text: &str) -> PyResult<PyExpr> {
        self.0.parse(text).map(PyExpr).map_err(err)
    }
}

#[pyclass(name = "Expr", module = "pysymverify", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyExpr(Expr);

#[pymethods]
impl PyExpr {
    /// Parses with the standard context.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Context::standard().parse(text).map(PyExpr).map_err(err)
    }

    fn simplify(&self) -> PyExpr {
        PyExpr(simplify(&self.0))
    }

    fn is_zero(&self) -> bool {
        is_zero(&self.0)
    }

    /// Partial derivative with respect to a variable, named as printed.
    fn diff(&self, var: &str) -> PyExpr {
        match lookup(&self.0, var) {
            Some(s) => PyExpr(differentiate(&self.0, &s)),
            None => PyExpr(Expr::zero()),
        }
    }

    fn total_derivative(&self, x: &str) -> PyExpr {
        PyExpr(total_derivative(&self.0, x))
    }

    fn evaluate(&self, values: BTreeMap<String, f64>) -> PyResult<f64> {
        let mut b = Bindings::new();
        for (k, v) in values {
            if let Some(s) = lookup(&self.0, &k) {
                b.set(s, v);
            }
        }
        evaluate(&self.0, &b).map_err(err)
    }

    fn symbols(&self) -> Vec<String> {
        self.0.symbols().into_iter().map(|s| Expr::Sym(s).to_string()).collect()
    }

    fn __add__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(self.0.clone() + o.0.clone())
    }

    fn __sub__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(self.0.clone() - o.0.clone())
    }

    fn __mul__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(self.0.clone() * o.0.clone())
    }

    fn __truediv__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(self.0.clone() / o.0.clone())
    }

    fn __neg__(&self) -> PyExpr {
        PyExpr(-self.0.clone())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.0)
    }
}

#[pyclass(name = "System", module = "pysymverify")]
struct PySystem(EquationSystem);

#[pymethods]
impl PySystem {
    /// Equations are `lead = rhs` with a jet variable on the left, or bare
    /// residuals. Functions of the standard context are available.
    #[new]
    #[pyo3(signature = (independents, dependents, equations, context = None))]
    fn new(independents: Vec<String>, dependents: Vec<String>, equations: Vec<String>, context: Option<PyContext>) -> PyResult<Self> {
        let xs: Vec<&str> = independents.iter().map(String::as_str).collect();
        let us: Vec<&str> = dependents.iter().map(String::as_str).collect();
        let ctx = match context {
            Some(c) => c.0,
            None => Context { functions: Context::standard().functions, ..Context::new() }.with_independents(&xs).with_dependents(&us),
        };
        let mut sys = EquationSystem::new(&xs, &us);
        for text in &equations {
            let eq = match text.split_once('=') {
                Some((lhs, rhs)) => match ctx.parse(lhs).map_err(err)? {
                    Expr::Sym(Symbol::Jet(j)) => Equation::solved(j, ctx.parse(rhs).map_err(err)?).map_err(err)?,
                    other => return Err(err(format!("left side is not a jet variable: {other}"))),
                },
                None => Equation::new(ctx.parse(text).map_err(err)?),
            };
            sys = sys.with(eq).map_err(err)?;
        }
        Ok(PySystem(sys))
    }

    fn residuals(&self) -> Vec<String> {
        self.0.equations.iter().map(|e| e.residual.to_string()).collect()
    }
}

#[pyclass(name = "VectorField", module = "pysymverify", skip_from_py_object)]
#[derive(Clone)]
struct PyField(VectorField);

#[pymethods]
impl PyField {
    /// Coefficients keyed by variable, e.g. `{"x": "1", "u": "0"}`.
    #[staticmethod]
    #[pyo3(signature = (coefficients, context = None))]
    fn coefficients(coefficients: BTreeMap<String, String>, context: Option<PyContext>) -> PyResult<Self> {
        let ctx = context.map_or_else(Context::standard, |c| c.0);
        let mut m = BTreeMap::new();
        for (k, v) in coefficients {
            m.insert(as_symbol(&ctx, &k)?, ctx.parse(&v).map_err(err)?);
        }
        Ok(PyField(VectorField::Coefficients(m)))
    }

    /// Characteristics keyed by dependent variable.
    #[staticmethod]
    #[pyo3(signature = (characteristics, context = None))]
    fn evolutionary(characteristics: BTreeMap<String, String>, context: Option<PyContext>) -> PyResult<Self> {
        let ctx = context.map_or_else(Context::standard, |c| c.0);
        let mut m = BTreeMap::new();
        for (k, v) in characteristics {
            m.insert(name(&k), ctx.parse(&v).map_err(err)?);
        }
        Ok(PyField(VectorField::Evolutionary(m)))
    }

    fn components(&self) -> BTreeMap<String, String> {
        match &self.0 {
            VectorField::Coefficients(m) => m.iter().map(|(s, c)| (Expr::Sym(s.clone()).to_string(), simplify(c).to_string())).collect(),
            VectorField::Evolutionary(m) => m.iter().map(|(n, c)| (n.to_string(), simplify(c).to_string())).collect(),
        }
    }

    fn __repr__(&self) -> String {
        let parts: Vec<String> = self.components().into_iter().map(|(k, v)| format!("{k}: {v}")).collect();
        format!("VectorField({{{}}})", parts.join(", "))
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::SymbolicZero => "symbolic-zero",
        Verdict::NumericZero => "numeric-zero",
        Verdict::Nonzero => "nonzero",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn report_dict<'py>(py: Python<'py>, r: &InvarianceReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("verdict", verdict_str(r.verdict))?;
    d.set_item("holds", r.verdict.holds())?;
    d.set_item("residuals", r.residuals.iter().map(ToString::to_string).collect::<Vec<_>>())?;
    d.set_item("max_residual", r.max_residual())?;
    d.set_item("cross_check", r.cross_check.as_ref().map(|c| c.max_abs))?;
    Ok(d)
}

#[pyfunction]
fn bracket(a: &PyField, b: &PyField, independents: Vec<String>) -> PyResult<PyField> {
    let xs: Vec<&str> = independents.iter().map(String::as_str).collect();
    lie_bracket(&a.0, &b.0, &JetSpace::new(&xs)).map(PyField).map_err(err)
}

/// Invariance of the system under the field, symbolically or by seeded
/// sampling.
#[pyfunction]
#[pyo3(signature = (field, system, seed = None, samples = None))]
fn symmetry<'py>(py: Python<'py>, field: &PyField, system: &PySystem, seed: Option<u64>, samples: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let mut opts = SampleOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(n) = samples {
        opts.samples = n;
    }
    let r = check_symmetry(&field.0, &system.0, &opts).map_err(err)?;
    report_dict(py, &r)
}

#[pyfunction]
fn builtin_scenarios() -> Vec<String> {
    builtin().into_iter().map(|s| s.name).collect()
}

/// Runs a builtin scenario by name, or a scenario given as JSON text, and
/// returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, seed = None))]
fn run(py: Python<'_>, scenario: &str, seed: Option<u64>) -> PyResult<String> {
    let sc = if scenario.trim_start().starts_with('{') {
        Scenario::from_json(scenario).map_err(err)?
    } else {
        builtin_named(scenario).ok_or_else(|| err(format!("no builtin scenario '{scenario}'")))?
    };
    py.detach(|| run_scenario(&sc, &RunOptions { seed })).map(|r| r.to_json()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (seed = None))]
fn run_builtin_suite(py: Python<'_>, seed: Option<u64>) -> PyResult<Vec<String>> {
    let reports = py.detach(|| run_suite(&builtin(), &RunOptions { seed })).map_err(err)?;
    Ok(reports.iter().map(|r| r.to_json()).collect())
}

#[pymodule]
fn pysymverify(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyContext>()?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_builtin_suite, m)?)?;
    Ok(())
}
