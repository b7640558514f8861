use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// A scenario file: declarations, named entities and an ordered list of
/// checks. Expressions are grammar strings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub declarations: Declarations,
    /// Named abbreviations, expanded wherever the name appears. Later
    /// entries may use earlier ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub macros: Vec<NamedExpr>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: BTreeMap<String, SystemSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ansatze: BTreeMap<String, AnsatzSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Declarations {
    #[serde(default)]
    pub independents: Vec<String>,
    #[serde(default)]
    pub dependents: Vec<String>,
    /// Opaque functions and their arities.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, ParamSpec>,
    /// Sample points where any of these is not positive are skipped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
}

/// A parameter is either fixed (`value`), sampled over a list of values
/// (`samples`, one sampling run each) or free.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedExpr {
    pub name: String,
    pub expr: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// Defaults to the scenario declarations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub independents: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependents: Option<Vec<String>>,
    pub equations: Vec<EquationSpec>,
}

/// `lead` + `rhs`: solved form. `residual` + `lead`: solved for the lead.
/// `residual` alone: unsolved.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
}

/// Exactly one of the two maps is non-empty. Keys of `coefficients` are
/// variables (`x1`, `u`, `diff(u,x)`); keys of `characteristic` are
/// dependent variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coefficients: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub characteristic: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    /// Prescribed dependent variables or first derivatives.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derivatives: BTreeMap<String, String>,
    /// Prescribed solutions `u = ...`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub solution: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub invariants: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keep: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub basis: Vec<String>,
}

/// Concrete interpretation of a declared opaque function, by closed-form
/// `body` or as the integral of `integral` from `from`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    pub params: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub from: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub var: String,
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
    /// Finite-difference step.
    pub h: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicitSpec {
    pub unknown: String,
    pub relation: String,
    pub value: String,
    /// Root bracket `[lo, hi]`, as expressions in the grid variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<String>,
    #[serde(default = "default_newton_tol")]
    pub newton_tolerance: f64,
}

fn default_newton_tol() -> f64 {
    1e-12
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    MustPass,
    ReportOnly,
}

/// What counts as success for a check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    #[default]
    Zero,
    Nonzero,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "is_default")]
    pub policy: Policy,
    #[serde(default, skip_serializing_if = "is_default")]
    pub expect: Expectation,
    /// Parameter values fixed for this check only.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(flatten)]
    pub body: CheckBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckBody {
    CheckSymmetry {
        operator: String,
        system: String,
    },
    CheckConditional {
        operator: String,
        system: String,
    },
    CheckLieBacklund {
        operator: String,
        system: String,
    },
    CheckInvariant {
        operator: String,
        expressions: Vec<String>,
    },
    LieBracket {
        left: String,
        right: String,
        expected: String,
    },
    /// Expressions that must vanish once the given functions, and
    /// optionally a solution for a dependent variable, are substituted.
    Identity {
        expressions: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        functions: Vec<FunctionSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dependent: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        solution: Option<String>,
    },
    ImplicitDerivative {
        ansatz: String,
        target: String,
        wrt: String,
        expected: String,
    },
    ReduceAndCompare {
        ansatz: String,
        system: String,
        expected: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        variables: Vec<String>,
    },
    /// The system's equations and compatibility conditions on an ansatz
    /// whose unknown functions are given concretely.
    AnsatzResiduals {
        ansatz: String,
        system: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        functions: Vec<FunctionSpec>,
    },
    /// Compatibility conditions of a derivative ansatz against expected
    /// expressions, compared up to sign.
    Compatibility {
        ansatz: String,
        expected: Vec<String>,
    },
    CorrespondingSystem {
        equation: String,
        dependent: String,
        independents: [String; 2],
        names: Vec<String>,
        expected: Vec<String>,
    },
    /// Hodograph transform of the quasilinear part of a corresponding
    /// system, or of explicitly given residuals.
    Hodograph {
        #[serde(default, skip_serializing_if = "String::is_empty")]
        equation: String,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        dependent: String,
        independents: [String; 2],
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        names: Vec<String>,
        /// The two new variables of the quasilinear subsystem.
        pair: [String; 2],
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        residuals: Vec<String>,
    },
    InvarianceCondition {
        operator: String,
        dependent: String,
        solution: String,
        /// Empty when the solution should be invariant identically.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expected: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        variables: Vec<String>,
    },
    VerifySolution {
        equation: String,
        dependent: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        solution: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit: Option<ImplicitSpec>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        functions: Vec<FunctionSpec>,
        grid: GridSpec,
        tolerance: f64,
        /// Minimum ratio of residuals under h -> h/2.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        richardson: Option<f64>,
        /// Also substitute the solution symbolically.
        #[serde(default, skip_serializing_if = "is_default")]
        symbolic: bool,
        /// Require the grid residual to be exactly zero.
        #[serde(default, skip_serializing_if = "is_default")]
        exact: bool,
    },
    Backlund {
        seed: String,
        seed_equation: String,
        /// Right-hand sides for the derivatives along the first and second
        /// axes, in `u`, jets of `w` and parameters.
        first: String,
        second: String,
        /// Must stay positive along the integration.
        guard: String,
        target: String,
        cross: String,
        grid: GridSpec,
        /// Point where `u = w`.
        anchor: [f64; 2],
        step: f64,
        tolerance: f64,
        #[serde(default, skip_serializing_if = "is_default")]
        exact: bool,
    },
    /// RK4 solution of `y' = rhs` against a closed form, plus the closed
    /// form substituted symbolically.
    OdeClosedForm {
        variable: String,
        unknown: String,
        rhs: String,
        closed: String,
        interval: [f64; 2],
        step: f64,
        tolerance: f64,
        /// Interpretations used when substituting the closed form.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        functions: Vec<FunctionSpec>,
        /// Samplers used for the numeric comparison.
        numeric_functions: Vec<FunctionSpec>,
    },
    /// Drift of invariants along RK4 flow lines of a point operator.
    FlowInvariance {
        operator: String,
        invariants: Vec<String>,
        starts: Vec<BTreeMap<String, f64>>,
        length: f64,
        steps: usize,
        tolerance: f64,
    },
}

impl CheckBody {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckBody::CheckSymmetry { .. } => "check-symmetry",
            CheckBody::CheckConditional { .. } => "check-conditional",
            CheckBody::CheckLieBacklund { .. } => "check-lie-backlund",
            CheckBody::CheckInvariant { .. } => "check-invariant",
            CheckBody::LieBracket { .. } => "lie-bracket",
            CheckBody::Identity { .. } => "identity",
            CheckBody::ImplicitDerivative { .. } => "implicit-derivative",
            CheckBody::ReduceAndCompare { .. } => "reduce-and-compare",
            CheckBody::AnsatzResiduals { .. } => "ansatz-residuals",
            CheckBody::Compatibility { .. } => "compatibility",
            CheckBody::CorrespondingSystem { .. } => "corresponding-system",
            CheckBody::Hodograph { .. } => "hodograph",
            CheckBody::InvarianceCondition { .. } => "invariance-condition",
            CheckBody::VerifySolution { .. } => "verify-solution",
            CheckBody::Backlund { .. } => "backlund",
            CheckBody::OdeClosedForm { .. } => "ode-closed-form",
            CheckBody::FlowInvariance { .. } => "flow-invariance",
        }
    }

    /// Named entities the check refers to, as (table, name).
    pub fn references(&self) -> Vec<(&'static str, &str)> {
        match self {
            CheckBody::CheckSymmetry { operator, system }
            | CheckBody::CheckConditional { operator, system }
            | CheckBody::CheckLieBacklund { operator, system } => vec![("operator", operator), ("system", system)],
            CheckBody::CheckInvariant { operator, .. }
            | CheckBody::InvarianceCondition { operator, .. }
            | CheckBody::FlowInvariance { operator, .. } => vec![("operator", operator)],
            CheckBody::LieBracket { left, right, expected } => {
                vec![("operator", left), ("operator", right), ("operator", expected)]
            }
            CheckBody::ImplicitDerivative { ansatz, .. } | CheckBody::Compatibility { ansatz, .. } => vec![("ansatz", ansatz)],
            CheckBody::ReduceAndCompare { ansatz, system, .. } | CheckBody::AnsatzResiduals { ansatz, system, .. } => {
                vec![("ansatz", ansatz), ("system", system)]
            }
            _ => vec![],
        }
    }
}
