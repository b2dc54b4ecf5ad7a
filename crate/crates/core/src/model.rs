//! Disjunctive model representation.
//!
//! A [`GdpModel`] holds bounded variables, an objective, global rows,
//! disjunctions of Boolean-guarded blocks and CNF logic over the guards.
//! Expressions admit exactly four term kinds: linear, bilinear (including
//! squares), concave powers `x^p` with `0 < p < 1`, and natural logs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Position of a variable in its model's variable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    #[default]
    Continuous,
    Binary,
}

/// JSON has no infinities, so an absent bound is written as `null`.
mod bound {
    use serde::{Deserialize, Deserializer, Serializer};

    fn ser<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(v)
        } else {
            s.serialize_none()
        }
    }

    pub mod lower {
        use super::*;
        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            ser(*v, s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
        }
    }

    pub mod upper {
        use super::*;
        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            ser(*v, s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(with = "bound::lower")]
    pub lower: f64,
    #[serde(with = "bound::upper")]
    pub upper: f64,
    #[serde(default)]
    pub kind: VarKind,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Variable {
            name: name.into(),
            lower,
            upper,
            kind: VarKind::Continuous,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            kind: VarKind::Binary,
        }
    }

    pub fn bounds(&self) -> Interval {
        Interval::new(self.lower, self.upper)
    }

    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTerm {
    pub coef: f64,
    pub var: VarId,
}

/// `coef * first * second` with `first <= second`; `first == second` is a square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearTerm {
    pub coef: f64,
    pub first: VarId,
    pub second: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coef: f64,
    pub var: VarId,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm {
    pub coef: f64,
    pub var: VarId,
}

/// Sum of a constant and the four admitted term kinds.
///
/// Terms over the same variables are merged on insertion and bilinear
/// pairs are stored in ascending id order, so the stored form does not
/// depend on how the expression was built.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "repr::ExprRepr", from = "repr::ExprRepr")]
pub struct Expression {
    constant: f64,
    linear: Vec<LinearTerm>,
    bilinear: Vec<BilinearTerm>,
    powers: Vec<PowerTerm>,
    logs: Vec<LogTerm>,
}

impl Expression {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant_only(c: f64) -> Self {
        Expression {
            constant: c,
            ..Self::default()
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::new().with_linear(1.0, v)
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }
    pub fn linear(&self) -> &[LinearTerm] {
        &self.linear
    }
    pub fn bilinear(&self) -> &[BilinearTerm] {
        &self.bilinear
    }
    pub fn powers(&self) -> &[PowerTerm] {
        &self.powers
    }
    pub fn logs(&self) -> &[LogTerm] {
        &self.logs
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add_linear(&mut self, coef: f64, var: VarId) {
        match self.linear.iter_mut().find(|t| t.var == var) {
            Some(t) => t.coef += coef,
            None => self.linear.push(LinearTerm { coef, var }),
        }
    }

    pub fn add_bilinear(&mut self, coef: f64, a: VarId, b: VarId) {
        let (first, second) = if a <= b { (a, b) } else { (b, a) };
        match self
            .bilinear
            .iter_mut()
            .find(|t| t.first == first && t.second == second)
        {
            Some(t) => t.coef += coef,
            None => self.bilinear.push(BilinearTerm {
                coef,
                first,
                second,
            }),
        }
    }

    pub fn add_power(&mut self, coef: f64, var: VarId, exponent: f64) {
        match self
            .powers
            .iter_mut()
            .find(|t| t.var == var && t.exponent.to_bits() == exponent.to_bits())
        {
            Some(t) => t.coef += coef,
            None => self.powers.push(PowerTerm {
                coef,
                var,
                exponent,
            }),
        }
    }

    pub fn add_log(&mut self, coef: f64, var: VarId) {
        match self.logs.iter_mut().find(|t| t.var == var) {
            Some(t) => t.coef += coef,
            None => self.logs.push(LogTerm { coef, var }),
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.add_constant(c);
        self
    }
    pub fn with_linear(mut self, coef: f64, var: VarId) -> Self {
        self.add_linear(coef, var);
        self
    }
    pub fn with_bilinear(mut self, coef: f64, a: VarId, b: VarId) -> Self {
        self.add_bilinear(coef, a, b);
        self
    }
    pub fn with_power(mut self, coef: f64, var: VarId, exponent: f64) -> Self {
        self.add_power(coef, var, exponent);
        self
    }
    pub fn with_log(mut self, coef: f64, var: VarId) -> Self {
        self.add_log(coef, var);
        self
    }

    /// Adds every term of `other`, scaled by `k`.
    pub fn add_scaled(&mut self, k: f64, other: &Expression) {
        self.constant += k * other.constant;
        for t in &other.linear {
            self.add_linear(k * t.coef, t.var);
        }
        for t in &other.bilinear {
            self.add_bilinear(k * t.coef, t.first, t.second);
        }
        for t in &other.powers {
            self.add_power(k * t.coef, t.var, t.exponent);
        }
        for t in &other.logs {
            self.add_log(k * t.coef, t.var);
        }
    }

    pub fn scaled(&self, k: f64) -> Expression {
        let mut e = Expression::new();
        e.add_scaled(k, self);
        e
    }

    pub fn is_linear(&self) -> bool {
        self.bilinear.is_empty() && self.powers.is_empty() && self.logs.is_empty()
    }

    pub fn has_univariate_nonlinear(&self) -> bool {
        !self.powers.is_empty() || !self.logs.is_empty()
    }

    /// Removes and returns the power and log terms.
    pub(crate) fn take_univariate(&mut self) -> (Vec<PowerTerm>, Vec<LogTerm>) {
        (
            std::mem::take(&mut self.powers),
            std::mem::take(&mut self.logs),
        )
    }

    /// Every variable referenced, with repetition.
    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.linear
            .iter()
            .map(|t| t.var)
            .chain(self.bilinear.iter().flat_map(|t| [t.first, t.second]))
            .chain(self.powers.iter().map(|t| t.var))
            .chain(self.logs.iter().map(|t| t.var))
    }

    /// Exact value at `x`. Out-of-domain power/log arguments produce NaN.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.linear {
            v += t.coef * x[t.var.0];
        }
        for t in &self.bilinear {
            v += t.coef * x[t.first.0] * x[t.second.0];
        }
        for t in &self.powers {
            let xv = x[t.var.0];
            // tolerate round-off just below zero
            let xv = if xv < 0.0 && xv > -1e-12 { 0.0 } else { xv };
            v += t.coef * xv.powf(t.exponent);
        }
        for t in &self.logs {
            v += t.coef * x[t.var.0].ln();
        }
        v
    }
}

/// Tagged term list, the on-disk form of [`Expression`].
mod repr {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "lowercase")]
    pub enum TermRepr {
        Lin {
            coef: f64,
            var: VarId,
        },
        Bil {
            coef: f64,
            vars: [VarId; 2],
        },
        Pow {
            coef: f64,
            var: VarId,
            exponent: f64,
        },
        Log {
            coef: f64,
            var: VarId,
        },
    }

    #[derive(Serialize, Deserialize)]
    pub struct ExprRepr {
        #[serde(default)]
        pub constant: f64,
        #[serde(default)]
        pub terms: Vec<TermRepr>,
    }

    impl From<Expression> for ExprRepr {
        fn from(e: Expression) -> Self {
            let mut terms = Vec::new();
            terms.extend(e.linear.iter().map(|t| TermRepr::Lin {
                coef: t.coef,
                var: t.var,
            }));
            terms.extend(e.bilinear.iter().map(|t| TermRepr::Bil {
                coef: t.coef,
                vars: [t.first, t.second],
            }));
            terms.extend(e.powers.iter().map(|t| TermRepr::Pow {
                coef: t.coef,
                var: t.var,
                exponent: t.exponent,
            }));
            terms.extend(e.logs.iter().map(|t| TermRepr::Log {
                coef: t.coef,
                var: t.var,
            }));
            ExprRepr {
                constant: e.constant,
                terms,
            }
        }
    }

    impl From<ExprRepr> for Expression {
        fn from(r: ExprRepr) -> Self {
            let mut e = Expression::constant_only(r.constant);
            for t in r.terms {
                match t {
                    TermRepr::Lin { coef, var } => e.add_linear(coef, var),
                    TermRepr::Bil { coef, vars } => e.add_bilinear(coef, vars[0], vars[1]),
                    TermRepr::Pow {
                        coef,
                        var,
                        exponent,
                    } => e.add_power(coef, var, exponent),
                    TermRepr::Log { coef, var } => e.add_log(coef, var),
                }
            }
            e
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "le")]
    Le,
    #[serde(rename = "eq")]
    Eq,
    #[serde(rename = "ge")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "==",
            Relation::Ge => ">=",
        })
    }
}

/// `body (relation) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub body: Expression,
    #[serde(rename = "sense")]
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(label: impl Into<String>, body: Expression, relation: Relation, rhs: f64) -> Self {
        Constraint {
            label: label.into(),
            body,
            relation,
            rhs,
        }
    }

    pub fn le(label: impl Into<String>, body: Expression, rhs: f64) -> Self {
        Self::new(label, body, Relation::Le, rhs)
    }

    pub fn ge(label: impl Into<String>, body: Expression, rhs: f64) -> Self {
        Self::new(label, body, Relation::Ge, rhs)
    }

    pub fn eq(label: impl Into<String>, body: Expression, rhs: f64) -> Self {
        Self::new(label, body, Relation::Eq, rhs)
    }

    /// Amount by which `x` violates the row (0 when satisfied, NaN propagates).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.body.eval(x);
        if lhs.is_nan() {
            return f64::NAN;
        }
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        !self.body.is_linear()
    }
}

/// One Boolean-guarded block of a disjunction.
///
/// When the guard is true, `constraints` must hold. When it is false the
/// constraints are dropped and every variable in `fix_to_zero` is forced to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disjunct {
    pub label: String,
    pub guard: String,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub fix_to_zero: Vec<VarId>,
}

/// Exactly one of `disjuncts` is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disjunction {
    pub label: String,
    pub disjuncts: Vec<Disjunct>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub boolean: String,
    #[serde(default = "default_true")]
    pub positive: bool,
}

fn default_true() -> bool {
    true
}

impl Literal {
    pub fn pos(b: impl Into<String>) -> Self {
        Literal {
            boolean: b.into(),
            positive: true,
        }
    }
    pub fn neg(b: impl Into<String>) -> Self {
        Literal {
            boolean: b.into(),
            positive: false,
        }
    }
}

/// Disjunction of literals; the clause list is a CNF.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicClause {
    pub literals: Vec<Literal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GdpModel {
    pub variables: Vec<Variable>,
    pub objective: Expression,
    #[serde(default)]
    pub sense: Sense,
    #[serde(default)]
    pub globals: Vec<Constraint>,
    #[serde(default)]
    pub disjunctions: Vec<Disjunction>,
    #[serde(default)]
    pub logic: Vec<LogicClause>,
}

impl GdpModel {
    pub fn new(sense: Sense) -> Self {
        GdpModel {
            sense,
            ..Self::default()
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable::continuous(name, lower, upper));
        VarId(self.variables.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable::binary(name));
        VarId(self.variables.len() - 1)
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn bounds(&self) -> Vec<Interval> {
        self.variables.iter().map(Variable::bounds).collect()
    }

    /// Guard names in disjunction order.
    pub fn booleans(&self) -> Vec<&str> {
        self.disjunctions
            .iter()
            .flat_map(|d| d.disjuncts.iter().map(|u| u.guard.as_str()))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidBounds { var: VarId, lower: f64, upper: f64 },
    BinaryBounds { var: VarId },
    UnknownVariable { location: String, var: VarId },
    NonFinite { location: String },
    PowerExponent { location: String, var: VarId, exponent: f64 },
    PowerDomain { location: String, var: VarId },
    LogDomain { location: String, var: VarId },
    EmptyDisjunction { label: String, disjuncts: usize },
    DuplicateGuard { guard: String },
    FixToZeroBounds { disjunct: String, var: VarId },
    EmptyClause { clause: usize },
    UnknownBoolean { clause: usize, name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            InvalidBounds { var, lower, upper } => {
                write!(f, "invalid bounds: {var} has [{lower}, {upper}]")
            }
            BinaryBounds { var } => write!(f, "binary bounds: {var} not within [0, 1]"),
            UnknownVariable { location, var } => {
                write!(f, "unbound variable: {location} references undeclared {var}")
            }
            NonFinite { location } => write!(f, "non-finite coefficient or rhs in {location}"),
            PowerExponent {
                location,
                var,
                exponent,
            } => write!(
                f,
                "power exponent: {location} uses {var}^{exponent}, exponent must lie in (0, 1)"
            ),
            PowerDomain { location, var } => write!(
                f,
                "power domain: {location} raises {var} to a power but {var} admits negative values"
            ),
            LogDomain { location, var } => write!(
                f,
                "log domain: {location} takes ln({var}) but {var} admits values <= 0"
            ),
            EmptyDisjunction { label, disjuncts } => write!(
                f,
                "empty disjunction: '{label}' has {disjuncts} disjunct(s), at least 2 required"
            ),
            DuplicateGuard { guard } => {
                write!(f, "duplicate guard: Boolean '{guard}' guards more than one disjunct")
            }
            FixToZeroBounds { disjunct, var } => write!(
                f,
                "fix-to-zero bounds: disjunct '{disjunct}' fixes {var} whose bounds exclude 0"
            ),
            EmptyClause { clause } => write!(f, "empty clause: logic clause {clause} has no literals"),
            UnknownBoolean { clause, name } => write!(
                f,
                "unknown Boolean: logic clause {clause} names '{name}', which guards no disjunct"
            ),
        }
    }
}

/// All problems found in a model; the model is accepted iff this is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidModel(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

fn check_expression(
    e: &Expression,
    location: &str,
    vars: &[Variable],
    out: &mut Vec<Violation>,
) {
    let known = |v: VarId| v.0 < vars.len();
    if !e.constant().is_finite() {
        out.push(Violation::NonFinite {
            location: location.to_string(),
        });
    }
    let mut unknown = BTreeSet::new();
    for v in e.vars() {
        if !known(v) {
            unknown.insert(v);
        }
    }
    for var in unknown {
        out.push(Violation::UnknownVariable {
            location: location.to_string(),
            var,
        });
    }
    let coefs = e
        .linear()
        .iter()
        .map(|t| t.coef)
        .chain(e.bilinear().iter().map(|t| t.coef))
        .chain(e.powers().iter().map(|t| t.coef))
        .chain(e.logs().iter().map(|t| t.coef));
    if coefs.clone().any(|c| !c.is_finite()) {
        out.push(Violation::NonFinite {
            location: location.to_string(),
        });
    }
    for t in e.powers() {
        if !(t.exponent > 0.0 && t.exponent < 1.0) {
            out.push(Violation::PowerExponent {
                location: location.to_string(),
                var: t.var,
                exponent: t.exponent,
            });
        }
        if known(t.var) && !(vars[t.var.0].lower >= 0.0) {
            out.push(Violation::PowerDomain {
                location: location.to_string(),
                var: t.var,
            });
        }
    }
    for t in e.logs() {
        if known(t.var) && !(vars[t.var.0].lower > 0.0) {
            out.push(Violation::LogDomain {
                location: location.to_string(),
                var: t.var,
            });
        }
    }
}

fn check_constraint(c: &Constraint, location: &str, vars: &[Variable], out: &mut Vec<Violation>) {
    check_expression(&c.body, location, vars, out);
    if !c.rhs.is_finite() {
        out.push(Violation::NonFinite {
            location: location.to_string(),
        });
    }
}

pub fn validate_model(model: &GdpModel) -> ValidationReport {
    let mut out = Vec::new();
    let vars = &model.variables;
    for (i, v) in vars.iter().enumerate() {
        let id = VarId(i);
        if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
            out.push(Violation::InvalidBounds {
                var: id,
                lower: v.lower,
                upper: v.upper,
            });
        } else if v.is_binary() && (v.lower < 0.0 || v.upper > 1.0) {
            out.push(Violation::BinaryBounds { var: id });
        }
    }

    check_expression(&model.objective, "objective", vars, &mut out);
    for c in &model.globals {
        check_constraint(c, &format!("global '{}'", c.label), vars, &mut out);
    }

    let mut guards = BTreeMap::<&str, usize>::new();
    for d in &model.disjunctions {
        if d.disjuncts.len() < 2 {
            out.push(Violation::EmptyDisjunction {
                label: d.label.clone(),
                disjuncts: d.disjuncts.len(),
            });
        }
        for u in &d.disjuncts {
            *guards.entry(u.guard.as_str()).or_default() += 1;
            for c in &u.constraints {
                let loc = format!("disjunct '{}' row '{}'", u.label, c.label);
                check_constraint(c, &loc, vars, &mut out);
            }
            for &v in &u.fix_to_zero {
                match vars.get(v.0) {
                    None => out.push(Violation::UnknownVariable {
                        location: format!("disjunct '{}' fix-to-zero list", u.label),
                        var: v,
                    }),
                    Some(var) if !(var.lower <= 0.0 && 0.0 <= var.upper) => {
                        out.push(Violation::FixToZeroBounds {
                            disjunct: u.label.clone(),
                            var: v,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
    }
    for (g, n) in &guards {
        if *n > 1 {
            out.push(Violation::DuplicateGuard {
                guard: g.to_string(),
            });
        }
    }

    for (i, clause) in model.logic.iter().enumerate() {
        if clause.literals.is_empty() {
            out.push(Violation::EmptyClause { clause: i });
        }
        for lit in &clause.literals {
            if !guards.contains_key(lit.boolean.as_str()) {
                out.push(Violation::UnknownBoolean {
                    clause: i,
                    name: lit.boolean.clone(),
                });
            }
        }
    }

    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> GdpModel {
        let mut m = GdpModel::new(Sense::Min);
        let x = m.add_variable("x", 0.0, 1.0);
        m.objective = Expression::var(x);
        m
    }

    fn unit_disjunction(m: &mut GdpModel, name: &str) {
        m.disjunctions.push(Disjunction {
            label: name.into(),
            disjuncts: vec![
                Disjunct {
                    label: format!("{name}_on"),
                    guard: format!("Y_{name}"),
                    constraints: vec![],
                    fix_to_zero: vec![],
                },
                Disjunct {
                    label: format!("{name}_off"),
                    guard: format!("N_{name}"),
                    constraints: vec![],
                    fix_to_zero: vec![],
                },
            ],
        });
    }

    #[test]
    fn minimal_model_is_valid() {
        assert!(validate_model(&minimal()).is_ok());
    }

    #[test]
    fn log_on_signed_domain_is_rejected() {
        let mut m = GdpModel::new(Sense::Min);
        let x = m.add_variable("x", -1.0, 1.0);
        m.objective = Expression::new().with_log(1.0, x);
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].to_string().contains("log domain"));
    }

    #[test]
    fn log_at_zero_lower_bound_is_rejected() {
        let mut m = GdpModel::new(Sense::Min);
        let x = m.add_variable("x", 0.0, 1.0);
        m.objective = Expression::new().with_log(1.0, x);
        assert!(!validate_model(&m).is_ok());
    }

    #[test]
    fn unknown_boolean_in_clause() {
        let mut m = minimal();
        unit_disjunction(&mut m, "u1");
        m.logic.push(LogicClause {
            literals: vec![Literal::pos("Y_u1"), Literal::pos("Y3")],
        });
        let r = validate_model(&m);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].to_string().contains("unknown Boolean"));
    }

    #[test]
    fn reports_every_violation() {
        let mut m = GdpModel::new(Sense::Min);
        let x = m.add_variable("x", -1.0, 2.0);
        m.objective = Expression::new()
            .with_power(1.0, x, 1.5)
            .with_linear(1.0, VarId(7));
        m.disjunctions.push(Disjunction {
            label: "lonely".into(),
            disjuncts: vec![],
        });
        m.logic.push(LogicClause { literals: vec![] });
        let r = validate_model(&m);
        let text = r.to_string();
        for needle in [
            "power exponent",
            "power domain",
            "unbound variable",
            "empty disjunction",
            "empty clause",
        ] {
            assert!(text.contains(needle), "missing {needle} in\n{text}");
        }
    }

    #[test]
    fn fix_to_zero_requires_zero_in_bounds() {
        let mut m = minimal();
        let z = m.add_variable("z", 1.0, 2.0);
        unit_disjunction(&mut m, "u");
        m.disjunctions[0].disjuncts[0].fix_to_zero.push(z);
        let r = validate_model(&m);
        assert!(matches!(r.violations[0], Violation::FixToZeroBounds { .. }));
    }

    #[test]
    fn bilinear_order_is_canonical() {
        let a = Expression::new().with_bilinear(2.0, VarId(3), VarId(1));
        let b = Expression::new().with_bilinear(2.0, VarId(1), VarId(3));
        assert_eq!(a, b);
        assert_eq!(a.bilinear()[0].first, VarId(1));
    }

    #[test]
    fn like_terms_merge() {
        let e = Expression::new()
            .with_linear(1.0, VarId(0))
            .with_linear(2.0, VarId(0))
            .with_bilinear(1.0, VarId(1), VarId(0))
            .with_bilinear(1.0, VarId(0), VarId(1));
        assert_eq!(e.linear().len(), 1);
        assert_eq!(e.linear()[0].coef, 3.0);
        assert_eq!(e.bilinear()[0].coef, 2.0);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let mut m = minimal();
        let y = m.add_variable("y", 1.0, f64::INFINITY);
        m.globals.push(Constraint::le(
            "g",
            Expression::new()
                .with_bilinear(1.0, VarId(1), VarId(0))
                .with_power(3.0, y, 0.7)
                .with_log(-1.0, y)
                .with_constant(0.5),
            4.0,
        ));
        unit_disjunction(&mut m, "u");
        m.logic.push(LogicClause {
            literals: vec![Literal::neg("Y_u")],
        });
        let s1 = m.to_json_string();
        let back = GdpModel::from_json_str(&s1).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json_string(), s1);
        assert!(s1.contains("\"kind\": \"bil\""));
        assert!(s1.contains("\"upper\": null"));
    }
}
