use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{build_pwl, encode_pwl_incremental, fit_quadratic, QuadFit, UnivariateFn};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::{Constraint, Expression, GdpModel, VarId, Variable};
use crate::transform::{FlatModel, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum ApproxPolicy {
    /// Least-squares quadratic on `samples` uniform points.
    Quad { samples: usize },
    /// Incremental piecewise-linear model with `segments` uniform intervals.
    Pwl { segments: usize },
}

impl ApproxPolicy {
    pub fn quad() -> Self {
        ApproxPolicy::Quad {
            samples: super::DEFAULT_FIT_SAMPLES,
        }
    }

    pub fn pwl(segments: usize) -> Self {
        ApproxPolicy::Pwl { segments }
    }
}

impl fmt::Display for ApproxPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxPolicy::Quad { samples } => write!(f, "quad({samples} samples)"),
            ApproxPolicy::Pwl { segments } => write!(f, "pwl({segments} segments)"),
        }
    }
}

/// One approximated term (per variable, function and scope).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub kind: String,
    pub var: VarId,
    pub var_name: String,
    /// `global` or the owning disjunct's label.
    pub scope: String,
    pub domain: Interval,
    pub policy: String,
    pub max_abs_error: f64,
    pub rms_error: f64,
    pub added_variables: usize,
    pub added_constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub policy: ApproxPolicy,
    pub terms: Vec<TermReport>,
}

impl ApproxReport {
    pub fn added_variables(&self) -> usize {
        self.terms.iter().map(|t| t.added_variables).sum()
    }

    pub fn added_constraints(&self) -> usize {
        self.terms.iter().map(|t| t.added_constraints).sum()
    }

    /// Largest certified error among terms on `var`.
    pub fn max_error_for(&self, var: VarId) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| t.var == var)
            .map(|t| t.max_abs_error)
            .reduce(f64::max)
    }
}

/// Models whose power/log terms can be approximated.
pub trait Approximate: Sized {
    fn approximate(&self, policy: ApproxPolicy) -> Result<(Self, ApproxReport)>;
}

/// Replaces every power and log term according to `policy`.
///
/// Quadratic fits are folded into the host expression as a square, a
/// linear and a constant term. Piecewise-linear approximations substitute a
/// fresh output variable and append the incremental encoding to the scope
/// owning the term: disjunct-local terms get their rows inside that
/// disjunct so they are relaxed along with it.
pub fn apply_approximation<M: Approximate>(model: &M, policy: ApproxPolicy) -> Result<(M, ApproxReport)> {
    model.approximate(policy)
}

struct Approximator {
    policy: ApproxPolicy,
    variables: Vec<Variable>,
    fits: HashMap<(VarId, u64), QuadFit>,
    outputs: HashMap<(String, VarId, u64), VarId>,
    reported: HashSet<(String, VarId, u64)>,
    terms: Vec<TermReport>,
}

impl Approximator {
    fn new(policy: ApproxPolicy, variables: Vec<Variable>) -> Self {
        Approximator {
            policy,
            variables,
            fits: HashMap::new(),
            outputs: HashMap::new(),
            reported: HashSet::new(),
            terms: Vec::new(),
        }
    }

    fn domain_of(&self, var: VarId, f: UnivariateFn) -> Result<Interval> {
        let v = &self.variables[var.0];
        if !v.lower.is_finite() || !v.upper.is_finite() {
            return Err(Error::UnboundedVariable {
                name: v.name.clone(),
                lower: v.lower,
                upper: v.upper,
            });
        }
        let dom = v.bounds();
        f.check_domain(dom)?;
        Ok(dom)
    }

    fn report(&mut self, scope: &str, var: VarId, f: UnivariateFn, entry: impl FnOnce(&Self) -> TermReport) {
        if self.reported.insert((scope.to_string(), var, f.key())) {
            let r = entry(self);
            self.terms.push(r);
        }
    }

    /// Rewrites `expr` in place; encoding rows for `scope` go to `rows`.
    fn rewrite(&mut self, expr: &mut Expression, scope: &str, rows: &mut Vec<Constraint>) -> Result<()> {
        if !expr.has_univariate_nonlinear() {
            return Ok(());
        }
        let (powers, logs) = expr.take_univariate();
        let terms = powers
            .iter()
            .map(|t| (t.coef, t.var, UnivariateFn::Power(t.exponent)))
            .chain(logs.iter().map(|t| (t.coef, t.var, UnivariateFn::Log)));
        for (coef, var, f) in terms {
            let dom = self.domain_of(var, f)?;
            if dom.width() < 1e-12 {
                expr.add_constant(coef * f.eval(dom.lo));
                continue;
            }
            match self.policy {
                ApproxPolicy::Quad { samples } => {
                    let fit = match self.fits.get(&(var, f.key())) {
                        Some(fit) => fit.clone(),
                        None => {
                            let fit = fit_quadratic(f, dom, samples)?;
                            self.fits.insert((var, f.key()), fit.clone());
                            fit
                        }
                    };
                    expr.add_bilinear(coef * fit.a, var, var);
                    expr.add_linear(coef * fit.b, var);
                    expr.add_constant(coef * fit.c);
                    let policy = self.policy.to_string();
                    self.report(scope, var, f, |s| TermReport {
                        kind: f.to_string(),
                        var,
                        var_name: s.variables[var.0].name.clone(),
                        scope: scope.to_string(),
                        domain: dom,
                        policy,
                        max_abs_error: fit.max_abs_error,
                        rms_error: fit.rms_error,
                        added_variables: 0,
                        added_constraints: 0,
                    });
                }
                ApproxPolicy::Pwl { segments } => {
                    let key = (scope.to_string(), var, f.key());
                    let out = match self.outputs.get(&key) {
                        Some(&out) => out,
                        None => {
                            let table = build_pwl(f, dom, segments)?;
                            let name = format!("{}[{}]", f, self.variables[var.0].name)
                                .replace("x^", "pow")
                                .replace("ln(x)", "ln");
                            let (lo, hi) = (table.values[0], *table.values.last().unwrap());
                            self.variables.push(Variable::continuous(
                                format!("pwl.{name}@{scope}"),
                                lo.min(hi),
                                lo.max(hi),
                            ));
                            let out = VarId(self.variables.len() - 1);
                            let before = self.variables.len();
                            let enc = encode_pwl_incremental(
                                &table,
                                var,
                                out,
                                &mut self.variables,
                                &format!("pwl.{name}@{scope}"),
                            )?;
                            let added_vars = self.variables.len() - before + 1;
                            let added_rows = enc.rows.len();
                            rows.extend(enc.rows);
                            let (max, rms) = table.grid_errors(f);
                            let policy = self.policy.to_string();
                            self.report(scope, var, f, |s| TermReport {
                                kind: f.to_string(),
                                var,
                                var_name: s.variables[var.0].name.clone(),
                                scope: scope.to_string(),
                                domain: dom,
                                policy,
                                max_abs_error: max,
                                rms_error: rms,
                                added_variables: added_vars,
                                added_constraints: added_rows,
                            });
                            self.outputs.insert(key, out);
                            out
                        }
                    };
                    expr.add_linear(coef, out);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> (Vec<Variable>, ApproxReport) {
        (
            self.variables,
            ApproxReport {
                policy: self.policy,
                terms: self.terms,
            },
        )
    }
}

const GLOBAL_SCOPE: &str = "global";

impl Approximate for GdpModel {
    fn approximate(&self, policy: ApproxPolicy) -> Result<(Self, ApproxReport)> {
        let mut m = self.clone();
        let mut ap = Approximator::new(policy, std::mem::take(&mut m.variables));
        let mut global_rows = Vec::new();
        ap.rewrite(&mut m.objective, GLOBAL_SCOPE, &mut global_rows)?;
        for c in &mut m.globals {
            ap.rewrite(&mut c.body, GLOBAL_SCOPE, &mut global_rows)?;
        }
        m.globals.extend(global_rows);
        for d in &mut m.disjunctions {
            for u in &mut d.disjuncts {
                let scope = u.label.clone();
                let mut local = Vec::new();
                for c in &mut u.constraints {
                    ap.rewrite(&mut c.body, &scope, &mut local)?;
                }
                u.constraints.extend(local);
            }
        }
        let (vars, report) = ap.finish();
        m.variables = vars;
        Ok((m, report))
    }
}

impl Approximate for FlatModel {
    fn approximate(&self, policy: ApproxPolicy) -> Result<(Self, ApproxReport)> {
        let mut m = self.clone();
        let mut ap = Approximator::new(policy, std::mem::take(&mut m.variables));
        let mut rows = Vec::new();
        ap.rewrite(&mut m.objective, GLOBAL_SCOPE, &mut rows)?;
        for c in &mut m.constraints {
            ap.rewrite(&mut c.body, GLOBAL_SCOPE, &mut rows)?;
        }
        let (vars, report) = ap.finish();
        m.variables = vars;
        for r in rows {
            let term = r.label.split(".x_link").next().unwrap_or(&r.label).to_string();
            m.push(r, Provenance::Approximation { term });
        }
        Ok((m, report))
    }
}
