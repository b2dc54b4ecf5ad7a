//! Flattening of disjunctive models: Big-M rows, exactly-one rows, logic
//! covering rows and fix-to-zero linking.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{interval_eval, Interval};
use crate::model::{
    validate_model, Constraint, Expression, GdpModel, LogicClause, Relation, Sense, VarId,
    VarKind, Variable,
};

/// Where a flattened row came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Global {
        label: String,
    },
    Disjunct {
        disjunction: String,
        disjunct: String,
        row: String,
    },
    ExactlyOne {
        disjunction: String,
    },
    FixToZero {
        disjunct: String,
        var: VarId,
    },
    Logic {
        clause: usize,
    },
    Approximation {
        term: String,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Global { label } => write!(f, "global '{label}'"),
            Provenance::Disjunct {
                disjunction,
                disjunct,
                row,
            } => write!(f, "{disjunction}/{disjunct}/{row}"),
            Provenance::ExactlyOne { disjunction } => write!(f, "exactly-one '{disjunction}'"),
            Provenance::FixToZero { disjunct, var } => write!(f, "fix {var} in '{disjunct}'"),
            Provenance::Logic { clause } => write!(f, "logic clause {clause}"),
            Provenance::Approximation { term } => write!(f, "approximation of {term}"),
        }
    }
}

/// A model with no disjunctions or logic left: rows, variables (including
/// the disjunct binaries) and a provenance entry per row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlatModel {
    pub variables: Vec<Variable>,
    pub objective: Expression,
    #[serde(default)]
    pub sense: Sense,
    #[serde(rename = "globals")]
    pub constraints: Vec<Constraint>,
    pub provenance: Vec<Provenance>,
    /// Binary standing for each disjunct guard.
    #[serde(default)]
    pub booleans: BTreeMap<String, VarId>,
}

impl FlatModel {
    pub fn bounds(&self) -> Vec<Interval> {
        self.variables.iter().map(Variable::bounds).collect()
    }

    pub fn push(&mut self, c: Constraint, p: Provenance) {
        self.constraints.push(c);
        self.provenance.push(p);
    }

    pub fn add_variable(&mut self, v: Variable) -> VarId {
        self.variables.push(v);
        VarId(self.variables.len() - 1)
    }

    pub fn n_binary(&self) -> usize {
        self.variables.iter().filter(|v| v.is_binary()).count()
    }

    pub fn n_continuous(&self) -> usize {
        self.variables.len() - self.n_binary()
    }

    pub fn n_nonlinear_constraints(&self) -> usize {
        self.constraints.iter().filter(|c| c.is_nonlinear()).count()
    }

    pub fn has_univariate_nonlinear(&self) -> bool {
        self.objective.has_univariate_nonlinear()
            || self
                .constraints
                .iter()
                .any(|c| c.body.has_univariate_nonlinear())
    }

    /// View as a disjunction-free [`GdpModel`].
    pub fn to_gdp(&self) -> GdpModel {
        GdpModel {
            variables: self.variables.clone(),
            objective: self.objective.clone(),
            sense: self.sense,
            globals: self.constraints.clone(),
            disjunctions: vec![],
            logic: vec![],
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}

/// Smallest valid M for a one-sided row over `bounds`: for `body <= rhs`
/// this is `max(0, sup(body) - rhs)`, for `body >= rhs` it is
/// `max(0, rhs - inf(body))`.
pub fn compute_bigm(c: &Constraint, bounds: &[Interval]) -> Result<f64> {
    let range = interval_eval(&c.body, bounds)?;
    let excess = match c.relation {
        Relation::Le => range.hi - c.rhs,
        Relation::Ge => c.rhs - range.lo,
        Relation::Eq => {
            return Err(Error::NotOneSided {
                row: c.label.clone(),
            })
        }
    };
    if !excess.is_finite() && excess > 0.0 || excess.is_nan() {
        return Err(Error::UnboundedBigM {
            row: c.label.clone(),
        });
    }
    Ok(excess.max(0.0))
}

/// Relaxes a one-sided row by `M (1 - y)`.
fn relax_row(c: &Constraint, y: VarId, bounds: &[Interval]) -> Result<Constraint> {
    let m = compute_bigm(c, bounds)?;
    let mut body = c.body.clone();
    let (rhs, coef) = match c.relation {
        // body + M y <= rhs + M
        Relation::Le => (c.rhs + m, m),
        // body - M y >= rhs - M
        Relation::Ge => (c.rhs - m, -m),
        Relation::Eq => unreachable!("equalities are split before relaxing"),
    };
    if m != 0.0 {
        body.add_linear(coef, y);
    }
    Ok(Constraint::new(c.label.clone(), body, c.relation, rhs))
}

fn one_sided(c: &Constraint) -> Vec<Constraint> {
    match c.relation {
        Relation::Eq => vec![
            Constraint::le(format!("{}:le", c.label), c.body.clone(), c.rhs),
            Constraint::ge(format!("{}:ge", c.label), c.body.clone(), c.rhs),
        ],
        _ => vec![c.clone()],
    }
}

/// Covering rows `sum_pos y + sum_neg (1 - y) >= 1`, one per clause.
pub fn logic_to_linear(
    clauses: &[LogicClause],
    binaries: &BTreeMap<String, VarId>,
) -> Result<Vec<Constraint>> {
    clauses
        .iter()
        .enumerate()
        .map(|(i, clause)| {
            let mut body = Expression::new();
            let mut negated = 0usize;
            for lit in &clause.literals {
                let y = *binaries
                    .get(&lit.boolean)
                    .ok_or_else(|| Error::UnknownBoolean(lit.boolean.clone()))?;
                if lit.positive {
                    body.add_linear(1.0, y);
                } else {
                    body.add_linear(-1.0, y);
                    negated += 1;
                }
            }
            Ok(Constraint::ge(
                format!("logic[{i}]"),
                body,
                1.0 - negated as f64,
            ))
        })
        .collect()
}

/// Big-M reformulation of every disjunction.
///
/// Each disjunct gets a binary; rows inside a disjunct are relaxed with a
/// per-row M computed by interval arithmetic over the variable bounds, with
/// equalities split into two one-sided rows.
pub fn bigm_transform(model: &GdpModel) -> Result<FlatModel> {
    validate_model(model).into_result()?;
    let bounds = model.bounds();

    let mut flat = FlatModel {
        variables: model.variables.clone(),
        objective: model.objective.clone(),
        sense: model.sense,
        ..FlatModel::default()
    };
    for c in &model.globals {
        flat.push(
            c.clone(),
            Provenance::Global {
                label: c.label.clone(),
            },
        );
    }

    for d in &model.disjunctions {
        let mut exactly_one = Expression::new();
        for u in &d.disjuncts {
            let y = flat.add_variable(Variable {
                name: format!("y[{}]", u.guard),
                lower: 0.0,
                upper: 1.0,
                kind: VarKind::Binary,
            });
            flat.booleans.insert(u.guard.clone(), y);
            exactly_one.add_linear(1.0, y);

            for c in &u.constraints {
                for side in one_sided(c) {
                    let row = relax_row(&side, y, &bounds)?;
                    flat.push(
                        row,
                        Provenance::Disjunct {
                            disjunction: d.label.clone(),
                            disjunct: u.label.clone(),
                            row: side.label.clone(),
                        },
                    );
                }
            }

            for &x in &u.fix_to_zero {
                let v = &model.variables[x.0];
                let prov = Provenance::FixToZero {
                    disjunct: u.label.clone(),
                    var: x,
                };
                if !v.upper.is_finite() || !v.lower.is_finite() {
                    return Err(Error::UnboundedBigM {
                        row: format!("fix {} in '{}'", v.name, u.label),
                    });
                }
                // x <= U y
                if v.upper != 0.0 {
                    let body = Expression::var(x).with_linear(-v.upper, y);
                    flat.push(
                        Constraint::le(format!("fix_ub[{}|{}]", v.name, u.label), body, 0.0),
                        prov.clone(),
                    );
                }
                // x >= L y
                if v.lower != 0.0 {
                    let body = Expression::var(x).with_linear(-v.lower, y);
                    flat.push(
                        Constraint::ge(format!("fix_lb[{}|{}]", v.name, u.label), body, 0.0),
                        prov,
                    );
                }
            }
        }
        flat.push(
            Constraint::eq(format!("exactly_one[{}]", d.label), exactly_one, 1.0),
            Provenance::ExactlyOne {
                disjunction: d.label.clone(),
            },
        );
    }

    let logic_rows = logic_to_linear(&model.logic, &flat.booleans)?;
    for (i, row) in logic_rows.into_iter().enumerate() {
        flat.push(row, Provenance::Logic { clause: i });
    }
    Ok(flat)
}
