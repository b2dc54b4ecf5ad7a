use serde::Serialize;

use crate::model::Relation;
use crate::transform::FlatModel;

pub const DEFAULT_FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Infeasibility {
    Row { label: String, amount: f64 },
    Bound { var: String, amount: f64 },
    Integrality { var: String, value: f64 },
    NotFinite { label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Infeasibility>,
}

/// Checks `point` against every row of `model` with exact term values.
///
/// Rows, bounds and integrality are all held to the absolute tolerance `tol`.
pub fn feasibility_check(point: &[f64], model: &FlatModel, tol: f64) -> FeasibilityReport {
    let mut violations = Vec::new();
    for (v, &x) in model.variables.iter().zip(point) {
        let amount = (v.lower - x).max(x - v.upper);
        if amount > tol {
            violations.push(Infeasibility::Bound {
                var: v.name.clone(),
                amount,
            });
        }
        if v.is_binary() && (x - x.round()).abs() > tol {
            violations.push(Infeasibility::Integrality {
                var: v.name.clone(),
                value: x,
            });
        }
    }
    for c in &model.constraints {
        let lhs = c.body.eval(point);
        if !lhs.is_finite() {
            violations.push(Infeasibility::NotFinite {
                label: c.label.clone(),
            });
            continue;
        }
        let amount = match c.relation {
            Relation::Le => lhs - c.rhs,
            Relation::Ge => c.rhs - lhs,
            Relation::Eq => (lhs - c.rhs).abs(),
        };
        if amount > tol {
            violations.push(Infeasibility::Row {
                label: c.label.clone(),
                amount,
            });
        }
    }
    if !model.objective.eval(point).is_finite() {
        violations.push(Infeasibility::NotFinite {
            label: "objective".into(),
        });
    }
    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, Expression, Variable};

    fn product_model() -> FlatModel {
        let mut m = FlatModel::default();
        let x = m.add_variable(Variable::continuous("x", 0.0, 4.0));
        let y = m.add_variable(Variable::continuous("y", 0.0, 4.0));
        m.add_variable(Variable::binary("b"));
        m.constraints.push(Constraint::eq(
            "prod",
            Expression::new().with_bilinear(1.0, x, y),
            2.0,
        ));
        m
    }

    #[test]
    fn exact_point_is_feasible() {
        let r = feasibility_check(&[1.0, 2.0, 1.0], &product_model(), 1e-6);
        assert!(r.feasible && r.violations.is_empty());
    }

    #[test]
    fn threshold_semantics() {
        let m = product_model();
        let r = feasibility_check(&[1.0, 2.001, 0.0], &m, 1e-6);
        assert!(!r.feasible);
        assert_eq!(r.violations.len(), 1);
        assert!(matches!(&r.violations[0], Infeasibility::Row { label, .. } if label == "prod"));
        let r = feasibility_check(&[1.0, 2.0 + 5e-7, 0.0], &m, 1e-6);
        assert!(r.feasible);
    }

    #[test]
    fn fractional_binary_is_reported() {
        let r = feasibility_check(&[1.0, 2.0, 0.3], &product_model(), 1e-6);
        assert!(matches!(r.violations[..], [Infeasibility::Integrality { .. }]));
    }
}
