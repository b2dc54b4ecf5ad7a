use serde::Serialize;

use crate::interval::Interval;
use crate::model::VarId;
use crate::relax::Relaxation;
use crate::transform::FlatModel;

/// Fractionality below which a binary counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchDecision {
    Binary { var: VarId },
    Spatial { var: VarId, at: f64 },
}

/// Intervals narrower than this are not split further.
pub(crate) fn min_width(b: Interval) -> f64 {
    1e-9 * b.lo.abs().max(b.hi.abs()).max(1.0)
}

/// Split point: the LP value clamped to the middle 40% of the box.
pub fn split_point(b: Interval, at: f64) -> f64 {
    let w = b.width();
    at.clamp(b.lo + 0.3 * w, b.hi - 0.3 * w)
}

/// Most fractional binary; ties go to the median of the tied set so that
/// runs of equally fractional binaries are bisected.
pub fn most_fractional(model: &FlatModel, x: &[f64]) -> Option<VarId> {
    let mut best = INTEGRALITY_TOL;
    let mut tied: Vec<usize> = Vec::new();
    for (j, v) in model.variables.iter().enumerate() {
        if !v.is_binary() {
            continue;
        }
        let frac = x[j].min(1.0 - x[j]);
        if frac > best + 1e-9 {
            best = frac;
            tied.clear();
            tied.push(j);
        } else if frac >= best - 1e-9 && frac > INTEGRALITY_TOL {
            tied.push(j);
        }
    }
    if tied.is_empty() {
        None
    } else {
        Some(VarId(tied[(tied.len() - 1) / 2]))
    }
}

/// Picks the branching decision at a node whose LP point `lp_x` was not
/// accepted as feasible.
///
/// A fractional binary wins; otherwise the variable with the largest summed
/// gap between auxiliaries and true term values is split.
pub fn branch_select(
    bounds: &[Interval],
    lp_x: &[f64],
    relaxation: &Relaxation,
    model: &FlatModel,
) -> Option<BranchDecision> {
    if let Some(var) = most_fractional(model, lp_x) {
        return Some(BranchDecision::Binary { var });
    }
    let viol = relaxation.violation_by_var(lp_x);
    let mut pick: Option<(usize, f64)> = None;
    for (j, &v) in viol.iter().enumerate() {
        if v <= 1e-12 || bounds[j].width() <= min_width(bounds[j]) {
            continue;
        }
        if pick.is_none_or(|(_, best)| v > best) {
            pick = Some((j, v));
        }
    }
    pick.map(|(j, _)| BranchDecision::Spatial {
        var: VarId(j),
        at: split_point(bounds[j], lp_x[j]),
    })
}

/// Widest splittable variable among those in nonlinear terms; used when
/// the point is infeasible yet no term gap stands out.
pub(crate) fn widest_nonlinear(bounds: &[Interval], relaxation: &Relaxation) -> Option<VarId> {
    let mut pick: Option<(usize, f64)> = None;
    for t in &relaxation.terms {
        for v in t.kind.vars() {
            let b = bounds[v.0];
            let rel = b.width() / b.lo.abs().max(b.hi.abs()).max(1.0);
            if b.width() > min_width(b) && pick.is_none_or(|(_, w)| rel > w) {
                pick = Some((v.0, rel));
            }
        }
    }
    pick.map(|(j, _)| VarId(j))
}
