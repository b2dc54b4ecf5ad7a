//! Fix-and-solve primal heuristic.
//!
//! The variables of bilinear terms are split into two classes by
//! 2-colouring the term graph. Fixing one class (and every squared
//! variable) makes all terms linear, so the relaxation over that box is
//! exact and its LP optimum is a feasible point whenever the LP is
//! feasible. The classes are fixed alternately starting from a given point.

use std::collections::VecDeque;
use std::time::Instant;

use crate::interval::Interval;
use crate::lp::{lp_solve_with, LpOptions, LpStatus};
use crate::relax::build_lp_relaxation;
use crate::transform::FlatModel;

use super::feasibility::feasibility_check;

pub(crate) struct FixAndSolve {
    classes: [Vec<usize>; 2],
    squared: Vec<usize>,
    binaries: Vec<usize>,
    sign: f64,
}

impl FixAndSolve {
    pub(crate) fn new(model: &FlatModel, sign: f64) -> Self {
        let n = model.variables.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut squared = vec![false; n];
        let exprs = std::iter::once(&model.objective).chain(model.constraints.iter().map(|c| &c.body));
        for e in exprs {
            for t in e.bilinear() {
                let (a, b) = (t.first.0, t.second.0);
                if a == b {
                    squared[a] = true;
                } else {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
        let mut colour = vec![usize::MAX; n];
        let mut classes = [Vec::new(), Vec::new()];
        for s in 0..n {
            if colour[s] != usize::MAX || adj[s].is_empty() {
                continue;
            }
            colour[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if colour[v] == usize::MAX {
                        colour[v] = 1 - colour[u];
                        queue.push_back(v);
                    }
                }
            }
        }
        for (j, &c) in colour.iter().enumerate() {
            if c != usize::MAX {
                classes[c].push(j);
            }
        }
        FixAndSolve {
            classes,
            squared: (0..n).filter(|&j| squared[j]).collect(),
            binaries: (0..n).filter(|&j| model.variables[j].is_binary()).collect(),
            sign,
        }
    }

    /// Best feasible point found from `start`, with its minimization-sense
    /// objective.
    pub(crate) fn run(
        &self,
        model: &FlatModel,
        root: &[Interval],
        start: &[f64],
        tol: f64,
        deadline: Option<Instant>,
    ) -> Option<(f64, Vec<f64>)> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        let n = model.variables.len();
        let opts = LpOptions {
            deadline,
            ..LpOptions::default()
        };
        for first in 0..2 {
            let mut cur = start.to_vec();
            let mut last: Option<f64> = None;
            for step in 0..4 {
                let class = &self.classes[(first + step) % 2];
                let mut bx = root.to_vec();
                for &j in &self.binaries {
                    bx[j] = Interval::point(root[j].clamp(cur[j].round()));
                }
                for &j in class.iter().chain(&self.squared) {
                    bx[j] = Interval::point(root[j].clamp(cur[j]));
                }
                let Ok(relax) = build_lp_relaxation(model, &bx) else {
                    break;
                };
                let sol = lp_solve_with(&relax.lp, &opts);
                if sol.status != LpStatus::Optimal {
                    break;
                }
                cur = sol.x[..n].to_vec();
                for (j, v) in cur.iter_mut().enumerate() {
                    *v = root[j].clamp(*v);
                }
                if !feasibility_check(&cur, model, tol).feasible {
                    continue;
                }
                let obj = self.sign * model.objective.eval(&cur);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, cur.clone()));
                }
                if last.is_some_and(|l| obj >= l - 1e-12 * l.abs().max(1.0)) {
                    break;
                }
                last = Some(obj);
            }
            if self.classes[1].is_empty() {
                break;
            }
        }
        best
    }
}
