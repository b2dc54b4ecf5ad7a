//! Global solution of flattened models by branch-and-bound over binaries
//! and spatial branching on the variables of nonconvex terms.

mod branch;
mod feasibility;
mod heuristic;

pub use branch::{branch_select, most_fractional, split_point, BranchDecision, INTEGRALITY_TOL};
pub use feasibility::{feasibility_check, FeasibilityReport, Infeasibility, DEFAULT_FEAS_TOL};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::lp::{lp_solve_with, LpOptions, LpStatus};
use crate::model::{Sense, VarKind};
use crate::relax::build_lp_relaxation;
use crate::transform::FlatModel;

use heuristic::FixAndSolve;

pub const DEFAULT_GAP: f64 = 1e-4;
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
    pub workers: usize,
    /// Absolute tolerance for accepting incumbents.
    pub feas_tol: f64,
    /// Run the fix-and-solve heuristic every this many nodes (0 disables
    /// it except at the root).
    pub heuristic_every: usize,
    /// Emit a progress line every this many nodes.
    pub log_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap: DEFAULT_GAP,
            time_limit: DEFAULT_TIME_LIMIT,
            node_limit: None,
            workers: 1,
            feas_tol: DEFAULT_FEAS_TOL,
            heuristic_every: 10,
            log_every: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Incumbent proven within the gap tolerance.
    Optimal,
    /// Incumbent found but some nodes could not be solved, so the gap
    /// could not be closed.
    Feasible,
    Infeasible,
    TimeLimit,
    NodeLimit,
    /// No incumbent and some nodes could not be solved.
    Incomplete,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::Incomplete => "incomplete",
        };
        f.write_str(s)
    }
}

/// Outcome of [`solve_global`], in the model's own objective sense.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Proven bound on the optimum (lower for minimization).
    pub bound: f64,
    /// `|z - bound| / max(1e-10, |z|)`; infinite without an incumbent.
    pub gap: f64,
    pub nodes: usize,
    /// Nodes whose LP could not be solved even after re-splitting.
    pub unexplored: usize,
    pub wall_time: f64,
}

pub fn relative_gap(z: f64, bound: f64) -> f64 {
    (z - bound).abs() / z.abs().max(1e-10)
}

#[derive(Debug, Clone)]
struct Node {
    id: u64,
    depth: usize,
    bounds: Vec<Interval>,
    lb: f64,
    resplit: bool,
}

// Best bound first, then deeper, then older.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    Gap,
    Exhausted,
    TimeLimit,
    NodeLimit,
}

struct State {
    open: BinaryHeap<Node>,
    in_flight: BTreeMap<u64, f64>,
    incumbent: Option<(f64, Vec<f64>)>,
    pruned_floor: f64,
    unexplored_floor: f64,
    unexplored: usize,
    nodes: usize,
    next_id: u64,
    reported_bound: f64,
    stop: Option<Stop>,
}

impl State {
    fn z(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(z, _)| *z)
    }

    fn current_bound(&self) -> f64 {
        let mut b = self.pruned_floor.min(self.unexplored_floor);
        if let Some(n) = self.open.peek() {
            b = b.min(n.lb);
        }
        for &lb in self.in_flight.values() {
            b = b.min(lb);
        }
        if let Some(z) = self.z() {
            b = b.min(z);
        }
        b
    }

    /// Bound reported to callers: never decreases, never above `z`.
    fn bound(&mut self) -> f64 {
        let b = self.current_bound().max(self.reported_bound);
        let b = match self.z() {
            Some(z) => b.min(z),
            None => b,
        };
        self.reported_bound = b;
        b
    }
}

enum Fate {
    /// LP infeasible: the node holds no feasible point.
    Infeasible,
    /// Bound reached the incumbent within the gap.
    Pruned(f64),
    Branched(Vec<Node>),
    /// Could not be solved or split; bound kept for truthfulness.
    Unexplored(f64),
    /// Deadline hit mid-solve; the node goes back unchanged.
    Interrupted,
}

struct NodeResult {
    fate: Fate,
    candidates: Vec<(f64, Vec<f64>)>,
}

struct Search<'a> {
    model: &'a FlatModel,
    opts: &'a SolveOptions,
    sign: f64,
    root: Vec<Interval>,
    heuristic: FixAndSolve,
    deadline: Instant,
    start: Instant,
    state: Mutex<State>,
    wake: Condvar,
}

fn prune_threshold(z: f64, gap: f64) -> f64 {
    z - gap * z.abs().max(1e-10)
}

impl Search<'_> {
    fn objective(&self, x: &[f64]) -> f64 {
        self.sign * self.model.objective.eval(x)
    }

    fn process(&self, node: &Node, z: Option<f64>, run_heuristic: bool) -> NodeResult {
        let model = self.model;
        let n = model.variables.len();
        let mut candidates = Vec::new();
        let done = |fate| NodeResult {
            fate,
            candidates: Vec::new(),
        };
        let relax = match build_lp_relaxation(model, &node.bounds) {
            Ok(r) => r,
            Err(_) => return done(self.resplit_or_give_up(node)),
        };
        let lp_opts = LpOptions {
            deadline: Some(self.deadline),
            ..LpOptions::default()
        };
        let sol = lp_solve_with(&relax.lp, &lp_opts);
        match sol.status {
            LpStatus::Optimal if sol.max_violation <= 1e-6 => {}
            LpStatus::Infeasible => return done(Fate::Infeasible),
            LpStatus::TimeLimit => return done(Fate::Interrupted),
            _ => return done(self.resplit_or_give_up(node)),
        }
        let lb = node.lb.max(sol.objective);

        let mut x: Vec<f64> = sol.x[..n].to_vec();
        for (j, v) in x.iter_mut().enumerate() {
            if model.variables[j].kind == VarKind::Binary && (*v - v.round()).abs() <= INTEGRALITY_TOL {
                *v = v.round();
            }
            *v = node.bounds[j].clamp(*v);
        }
        if feasibility_check(&x, model, self.opts.feas_tol).feasible {
            candidates.push((self.objective(&x), x.clone()));
        }
        if run_heuristic {
            if let Some(c) = self
                .heuristic
                .run(model, &self.root, &x, self.opts.feas_tol, Some(self.deadline))
            {
                candidates.push(c);
            }
        }
        let best = candidates
            .iter()
            .map(|(v, _)| *v)
            .chain(z)
            .min_by(f64::total_cmp);
        if let Some(z) = best {
            if lb >= prune_threshold(z, self.opts.gap) {
                return NodeResult {
                    fate: Fate::Pruned(lb),
                    candidates,
                };
            }
        }

        let decision = branch_select(&node.bounds, &sol.x, &relax, model).or_else(|| {
            branch::widest_nonlinear(&node.bounds, &relax).map(|var| BranchDecision::Spatial {
                var,
                at: split_point(node.bounds[var.0], x[var.0]),
            })
        });
        let fate = match decision {
            Some(d) => Fate::Branched(self.children(node, d, lb, false)),
            None => Fate::Unexplored(lb),
        };
        NodeResult { fate, candidates }
    }

    fn resplit_or_give_up(&self, node: &Node) -> Fate {
        if node.resplit {
            return Fate::Unexplored(node.lb);
        }
        // split the widest nonconvex variable, else any unfixed binary
        let mut pick: Option<(usize, f64)> = None;
        for (j, b) in node.bounds.iter().enumerate() {
            if b.width() <= branch::min_width(*b) {
                continue;
            }
            let rel = b.width() / b.lo.abs().max(b.hi.abs()).max(1.0);
            if pick.is_none_or(|(_, w)| rel > w) {
                pick = Some((j, rel));
            }
        }
        match pick {
            Some((j, _)) => {
                let var = crate::model::VarId(j);
                let d = if self.model.variables[j].is_binary() {
                    BranchDecision::Binary { var }
                } else {
                    BranchDecision::Spatial {
                        var,
                        at: node.bounds[j].mid(),
                    }
                };
                Fate::Branched(self.children(node, d, node.lb, true))
            }
            None => Fate::Unexplored(node.lb),
        }
    }

    /// Children get placeholder ids; real ids are assigned under the lock.
    fn children(&self, node: &Node, d: BranchDecision, lb: f64, resplit: bool) -> Vec<Node> {
        let (j, lo, hi) = match d {
            BranchDecision::Binary { var } => (var.0, Interval::point(0.0), Interval::point(1.0)),
            BranchDecision::Spatial { var, at } => {
                let b = node.bounds[var.0];
                (var.0, Interval::new(b.lo, at), Interval::new(at, b.hi))
            }
        };
        [lo, hi]
            .into_iter()
            .map(|b| {
                let mut bounds = node.bounds.clone();
                bounds[j] = b;
                Node {
                    id: 0,
                    depth: node.depth + 1,
                    bounds,
                    lb,
                    resplit,
                }
            })
            .collect()
    }

    fn log_progress(&self, st: &mut State) {
        let bound = st.bound();
        let gap = st.z().map_or(f64::INFINITY, |z| relative_gap(z, bound));
        log::info!(
            "nodes={} open={} bound={:.9e} incumbent={} gap={:.3e} elapsed={:.3}",
            st.nodes,
            st.open.len(),
            self.sign * bound,
            st.z().map_or("none".to_string(), |z| format!("{:.9e}", self.sign * z)),
            gap,
            self.start.elapsed().as_secs_f64()
        );
    }

    /// Pops the next node worth solving, pruning stale ones.
    fn pop_live(&self, st: &mut State) -> Option<Node> {
        while let Some(node) = st.open.pop() {
            if let Some(z) = st.z() {
                if node.lb >= prune_threshold(z, self.opts.gap) {
                    st.pruned_floor = st.pruned_floor.min(node.lb);
                    continue;
                }
            }
            return Some(node);
        }
        None
    }

    fn check_gap(&self, st: &mut State) {
        if st.stop.is_some() {
            return;
        }
        if let Some(z) = st.z() {
            let b = st.bound();
            if relative_gap(z, b) <= self.opts.gap {
                st.stop = Some(Stop::Gap);
            }
        }
    }

    fn worker(&self) {
        loop {
            let mut st = self.state.lock().unwrap();
            let node = loop {
                if st.stop.is_some() {
                    return;
                }
                if Instant::now() >= self.deadline {
                    st.stop = Some(Stop::TimeLimit);
                    self.wake.notify_all();
                    return;
                }
                if let Some(node) = self.pop_live(&mut st) {
                    break node;
                }
                if st.in_flight.is_empty() {
                    st.stop = Some(Stop::Exhausted);
                    self.wake.notify_all();
                    return;
                }
                st = self
                    .wake
                    .wait_timeout(st, Duration::from_millis(20))
                    .unwrap()
                    .0;
            };
            if self.opts.node_limit.is_some_and(|l| st.nodes >= l) {
                st.open.push(node);
                st.stop = Some(Stop::NodeLimit);
                self.wake.notify_all();
                return;
            }
            st.nodes += 1;
            st.in_flight.insert(node.id, node.lb);
            let z = st.z();
            let every = self.opts.heuristic_every;
            let run_heuristic = st.nodes == 1
                || (every > 0 && (z.is_none() || st.nodes.is_multiple_of(every)));
            drop(st);

            let result = self.process(&node, z, run_heuristic);

            let mut st = self.state.lock().unwrap();
            st.in_flight.remove(&node.id);
            for (v, x) in result.candidates {
                if st.z().is_none_or(|z| v < z) {
                    st.incumbent = Some((v, x));
                }
            }
            match result.fate {
                Fate::Infeasible => {}
                Fate::Pruned(lb) => st.pruned_floor = st.pruned_floor.min(lb),
                Fate::Unexplored(lb) => {
                    st.unexplored += 1;
                    st.unexplored_floor = st.unexplored_floor.min(lb);
                }
                Fate::Branched(children) => {
                    for mut c in children {
                        c.id = st.next_id;
                        st.next_id += 1;
                        st.open.push(c);
                    }
                }
                Fate::Interrupted => {
                    st.nodes -= 1;
                    st.open.push(node);
                    st.stop = Some(Stop::TimeLimit);
                }
            }
            if self.opts.log_every > 0 && st.nodes.is_multiple_of(self.opts.log_every) {
                self.log_progress(&mut st);
            }
            self.check_gap(&mut st);
            self.wake.notify_all();
        }
    }
}

/// Solves `model` to the requested relative gap.
///
/// Power and log terms must have been approximated away; the variables of
/// bilinear terms need finite bounds.
pub fn solve_global(model: &FlatModel, opts: &SolveOptions) -> Result<SolveResult> {
    let start = Instant::now();
    if model.has_univariate_nonlinear() || model.objective.has_univariate_nonlinear() {
        return Err(Error::Unsupported(
            "power and log terms must be approximated before solving".into(),
        ));
    }
    let mut root = model.bounds();
    for (b, v) in root.iter_mut().zip(&model.variables) {
        if v.is_binary() {
            *b = Interval::new(b.lo.max(0.0).ceil(), b.hi.min(1.0).floor());
        }
    }
    // surfaces unbounded nonlinear variables before any search
    build_lp_relaxation(model, &root)?;
    let sign = match model.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };

    let infeasible_box = root.iter().any(|b| b.lo > b.hi);
    let mut open = BinaryHeap::new();
    if !infeasible_box {
        open.push(Node {
            id: 0,
            depth: 0,
            bounds: root.clone(),
            lb: f64::NEG_INFINITY,
            resplit: false,
        });
    }
    let search = Search {
        model,
        opts,
        sign,
        heuristic: FixAndSolve::new(model, sign),
        root,
        deadline: start + opts.time_limit,
        start,
        state: Mutex::new(State {
            open,
            in_flight: BTreeMap::new(),
            incumbent: None,
            pruned_floor: f64::INFINITY,
            unexplored_floor: f64::INFINITY,
            unexplored: 0,
            nodes: 0,
            next_id: 1,
            reported_bound: f64::NEG_INFINITY,
            stop: None,
        }),
        wake: Condvar::new(),
    };

    let workers = opts.workers.max(1);
    if workers == 1 {
        search.worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| search.worker());
            }
        });
    }

    let mut st = search.state.into_inner().unwrap();
    let stop = st.stop.unwrap_or(Stop::Exhausted);
    let bound = st.bound();
    let (status, gap) = match st.z() {
        Some(z) => {
            let gap = relative_gap(z, bound);
            let status = match stop {
                Stop::TimeLimit => SolveStatus::TimeLimit,
                Stop::NodeLimit => SolveStatus::NodeLimit,
                _ if gap <= opts.gap => SolveStatus::Optimal,
                _ => SolveStatus::Feasible,
            };
            (status, gap)
        }
        None => {
            let status = match stop {
                Stop::TimeLimit => SolveStatus::TimeLimit,
                Stop::NodeLimit => SolveStatus::NodeLimit,
                _ if st.unexplored > 0 => SolveStatus::Incomplete,
                _ => SolveStatus::Infeasible,
            };
            (status, f64::INFINITY)
        }
    };
    let nodes = st.nodes;
    let result = SolveResult {
        status,
        objective: st.z().map(|z| sign * z),
        incumbent: st.incumbent.take().map(|(_, x)| x),
        bound: sign * bound,
        gap,
        nodes,
        unexplored: st.unexplored,
        wall_time: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "status={} nodes={} bound={:.9e} incumbent={} gap={:.3e} elapsed={:.3}",
        result.status,
        result.nodes,
        result.bound,
        result
            .objective
            .map_or("none".to_string(), |z| format!("{z:.9e}")),
        result.gap,
        result.wall_time
    );
    Ok(result)
}
