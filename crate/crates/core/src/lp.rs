//! Dense bounded-variable primal simplex.
//!
//! Two phases over a full tableau: phase 1 drives artificial columns to
//! zero, phase 2 optimizes the real costs. Pricing is Dantzig's rule;
//! after a long run of degenerate pivots it falls back to Bland's rule
//! until progress resumes.

use std::time::Instant;

use crate::model::Relation;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min costs . x + offset` subject to `rows` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub costs: Vec<f64>,
    pub offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.costs.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.costs.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(LpRow {
            coefs,
            relation,
            rhs,
        });
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let lhs: f64 = row.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.offset + self.costs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Cannot happen when every variable is bounded.
    Unbounded,
    IterationLimit,
    NumericalFailure,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    /// Phase-2 reduced costs of the structural columns.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub max_pivots: usize,
    pub deadline: Option<Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_pivots: 1_000_000,
            deadline: None,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const BREAKDOWN_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const DRIFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    FreeZero,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `B^-1 [A | I | art]`.
    t: Vec<f64>,
    /// `B^-1 b`.
    beta0: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    d: Vec<f64>,
    cost: Vec<f64>,
    pivots: usize,
    scratch: Vec<usize>,
    /// Initial tableau, kept for refactorization.
    a0: Vec<(usize, usize, f64)>,
    b0: Vec<f64>,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit(LpStatus),
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncols..(i + 1) * self.ncols]
    }

    fn reset_reduced_costs(&mut self, cost: Vec<f64>) {
        let mut d = cost.clone();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        self.d = d;
        self.cost = cost;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let dir = match self.state[j] {
                State::Basic => continue,
                _ if self.is_fixed(j) => continue,
                State::AtLower if self.d[j] < -OPT_TOL => 1.0,
                State::AtUpper if self.d[j] > OPT_TOL => -1.0,
                State::FreeZero if self.d[j].abs() > OPT_TOL => -self.d[j].signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn solve(&mut self, opts: &LpOptions, budget: &mut usize) -> Outcome {
        let degenerate_cap = 5 * (self.m + self.ncols);
        let mut degenerate_run = 0usize;
        loop {
            if *budget == 0 {
                return Outcome::Limit(LpStatus::IterationLimit);
            }
            if self.pivots.is_multiple_of(64) {
                if let Some(dl) = opts.deadline {
                    if Instant::now() >= dl {
                        return Outcome::Limit(LpStatus::TimeLimit);
                    }
                }
            }
            let bland = degenerate_run > degenerate_cap;
            let Some((q, dir)) = self.price(bland) else {
                return Outcome::Optimal;
            };

            let (step, leave) = self.ratio_test(q, dir, bland);
            if step.is_infinite() {
                return Outcome::Unbounded;
            }
            *budget -= 1;
            self.pivots += 1;
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            // move along the edge
            self.x[q] += dir * step;
            if step != 0.0 {
                for i in 0..self.m {
                    let tiq = self.t[i * self.ncols + q];
                    if tiq != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * step * tiq;
                    }
                }
            }

            match leave {
                None => {
                    // bound flip
                    self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((r, alpha)) => {
                    let piv = self.t[r * self.ncols + q];
                    if piv.abs() < BREAKDOWN_TOL {
                        return Outcome::Limit(LpStatus::NumericalFailure);
                    }
                    let leaving = self.basis[r];
                    if alpha > 0.0 {
                        self.state[leaving] = State::AtLower;
                        self.x[leaving] = self.lower[leaving];
                    } else {
                        self.state[leaving] = State::AtUpper;
                        self.x[leaving] = self.upper[leaving];
                    }
                    self.pivot(r, q);
                    self.basis[r] = q;
                    self.state[q] = State::Basic;
                }
            }
        }
    }

    /// Harris two-pass ratio test: the first pass finds the largest step
    /// allowed with bounds relaxed by `FEAS_TOL`, the second picks the
    /// largest pivot among rows blocking within it. Bland mode takes the
    /// exact minimum ratio and breaks ties by lowest basic index.
    fn ratio_test(&self, q: usize, dir: f64, bland: bool) -> (f64, Option<(usize, f64)>) {
        let nc = self.ncols;
        let limit_of = |i: usize, tol: f64| -> Option<f64> {
            let tiq = self.t[i * nc + q];
            if tiq.abs() <= PIVOT_TOL {
                return None;
            }
            let alpha = dir * tiq;
            let b = self.basis[i];
            let xb = self.x[b];
            if alpha > 0.0 {
                let l = self.lower[b];
                (l > f64::NEG_INFINITY).then(|| ((xb - l + tol) / alpha).max(0.0))
            } else {
                let u = self.upper[b];
                (u < f64::INFINITY).then(|| ((u - xb + tol) / -alpha).max(0.0))
            }
        };
        let flip = self.upper[q] - self.lower[q];
        if bland {
            let mut step = flip;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if let Some(lim) = limit_of(i, 0.0) {
                    let better = lim < step
                        || (lim == step && leave.map_or(step.is_infinite(), |(li, _)| self.basis[i] < self.basis[li]));
                    if better {
                        step = lim;
                        leave = Some((i, dir * self.t[i * nc + q]));
                    }
                }
            }
            return (step, leave);
        }
        let mut relaxed = f64::INFINITY;
        for i in 0..self.m {
            if let Some(lim) = limit_of(i, FEAS_TOL) {
                relaxed = relaxed.min(lim);
            }
        }
        if flip <= relaxed {
            return (flip, None);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let Some(lim) = limit_of(i, 0.0) else { continue };
            if lim > relaxed {
                continue;
            }
            let a = self.t[i * nc + q].abs();
            if best.is_none_or(|(_, _, ba)| a > ba) {
                best = Some((i, lim, a));
            }
        }
        match best {
            Some((i, lim, _)) => (lim, Some((i, dir * self.t[i * nc + q]))),
            None => (f64::INFINITY, None),
        }
    }

    /// Runs [`Self::solve`] and, when the final point drifted from the
    /// original rows, rebuilds the tableau from the basis and resumes.
    fn settle(&mut self, opts: &LpOptions, budget: &mut usize) -> Outcome {
        let mut out = self.solve(opts, budget);
        for _ in 0..3 {
            if !matches!(out, Outcome::Optimal) {
                return out;
            }
            if self.residual() <= DRIFT_TOL && self.basic_infeasibility() <= DRIFT_TOL {
                return out;
            }
            if !self.refactor() || self.basic_infeasibility() > 1e-7 {
                return Outcome::Limit(LpStatus::NumericalFailure);
            }
            out = self.solve(opts, budget);
        }
        out
    }

    /// Max row residual of the current point against the initial tableau.
    fn residual(&self) -> f64 {
        let mut r = self.b0.clone();
        for &(i, j, a) in &self.a0 {
            r[i] -= a * self.x[j];
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn basic_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| (self.lower[b] - self.x[b]).max(self.x[b] - self.upper[b]))
            .fold(0.0, f64::max)
    }

    /// Recomputes `B^-1 [A | I | art]` and `B^-1 b` from the initial
    /// tableau by Gauss-Jordan elimination on the basis columns.
    fn refactor(&mut self) -> bool {
        let (m, nc) = (self.m, self.ncols);
        let mut pos = vec![usize::MAX; nc];
        for (k, &b) in self.basis.iter().enumerate() {
            pos[b] = k;
        }
        // bmat[i][k] = a0[i][basis[k]], inv starts as identity
        let mut bmat = vec![0.0; m * m];
        for &(i, j, a) in &self.a0 {
            if pos[j] != usize::MAX {
                bmat[i * m + pos[j]] = a;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // row ops turning bmat into the identity, with the basis column k
        // landing in row k
        for k in 0..m {
            let p = (k..m)
                .max_by(|&a, &b| bmat[a * m + k].abs().total_cmp(&bmat[b * m + k].abs()))
                .unwrap();
            let piv = bmat[p * m + k];
            if piv.abs() < BREAKDOWN_TOL {
                return false;
            }
            if p != k {
                for c in 0..m {
                    bmat.swap(p * m + c, k * m + c);
                    inv.swap(p * m + c, k * m + c);
                }
            }
            let r = 1.0 / piv;
            for c in 0..m {
                bmat[k * m + c] *= r;
                inv[k * m + c] *= r;
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let f = bmat[i * m + k];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    bmat[i * m + c] -= f * bmat[k * m + c];
                    inv[i * m + c] -= f * inv[k * m + c];
                }
            }
        }
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, a) in &self.a0 {
            for k in 0..m {
                let f = inv[k * m + i];
                if f != 0.0 {
                    self.t[k * nc + j] += f * a;
                }
            }
        }
        for k in 0..m {
            self.beta0[k] = (0..m).map(|i| inv[k * m + i] * self.b0[i]).sum();
        }
        for (k, &b) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * nc + b] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.refresh_basics();
        let cost = std::mem::take(&mut self.cost);
        self.reset_reduced_costs(cost);
        true
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        let inv = 1.0 / piv;
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
        }
        self.beta0[r] *= inv;
        self.scratch.clear();
        for (j, &v) in self.t[r * nc..(r + 1) * nc].iter().enumerate() {
            if v != 0.0 {
                self.scratch.push(j);
            }
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        let b0r = self.beta0[r];
        for (i, row) in before
            .chunks_exact_mut(nc)
            .enumerate()
            .chain(after.chunks_exact_mut(nc).enumerate().map(|(k, c)| (k + r + 1, c)))
        {
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for &j in &self.scratch {
                row[j] -= f * prow[j];
            }
            row[q] = 0.0;
            self.beta0[i] -= f * b0r;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &j in &self.scratch {
                self.d[j] -= dq * prow[j];
            }
            self.d[q] = 0.0;
        }
    }

    /// Recomputes basic values from `B^-1 b` and the nonbasic values.
    fn refresh_basics(&mut self) {
        let mut xb = self.beta0.clone();
        for j in 0..self.ncols {
            if self.state[j] == State::Basic {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            for (i, xbi) in xb.iter_mut().enumerate() {
                *xbi -= self.t[i * self.ncols + j] * v;
            }
        }
        for i in 0..self.m {
            self.x[self.basis[i]] = xb[i];
        }
    }
}

pub fn lp_solve(lp: &LinearProgram) -> LpSolution {
    lp_solve_with(lp, &LpOptions::default())
}

pub fn lp_solve_with(lp: &LinearProgram, opts: &LpOptions) -> LpSolution {
    let n = lp.n_vars();
    let fail = |status: LpStatus, x: Vec<f64>, pivots: usize| LpSolution {
        status,
        objective: f64::NAN,
        max_violation: f64::NAN,
        reduced_costs: vec![0.0; n],
        x,
        pivots,
    };

    for j in 0..n {
        if lp.lower[j] > lp.upper[j] + FEAS_TOL {
            return fail(LpStatus::Infeasible, vec![0.0; n], 0);
        }
    }

    // Scale rows to unit max coefficient; drop empty rows after checking them.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let mut dense: Vec<(usize, f64)> = Vec::with_capacity(row.coefs.len());
        for &(j, a) in &row.coefs {
            if a == 0.0 {
                continue;
            }
            match dense.iter_mut().find(|(k, _)| *k == j) {
                Some(e) => e.1 += a,
                None => dense.push((j, a)),
            }
        }
        let scale = dense.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            let ok = match row.relation {
                Relation::Le => 0.0 <= row.rhs + FEAS_TOL,
                Relation::Ge => 0.0 >= row.rhs - FEAS_TOL,
                Relation::Eq => row.rhs.abs() <= FEAS_TOL,
            };
            if !ok {
                return fail(LpStatus::Infeasible, vec![0.0; n], 0);
            }
            continue;
        }
        let inv = 1.0 / scale;
        let coefs = dense.into_iter().map(|(j, a)| (j, a * inv)).collect();
        rows.push((coefs, row.relation, row.rhs * inv));
    }
    let m = rows.len();

    // initial nonbasic structural values
    let mut x0 = vec![0.0; n];
    let mut state0 = vec![State::AtLower; n];
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j].max(lp.lower[j]));
        if l.is_finite() {
            x0[j] = l;
            state0[j] = State::AtLower;
        } else if u.is_finite() {
            x0[j] = u;
            state0[j] = State::AtUpper;
        } else {
            x0[j] = 0.0;
            state0[j] = State::FreeZero;
        }
    }

    // decide which rows need an artificial
    let mut resid = vec![0.0; m];
    let mut art_rows = Vec::new();
    for (i, (coefs, rel, rhs)) in rows.iter().enumerate() {
        let ax: f64 = coefs.iter().map(|&(j, a)| a * x0[j]).sum();
        resid[i] = rhs - ax;
        let (sl, su) = slack_bounds(*rel);
        if resid[i] < sl - FEAS_TOL || resid[i] > su + FEAS_TOL {
            art_rows.push(i);
        }
    }
    let n_art = art_rows.len();
    let ncols = n + m + n_art;

    let mut lower = Vec::with_capacity(ncols);
    let mut upper = Vec::with_capacity(ncols);
    lower.extend(lp.lower.iter().copied());
    upper.extend(lp.upper.iter().zip(&lp.lower).map(|(u, l)| u.max(*l)));
    for (_, rel, _) in &rows {
        let (sl, su) = slack_bounds(*rel);
        lower.push(sl);
        upper.push(su);
    }
    for _ in 0..n_art {
        lower.push(0.0);
        upper.push(f64::INFINITY);
    }

    let mut t = vec![0.0; m * ncols];
    let mut beta0 = vec![0.0; m];
    let mut x = vec![0.0; ncols];
    x[..n].copy_from_slice(&x0);
    let mut state = vec![State::AtLower; ncols];
    state[..n].copy_from_slice(&state0);
    let mut basis = vec![0; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = n + m + k;
    }
    for (i, (coefs, _, rhs)) in rows.iter().enumerate() {
        let slack = n + i;
        let art = art_of_row[i];
        // basic coefficient: slack has 1, artificial has sigma
        let (basic, bcoef) = if art == usize::MAX {
            (slack, 1.0)
        } else {
            let s_val = resid[i].max(lower[slack]).min(upper[slack]);
            x[slack] = s_val;
            state[slack] = if s_val == lower[slack] {
                State::AtLower
            } else {
                State::AtUpper
            };
            let sigma = if resid[i] - s_val >= 0.0 { 1.0 } else { -1.0 };
            t[i * ncols + art] = sigma;
            (art, sigma)
        };
        let inv = 1.0 / bcoef;
        for &(j, a) in coefs {
            t[i * ncols + j] = a * inv;
        }
        t[i * ncols + slack] = inv;
        if art != usize::MAX {
            t[i * ncols + art] = 1.0;
        }
        beta0[i] = rhs * inv;
        basis[i] = basic;
        state[basic] = State::Basic;
    }

    let mut tab = Tableau {
        m,
        ncols,
        t,
        beta0,
        lower,
        upper,
        x,
        state,
        basis,
        d: vec![0.0; ncols],
        cost: vec![0.0; ncols],
        pivots: 0,
        scratch: Vec::with_capacity(ncols),
        a0: Vec::new(),
        b0: Vec::new(),
    };
    tab.a0 = (0..m)
        .flat_map(|i| {
            let row = &tab.t[i * ncols..(i + 1) * ncols];
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(move |(j, &v)| (i, j, v))
                .collect::<Vec<_>>()
        })
        .collect();
    tab.b0 = tab.beta0.clone();
    tab.refresh_basics();
    let mut budget = opts.max_pivots;

    if n_art > 0 {
        let mut c1 = vec![0.0; ncols];
        for c in c1.iter_mut().skip(n + m) {
            *c = 1.0;
        }
        tab.reset_reduced_costs(c1);
        match tab.settle(opts, &mut budget) {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return fail(LpStatus::NumericalFailure, tab.x[..n].to_vec(), tab.pivots)
            }
            Outcome::Limit(s) => return fail(s, tab.x[..n].to_vec(), tab.pivots),
        }
        tab.refresh_basics();
        let infeas: f64 = (n + m..ncols).map(|j| tab.x[j].max(0.0)).sum();
        if infeas > PHASE1_TOL {
            return fail(LpStatus::Infeasible, tab.x[..n].to_vec(), tab.pivots);
        }
        // pin artificials at zero and pivot basic ones out where possible
        for j in n + m..ncols {
            tab.upper[j] = 0.0;
            if tab.state[j] != State::Basic {
                tab.x[j] = 0.0;
                tab.state[j] = State::AtLower;
            }
        }
        for r in 0..m {
            if tab.basis[r] < n + m {
                continue;
            }
            let row = tab.row(r);
            let cand = (0..n + m)
                .filter(|&j| tab.state[j] != State::Basic)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            if let Some(q) = cand {
                if row[q].abs() > 1e-7 {
                    let leaving = tab.basis[r];
                    tab.pivot(r, q);
                    tab.basis[r] = q;
                    tab.state[q] = State::Basic;
                    tab.state[leaving] = State::AtLower;
                    tab.x[leaving] = 0.0;
                }
            }
        }
        tab.refresh_basics();
    }

    let mut c2 = vec![0.0; ncols];
    c2[..n].copy_from_slice(&lp.costs);
    tab.reset_reduced_costs(c2);
    let outcome = tab.settle(opts, &mut budget);
    tab.refresh_basics();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::Limit(s) => s,
    };
    let xs: Vec<f64> = (0..n)
        .map(|j| {
            let v = tab.x[j];
            // snap round-off at the bounds
            if v < lp.lower[j] && v > lp.lower[j] - 1e-9 {
                lp.lower[j]
            } else if v > lp.upper[j] && v < lp.upper[j] + 1e-9 {
                lp.upper[j]
            } else {
                v
            }
        })
        .collect();
    LpSolution {
        status,
        objective: lp.objective_at(&xs),
        max_violation: lp.max_violation(&xs),
        reduced_costs: tab.d[..n].to_vec(),
        x: xs,
        pivots: tab.pivots,
    }
}

fn slack_bounds(rel: Relation) -> (f64, f64) {
    match rel {
        Relation::Le => (0.0, f64::INFINITY),
        Relation::Ge => (f64::NEG_INFINITY, 0.0),
        Relation::Eq => (0.0, 0.0),
    }
}
