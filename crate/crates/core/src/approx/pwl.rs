use serde::{Deserialize, Serialize};

use super::{check_fit_domain, uniform_grid, UnivariateFn};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::{Constraint, Expression, VarId, Variable};

/// Breakpoints and exact function values of a piecewise-linear interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlTable {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PwlTable {
    pub fn n_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Value of the interpolant; clamps `x` into the domain.
    pub fn interpolate(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let x = self.domain().clamp(x);
        // first breakpoint strictly greater than x, minus one
        let k = bp.partition_point(|&b| b <= x).clamp(1, bp.len() - 1) - 1;
        let t = (x - bp[k]) / (bp[k + 1] - bp[k]);
        self.values[k] + t * (self.values[k + 1] - self.values[k])
    }

    /// Max and RMS interpolation error against `f` on the certification grid.
    pub fn grid_errors(&self, f: UnivariateFn) -> (f64, f64) {
        super::fit::grid_errors(|x| self.interpolate(x), &|x| f.eval(x), self.domain())
    }

    /// Max interpolation error against `f` on an `n`-point uniform grid.
    pub fn max_error_on_grid(&self, f: impl Fn(f64) -> f64, n: usize) -> f64 {
        uniform_grid(self.domain(), n)
            .map(|x| (self.interpolate(x) - f(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Uniform `n_segments`-interval table of `f` over `domain`.
pub fn build_pwl(f: UnivariateFn, domain: Interval, n_segments: usize) -> Result<PwlTable> {
    check_fit_domain(f, domain)?;
    build_pwl_fn(|x| f.eval(x), domain, n_segments)
}

pub(crate) fn build_pwl_fn(
    f: impl Fn(f64) -> f64,
    domain: Interval,
    n_segments: usize,
) -> Result<PwlTable> {
    if n_segments < 1 {
        return Err(Error::InvalidArgument("piecewise table needs at least 1 segment".into()));
    }
    if !(domain.width() >= 1e-12) {
        return Err(Error::DegenerateDomain {
            lower: domain.lo,
            upper: domain.hi,
        });
    }
    let breakpoints: Vec<f64> = uniform_grid(domain, n_segments + 1).collect();
    let values = breakpoints.iter().map(|&x| f(x)).collect();
    Ok(PwlTable {
        breakpoints,
        values,
    })
}

/// Incremental-model MIP encoding of `out = pwl(x)`.
///
/// Fill variables `delta[k] in [0, 1]` trace the segments in order; the
/// binary `z[k]` sits between consecutive fills, `delta[k+1] <= z[k] <= delta[k]`,
/// so segment `k+1` can only start once segment `k` is full.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlEncoding {
    pub x: VarId,
    pub out: VarId,
    pub deltas: Vec<VarId>,
    pub binaries: Vec<VarId>,
    pub rows: Vec<Constraint>,
}

/// Appends the fill and ordering variables to `variables` and returns the
/// encoding rows. `x`'s bounds must equal the table domain.
pub fn encode_pwl_incremental(
    table: &PwlTable,
    x: VarId,
    out: VarId,
    variables: &mut Vec<Variable>,
    prefix: &str,
) -> Result<PwlEncoding> {
    let dom = table.domain();
    let xv = &variables[x.0];
    let tol = 1e-9 * dom.lo.abs().max(dom.hi.abs()).max(1.0);
    if (xv.lower - dom.lo).abs() > tol || (xv.upper - dom.hi).abs() > tol {
        return Err(Error::BoundMismatch {
            var_lower: xv.lower,
            var_upper: xv.upper,
            lower: dom.lo,
            upper: dom.hi,
        });
    }
    let n = table.n_segments();
    let deltas: Vec<VarId> = (0..n)
        .map(|k| {
            variables.push(Variable::continuous(format!("{prefix}.delta[{k}]"), 0.0, 1.0));
            VarId(variables.len() - 1)
        })
        .collect();
    let binaries: Vec<VarId> = (0..n.saturating_sub(1))
        .map(|k| {
            variables.push(Variable::binary(format!("{prefix}.z[{k}]")));
            VarId(variables.len() - 1)
        })
        .collect();

    let mut rows = Vec::with_capacity(2 * n);
    for (k, &z) in binaries.iter().enumerate() {
        rows.push(Constraint::le(
            format!("{prefix}.order_hi[{k}]"),
            Expression::var(deltas[k + 1]).with_linear(-1.0, z),
            0.0,
        ));
        rows.push(Constraint::le(
            format!("{prefix}.order_lo[{k}]"),
            Expression::var(z).with_linear(-1.0, deltas[k]),
            0.0,
        ));
    }
    // x = x0 + sum (x_k - x_{k-1}) delta_k
    let mut xlink = Expression::var(x);
    // out = f(x0) + sum (f(x_k) - f(x_{k-1})) delta_k
    let mut ylink = Expression::var(out);
    for (k, &d) in deltas.iter().enumerate() {
        xlink.add_linear(-(table.breakpoints[k + 1] - table.breakpoints[k]), d);
        ylink.add_linear(-(table.values[k + 1] - table.values[k]), d);
    }
    rows.push(Constraint::eq(format!("{prefix}.x_link"), xlink, table.breakpoints[0]));
    rows.push(Constraint::eq(format!("{prefix}.out_link"), ylink, table.values[0]));

    Ok(PwlEncoding {
        x,
        out,
        deltas,
        binaries,
        rows,
    })
}
