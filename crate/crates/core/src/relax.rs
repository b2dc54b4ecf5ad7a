//! Linear relaxations of nonconvex terms over a box.
//!
//! Each distinct nonlinear term gets an auxiliary column `w` bounded by
//! envelope rows of the form `w (<= | >=) c + s0 u + s1 v`, where `u`, `v`
//! are the term's variables.

use std::collections::BTreeMap;

use crate::approx::UnivariateFn;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::lp::LinearProgram;
use crate::model::{Expression, Relation, Sense, VarId};
use crate::transform::FlatModel;

pub const DEFAULT_TANGENTS: usize = 3;

/// `w relation constant + slopes[0] u + slopes[1] v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub relation: Relation,
    pub constant: f64,
    pub slopes: [f64; 2],
}

impl EnvelopeRow {
    fn ge(constant: f64, su: f64, sv: f64) -> Self {
        EnvelopeRow {
            relation: Relation::Ge,
            constant,
            slopes: [su, sv],
        }
    }

    fn le(constant: f64, su: f64, sv: f64) -> Self {
        EnvelopeRow {
            relation: Relation::Le,
            constant,
            slopes: [su, sv],
        }
    }

    pub fn rhs_at(&self, u: f64, v: f64) -> f64 {
        self.constant + self.slopes[0] * u + self.slopes[1] * v
    }

    /// Amount by which `w` breaks the row at `(u, v)`; zero when it holds.
    pub fn violation(&self, u: f64, v: f64, w: f64) -> f64 {
        let r = self.rhs_at(u, v);
        match self.relation {
            Relation::Le => (w - r).max(0.0),
            Relation::Ge => (r - w).max(0.0),
            Relation::Eq => (w - r).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRows {
    pub rows: Vec<EnvelopeRow>,
    /// Box the rows were built for; the second entry repeats the first
    /// for univariate terms.
    pub domain: [Interval; 2],
}

impl EnvelopeRows {
    /// Range of `w` the rows admit at `(u, v)`.
    pub fn admitted(&self, u: f64, v: f64) -> Interval {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in &self.rows {
            let val = r.rhs_at(u, v);
            match r.relation {
                Relation::Ge => lo = lo.max(val),
                Relation::Le => hi = hi.min(val),
                Relation::Eq => {
                    lo = lo.max(val);
                    hi = hi.min(val);
                }
            }
        }
        Interval { lo, hi }
    }

    pub fn max_violation(&self, u: f64, v: f64, w: f64) -> f64 {
        self.rows
            .iter()
            .map(|r| r.violation(u, v, w))
            .fold(0.0, f64::max)
    }
}

fn check_finite(b: Interval) -> Result<()> {
    if !b.is_finite() {
        return Err(Error::Domain(format!("envelope over unbounded interval {b}")));
    }
    Ok(())
}

/// McCormick envelope of `w = u v`.
pub fn mccormick_bilinear(x: Interval, y: Interval) -> Result<EnvelopeRows> {
    check_finite(x)?;
    check_finite(y)?;
    let (xl, xu, yl, yu) = (x.lo, x.hi, y.lo, y.hi);
    Ok(EnvelopeRows {
        rows: vec![
            EnvelopeRow::ge(-xl * yl, yl, xl),
            EnvelopeRow::ge(-xu * yu, yu, xu),
            EnvelopeRow::le(-xu * yl, yl, xu),
            EnvelopeRow::le(-xl * yu, yu, xl),
        ],
        domain: [x, y],
    })
}

/// Envelope of `w = u^2`: the secant from above and tangents at both
/// ends and the midpoint from below.
pub fn square_envelope(x: Interval) -> Result<EnvelopeRows> {
    check_finite(x)?;
    let (l, u) = (x.lo, x.hi);
    let mut rows = vec![EnvelopeRow::le(-l * u, l + u, 0.0)];
    let mut points = vec![l, u];
    if u > l {
        points.insert(1, 0.5 * (l + u));
    }
    for t in points {
        rows.push(EnvelopeRow::ge(-t * t, 2.0 * t, 0.0));
    }
    Ok(EnvelopeRows {
        rows,
        domain: [x, x],
    })
}

/// Envelope of `w = f(u)` for concave `f`: the secant from below and
/// `n_tangents` tangents at uniform points from above.
///
/// Where the derivative is infinite (`x^p` at 0) the tangent point moves
/// slightly inside the interval. A point interval yields `w = f(L)`.
pub fn concave_envelope(f: UnivariateFn, x: Interval, n_tangents: usize) -> Result<EnvelopeRows> {
    f.check_domain(x)?;
    if x.hi < x.lo {
        return Err(Error::Domain(format!("empty interval {x}")));
    }
    let (l, u) = (x.lo, x.hi);
    let (fl, fu) = (f.eval(l), f.eval(u));
    if u - l <= 1e-12 * l.abs().max(1.0) {
        let v = f.eval(0.5 * (l + u));
        let slack = (fu - fl).abs();
        return Ok(EnvelopeRows {
            rows: vec![EnvelopeRow::ge(v - slack, 0.0, 0.0), EnvelopeRow::le(v + slack, 0.0, 0.0)],
            domain: [x, x],
        });
    }
    let slope = (fu - fl) / (u - l);
    let mut rows = vec![EnvelopeRow::ge(fl - slope * l, slope, 0.0)];
    let n = n_tangents.max(1);
    for k in 0..n {
        let mut t = if n == 1 {
            0.5 * (l + u)
        } else {
            l + (u - l) * k as f64 / (n - 1) as f64
        };
        if !f.derivative(t).is_finite() {
            t = l + 1e-4 * (u - l);
        }
        let d = f.derivative(t);
        rows.push(EnvelopeRow::le(f.eval(t) - d * t, d, 0.0));
    }
    Ok(EnvelopeRows {
        rows,
        domain: [x, x],
    })
}

/// A nonlinear term as it appears in a relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermKind {
    Bilinear(VarId, VarId),
    Square(VarId),
    Univariate(UnivariateFn, VarId),
}

impl TermKind {
    pub fn vars(&self) -> [VarId; 2] {
        match *self {
            TermKind::Bilinear(a, b) => [a, b],
            TermKind::Square(a) | TermKind::Univariate(_, a) => [a, a],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TermKind::Bilinear(a, b) => x[a.0] * x[b.0],
            TermKind::Square(a) => x[a.0] * x[a.0],
            TermKind::Univariate(f, a) => f.eval(x[a.0]),
        }
    }

    fn range(&self, b: &[Interval]) -> Result<Interval> {
        match *self {
            TermKind::Bilinear(a, c) => Ok(b[a.0].mul(&b[c.0])),
            TermKind::Square(a) => Ok(b[a.0].square()),
            TermKind::Univariate(UnivariateFn::Power(p), a) => b[a.0].powf(p),
            TermKind::Univariate(UnivariateFn::Log, a) => b[a.0].ln(),
        }
    }

    fn envelope(&self, b: &[Interval], n_tangents: usize) -> Result<EnvelopeRows> {
        match *self {
            TermKind::Bilinear(a, c) => mccormick_bilinear(b[a.0], b[c.0]),
            TermKind::Square(a) => square_envelope(b[a.0]),
            TermKind::Univariate(f, a) => concave_envelope(f, b[a.0], n_tangents),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TermKey {
    Bil(usize, usize),
    Pow(usize, u64),
    Log(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedTerm {
    pub kind: TermKind,
    /// LP column of the auxiliary.
    pub aux: usize,
}

/// An LP relaxation of a [`FlatModel`] over a box.
///
/// Columns `0..n_model` are the model variables; auxiliaries follow. The
/// LP always minimizes; for maximization models its objective is the
/// negated model objective.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub lp: LinearProgram,
    pub n_model: usize,
    pub terms: Vec<RelaxedTerm>,
}

impl Relaxation {
    /// `|w - term(x)|` per term at an LP point.
    pub fn term_gaps(&self, lp_x: &[f64]) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| (lp_x[t.aux] - t.kind.eval(lp_x)).abs())
            .collect()
    }

    /// Sum of term gaps each model variable takes part in.
    pub fn violation_by_var(&self, lp_x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_model];
        for (t, g) in self.terms.iter().zip(self.term_gaps(lp_x)) {
            let [a, b] = t.kind.vars();
            out[a.0] += g;
            if b != a {
                out[b.0] += g;
            }
        }
        out
    }
}

struct Builder<'a> {
    bounds: &'a [Interval],
    n_tangents: usize,
    lp: LinearProgram,
    index: BTreeMap<TermKey, usize>,
    terms: Vec<RelaxedTerm>,
}

impl Builder<'_> {
    fn column(&mut self, kind: TermKind, key: TermKey) -> Result<usize> {
        if let Some(&k) = self.index.get(&key) {
            return Ok(self.terms[k].aux);
        }
        for v in kind.vars() {
            let b = self.bounds[v.0];
            if !b.is_finite() {
                return Err(Error::UnboundedVariable {
                    name: format!("{v}"),
                    lower: b.lo,
                    upper: b.hi,
                });
            }
        }
        let range = kind.range(self.bounds)?;
        let env = kind.envelope(self.bounds, self.n_tangents)?;
        let aux = self.lp.add_var(0.0, range.lo, range.hi);
        let [u, v] = kind.vars();
        for r in &env.rows {
            let mut coefs = vec![(aux, 1.0)];
            if r.slopes[0] != 0.0 {
                coefs.push((u.0, -r.slopes[0]));
            }
            if r.slopes[1] != 0.0 {
                coefs.push((v.0, -r.slopes[1]));
            }
            self.lp.add_row(coefs, r.relation, r.constant);
        }
        self.index.insert(key, self.terms.len());
        self.terms.push(RelaxedTerm { kind, aux });
        Ok(aux)
    }

    /// Linear image of `e` over model columns and auxiliaries.
    fn linearize(&mut self, e: &Expression) -> Result<(Vec<(usize, f64)>, f64)> {
        let mut coefs: Vec<(usize, f64)> = e.linear().iter().map(|t| (t.var.0, t.coef)).collect();
        for t in e.bilinear() {
            let (kind, key) = if t.first == t.second {
                (TermKind::Square(t.first), TermKey::Bil(t.first.0, t.first.0))
            } else {
                (
                    TermKind::Bilinear(t.first, t.second),
                    TermKey::Bil(t.first.0, t.second.0),
                )
            };
            let col = self.column(kind, key)?;
            coefs.push((col, t.coef));
        }
        for t in e.powers() {
            let f = UnivariateFn::Power(t.exponent);
            let col = self.column(TermKind::Univariate(f, t.var), TermKey::Pow(t.var.0, f.key()))?;
            coefs.push((col, t.coef));
        }
        for t in e.logs() {
            let f = UnivariateFn::Log;
            let col = self.column(TermKind::Univariate(f, t.var), TermKey::Log(t.var.0))?;
            coefs.push((col, t.coef));
        }
        Ok((coefs, e.constant()))
    }
}

/// Relaxes `model` over `bounds` (one interval per model variable).
///
/// Binaries are relaxed to their interval in `bounds`.
pub fn build_lp_relaxation(model: &FlatModel, bounds: &[Interval]) -> Result<Relaxation> {
    build_lp_relaxation_with(model, bounds, DEFAULT_TANGENTS)
}

pub fn build_lp_relaxation_with(
    model: &FlatModel,
    bounds: &[Interval],
    n_tangents: usize,
) -> Result<Relaxation> {
    let n = model.variables.len();
    if bounds.len() != n {
        return Err(Error::InvalidArgument(format!(
            "box has {} intervals for {n} variables",
            bounds.len()
        )));
    }
    let mut lp = LinearProgram::new();
    for b in bounds {
        lp.add_var(0.0, b.lo, b.hi);
    }
    let mut builder = Builder {
        bounds,
        n_tangents,
        lp,
        index: BTreeMap::new(),
        terms: Vec::new(),
    };
    let sign = match model.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let (objective, c0) = builder.linearize(&model.objective)?;
    for c in &model.constraints {
        let (coefs, k) = builder.linearize(&c.body)?;
        builder.lp.add_row(coefs, c.relation, c.rhs - k);
    }
    let mut lp = builder.lp;
    for (j, a) in objective {
        lp.costs[j] += sign * a;
    }
    lp.offset = sign * c0;
    Ok(Relaxation {
        lp,
        n_model: n,
        terms: builder.terms,
    })
}
