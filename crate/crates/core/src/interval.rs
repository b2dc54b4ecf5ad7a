//! Closed real intervals and sound range enclosure of model expressions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Expression;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

// 0 * inf is taken as 0: a zero coefficient or a zero-width factor never
// contributes, whatever the other bound is.
fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_within(&self, v: f64, tol: f64) -> bool {
        self.lo - tol <= v && v <= self.hi + tol
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }

    pub fn scale(&self, k: f64) -> Interval {
        let a = mul_ext(k, self.lo);
        let b = mul_ext(k, self.hi);
        Interval::new(a.min(b), a.max(b))
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    pub fn shift(&self, c: f64) -> Interval {
        Interval::new(self.lo + c, self.hi + c)
    }

    /// Product range from the four corner products.
    pub fn mul(&self, other: &Interval) -> Interval {
        let c = [
            mul_ext(self.lo, other.lo),
            mul_ext(self.lo, other.hi),
            mul_ext(self.hi, other.lo),
            mul_ext(self.hi, other.hi),
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    pub fn square(&self) -> Interval {
        let a = mul_ext(self.lo, self.lo);
        let b = mul_ext(self.hi, self.hi);
        if self.lo <= 0.0 && self.hi >= 0.0 {
            Interval::new(0.0, a.max(b))
        } else {
            Interval::new(a.min(b), a.max(b))
        }
    }

    /// `x^p` for `0 < p < 1`; requires `lo >= 0`.
    pub fn powf(&self, p: f64) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!(
                "x^{p} over [{}, {}] reaches negative x",
                self.lo, self.hi
            )));
        }
        Ok(Interval::new(self.lo.powf(p), self.hi.powf(p)))
    }

    pub fn ln(&self) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::Domain(format!(
                "ln(x) over [{}, {}] reaches x <= 0",
                self.lo, self.hi
            )));
        }
        Ok(Interval::new(self.lo.ln(), self.hi.ln()))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Encloses the range of `expr` over `bounds` (indexed by variable id).
///
/// The enclosure is sound but not tight in general: each term is bounded
/// on its own, so dependencies between terms sharing a variable are lost.
pub fn interval_eval(expr: &Expression, bounds: &[Interval]) -> Result<Interval> {
    let mut acc = Interval::point(expr.constant());
    for t in expr.linear() {
        acc = acc.add(&bounds[t.var.0].scale(t.coef));
    }
    for t in expr.bilinear() {
        let range = if t.first == t.second {
            bounds[t.first.0].square()
        } else {
            bounds[t.first.0].mul(&bounds[t.second.0])
        };
        acc = acc.add(&range.scale(t.coef));
    }
    for t in expr.powers() {
        acc = acc.add(&bounds[t.var.0].powf(t.exponent)?.scale(t.coef));
    }
    for t in expr.logs() {
        acc = acc.add(&bounds[t.var.0].ln()?.scale(t.coef));
    }
    Ok(acc)
}
