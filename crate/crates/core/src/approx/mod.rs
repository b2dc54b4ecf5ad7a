//! Replacement of concave power and log terms by quadratic fits or
//! incremental piecewise-linear encodings.

mod apply;
mod fit;
mod pwl;

pub use apply::{apply_approximation, ApproxPolicy, ApproxReport, Approximate, TermReport};
pub use fit::{fit_quadratic, fit_quadratic_fn, QuadFit, DEFAULT_FIT_SAMPLES, ERROR_GRID_POINTS};
pub use pwl::{build_pwl, encode_pwl_incremental, PwlEncoding, PwlTable};

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// The univariate nonlinearities an approximation can target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnivariateFn {
    /// `x^p`, `0 < p < 1`.
    Power(f64),
    Log,
}

impl UnivariateFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            UnivariateFn::Power(p) => x.max(0.0).powf(p),
            UnivariateFn::Log => x.ln(),
        }
    }

    /// First derivative; infinite for `x^p` at 0.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            UnivariateFn::Power(p) => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    p * x.powf(p - 1.0)
                }
            }
            UnivariateFn::Log => 1.0 / x,
        }
    }

    pub fn check_domain(&self, domain: Interval) -> Result<()> {
        if !domain.is_finite() {
            return Err(Error::Domain(format!("{self} over unbounded domain {domain}")));
        }
        match *self {
            UnivariateFn::Power(p) => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Domain(format!("exponent {p} outside (0, 1)")));
                }
                if domain.lo < 0.0 {
                    return Err(Error::Domain(format!("{self} over {domain} reaches x < 0")));
                }
            }
            UnivariateFn::Log => {
                if domain.lo <= 0.0 {
                    return Err(Error::Domain(format!("{self} over {domain} reaches x <= 0")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn key(&self) -> u64 {
        match *self {
            UnivariateFn::Power(p) => p.to_bits(),
            UnivariateFn::Log => u64::MAX,
        }
    }
}

impl fmt::Display for UnivariateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnivariateFn::Power(p) => write!(f, "x^{p}"),
            UnivariateFn::Log => f.write_str("ln(x)"),
        }
    }
}

fn check_fit_domain(f: UnivariateFn, domain: Interval) -> Result<()> {
    if !(domain.width() >= 1e-12) {
        return Err(Error::DegenerateDomain {
            lower: domain.lo,
            upper: domain.hi,
        });
    }
    f.check_domain(domain)
}

/// `n` uniformly spaced points from `lo` to `hi` inclusive.
pub(crate) fn uniform_grid(domain: Interval, n: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = (domain.lo, domain.hi);
    let last = n.saturating_sub(1).max(1) as f64;
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * (i as f64 / last)
        }
    })
}
