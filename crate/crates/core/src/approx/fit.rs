use serde::{Deserialize, Serialize};

use super::{check_fit_domain, uniform_grid, UnivariateFn};
use crate::error::{Error, Result};
use crate::interval::Interval;

pub const DEFAULT_FIT_SAMPLES: usize = 1000;

/// Points in the uniform grid used to certify approximation errors.
pub const ERROR_GRID_POINTS: usize = 10_001;

/// Least-squares quadratic `a x^2 + b x + c` over `domain`.
///
/// `a` is negative for concave targets; the resulting square term is then
/// nonconvex and handled by the global solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub domain: Interval,
    pub n_samples: usize,
    /// Max `|q - f|` over the 10,001-point grid.
    pub max_abs_error: f64,
    pub rms_error: f64,
    /// `||N theta - r|| / ||r||` for the normal equations `N theta = r`
    /// assembled in `x`.
    pub normal_residual: f64,
}

impl QuadFit {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    /// Sum of squared residuals over the fit samples.
    pub fn sse(&self, f: UnivariateFn) -> f64 {
        sample_sse(f, self.domain, self.n_samples, self.a, self.b, self.c)
    }
}

pub(crate) fn sample_sse(f: UnivariateFn, domain: Interval, n: usize, a: f64, b: f64, c: f64) -> f64 {
    uniform_grid(domain, n)
        .map(|x| {
            let r = (a * x + b) * x + c - f.eval(x);
            r * r
        })
        .sum()
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (r[row] - s) / m[row][row];
    }
    Ok(x)
}

/// Normal equations for the basis `(t^2, t, 1)` over the sample points.
fn normal_equations(points: impl Iterator<Item = (f64, f64)>) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for (t, y) in points {
        let t2 = t * t;
        s[0] += 1.0;
        s[1] += t;
        s[2] += t2;
        s[3] += t2 * t;
        s[4] += t2 * t2;
        r[0] += t2 * y;
        r[1] += t * y;
        r[2] += y;
    }
    let n = [[s[4], s[3], s[2]], [s[3], s[2], s[1]], [s[2], s[1], s[0]]];
    (n, r)
}

/// Fits `f` on `n_samples` uniform samples of `domain` by least squares.
///
/// The 3x3 normal equations are solved in the centred, scaled coordinate
/// `t = (x - m) / h` and mapped back, which keeps them well conditioned on
/// wide domains; the residual of the unscaled system is recorded.
pub fn fit_quadratic(f: UnivariateFn, domain: Interval, n_samples: usize) -> Result<QuadFit> {
    check_fit_domain(f, domain)?;
    fit_quadratic_fn(|x| f.eval(x), domain, n_samples)
}

/// [`fit_quadratic`] for an arbitrary target function.
pub fn fit_quadratic_fn(
    f: impl Fn(f64) -> f64,
    domain: Interval,
    n_samples: usize,
) -> Result<QuadFit> {
    if !(domain.width() >= 1e-12) || !domain.is_finite() {
        return Err(Error::DegenerateDomain {
            lower: domain.lo,
            upper: domain.hi,
        });
    }
    if n_samples < 3 {
        return Err(Error::InvalidArgument(format!(
            "quadratic fit needs at least 3 samples, got {n_samples}"
        )));
    }
    let m = domain.mid();
    let h = 0.5 * domain.width();

    let samples: Vec<(f64, f64)> = uniform_grid(domain, n_samples).map(|x| (x, f(x))).collect();
    let (nt, rt) = normal_equations(samples.iter().map(|&(x, y)| ((x - m) / h, y)));
    let [ta, tb, tc] = solve3(nt, rt)?;

    // q(x) = ta ((x-m)/h)^2 + tb (x-m)/h + tc
    let h2 = h * h;
    let a = ta / h2;
    let b = -2.0 * ta * m / h2 + tb / h;
    let c = ta * m * m / h2 - tb * m / h + tc;

    let (nx, rx) = normal_equations(samples.iter().copied());
    let theta = [a, b, c];
    let mut res2 = 0.0;
    for i in 0..3 {
        let row: f64 = (0..3).map(|k| nx[i][k] * theta[k]).sum();
        res2 += (row - rx[i]).powi(2);
    }
    let rnorm = rx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let normal_residual = if rnorm > 0.0 { res2.sqrt() / rnorm } else { res2.sqrt() };

    let mut fit = QuadFit {
        a,
        b,
        c,
        domain,
        n_samples,
        max_abs_error: 0.0,
        rms_error: 0.0,
        normal_residual,
    };
    let (max, rms) = grid_errors(|x| fit.eval(x), &f, domain);
    fit.max_abs_error = max;
    fit.rms_error = rms;
    Ok(fit)
}

/// Max and RMS of `|g - f|` over the certification grid.
pub(crate) fn grid_errors(
    g: impl Fn(f64) -> f64,
    f: &impl Fn(f64) -> f64,
    domain: Interval,
) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sq = 0.0;
    for x in uniform_grid(domain, ERROR_GRID_POINTS) {
        let e = (g(x) - f(x)).abs();
        max = max.max(e);
        sq += e * e;
    }
    (max, (sq / ERROR_GRID_POINTS as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve3_identity() {
        let x = solve3([[2.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 1.0]], [2.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, [1.0, 0.5, 3.0]);
    }

    #[test]
    fn exact_for_quadratic_and_constant_targets() {
        for (lo, hi) in [(0.0, 1.0), (-3.0, 7.0), (100.0, 250.0)] {
            let fit = fit_quadratic_fn(|x| x * x, Interval::new(lo, hi), 50).unwrap();
            assert!((fit.a - 1.0).abs() < 1e-9, "{fit:?}");
            assert!(fit.b.abs() < 1e-7 * hi.abs().max(1.0), "{fit:?}");
            assert!(fit.c.abs() < 1e-6 * (hi * hi).max(1.0), "{fit:?}");
            assert!(fit.max_abs_error < 1e-8 * (hi * hi).max(1.0));
        }
        let fit = fit_quadratic_fn(|_| 5.0, Interval::new(2.0, 9.0), 10).unwrap();
        assert!(fit.a.abs() < 1e-12 && fit.b.abs() < 1e-11);
        assert!((fit.c - 5.0).abs() < 1e-11);
        assert!(fit.max_abs_error < 1e-11);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = UnivariateFn::Power(0.7);
        assert!(matches!(
            fit_quadratic(f, Interval::new(1.0, 1.0 + 1e-13), 100),
            Err(Error::DegenerateDomain { .. })
        ));
        assert!(fit_quadratic(f, Interval::new(0.0, 1.0), 2).is_err());
        assert!(fit_quadratic(UnivariateFn::Log, Interval::new(0.0, 1.0), 10).is_err());
        assert!(fit_quadratic(f, Interval::new(-1.0, 1.0), 10).is_err());
    }

    #[test]
    fn concave_target_gives_negative_curvature() {
        let fit = fit_quadratic(UnivariateFn::Power(0.7), Interval::new(0.0, 100.0), 1000).unwrap();
        assert!(fit.a < 0.0);
        assert!(fit.normal_residual < 1e-8, "{}", fit.normal_residual);
    }
}
