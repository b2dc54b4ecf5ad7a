//! Small random disjunctive models and a brute-force optimum for them.
//!
//! Rows use coefficients in {-1, 0, 1} with integer right-hand sides and
//! integer bounds, so every face contains grid points and the
//! pattern-search directions `{-1, 0, 1}^n` can slide along it.

use rand::Rng;

use qgdp::{Constraint, Disjunct, Disjunction, Expression, GdpModel, Sense, VarId};

/// Up to 4 continuous variables, 2 disjunctions and 3 bilinear or square
/// terms.
pub fn random_instance(rng: &mut impl Rng) -> GdpModel {
    let mut m = GdpModel::new(if rng.gen_bool(0.25) { Sense::Max } else { Sense::Min });
    let n = rng.gen_range(2..=4);
    for i in 0..n {
        let lo = rng.gen_range(-2..=0) as f64;
        let w = rng.gen_range(1..=2) as f64;
        m.add_variable(format!("x{i}"), lo, lo + w);
    }
    let var = |rng: &mut dyn rand::RngCore| VarId(rng.gen_range(0..n));
    let coef = |rng: &mut dyn rand::RngCore| rng.gen_range(-3.0f64..3.0);

    // keeps the optimum away from zero so relative comparisons mean something
    let mut obj = Expression::constant_only(rng.gen_range(3..=8) as f64);
    for _ in 0..rng.gen_range(1..=3) {
        // a repeated variable gives a square term, mostly convex so that
        // optima sit inside faces rather than at vertices
        let (a, b) = (var(rng), var(rng));
        let c = coef(rng);
        obj.add_bilinear(if a == b && rng.gen_bool(0.8) { c.abs() } else { c }, a, b);
    }
    for i in 0..n {
        if rng.gen_bool(0.6) {
            obj.add_linear(coef(rng), VarId(i));
        }
    }
    if obj.bilinear().is_empty() {
        obj.add_bilinear(-1.0, VarId(0), VarId(1));
    }
    m.objective = obj;

    let sign_row = |rng: &mut dyn rand::RngCore, label: String| {
        let mut e = Expression::new();
        for i in 0..n {
            match rng.gen_range(0..3) {
                0 => e.add_linear(1.0, VarId(i)),
                1 => e.add_linear(-1.0, VarId(i)),
                _ => {}
            }
        }
        if e.linear().is_empty() {
            e.add_linear(1.0, VarId(0));
        }
        Constraint::le(label, e, rng.gen_range(-1..=2) as f64)
    };
    if rng.gen_bool(0.7) {
        let c = sign_row(rng, "g0".into());
        m.globals.push(c);
    }
    for d in 0..rng.gen_range(0..=2) {
        let row = sign_row(rng, format!("r{d}"));
        let other = Constraint::ge(format!("s{d}"), row.body.clone(), row.rhs);
        m.disjunctions.push(Disjunction {
            label: format!("d{d}"),
            disjuncts: vec![
                Disjunct {
                    label: format!("d{d}a"),
                    guard: format!("A{d}"),
                    constraints: vec![row],
                    fix_to_zero: vec![],
                },
                Disjunct {
                    label: format!("d{d}b"),
                    guard: format!("B{d}"),
                    constraints: vec![other],
                    fix_to_zero: vec![],
                },
            ],
        });
    }
    m
}

/// `min -x y` over the unit square with `x + y <= 1`; optimum `-1/4`.
pub fn neg_xy() -> GdpModel {
    let mut m = GdpModel::new(Sense::Min);
    let x = m.add_variable("x", 0.0, 1.0);
    let y = m.add_variable("y", 0.0, 1.0);
    m.objective = Expression::new().with_bilinear(-1.0, x, y);
    m.globals.push(Constraint::le(
        "sum",
        Expression::new().with_linear(1.0, x).with_linear(1.0, y),
        1.0,
    ));
    m
}

/// Disjunctive feasibility of `x` for some Boolean choice.
pub fn gdp_feasible(m: &GdpModel, x: &[f64], tol: f64) -> bool {
    let bounds_ok = m
        .variables
        .iter()
        .zip(x)
        .all(|(v, &xi)| xi >= v.lower - tol && xi <= v.upper + tol);
    bounds_ok
        && choices(m).into_iter().any(|rows| rows.iter().all(|c| c.violation(x) <= tol))
}

/// Row sets of every Boolean choice (one disjunct per disjunction).
fn choices(m: &GdpModel) -> Vec<Vec<Constraint>> {
    let mut out = vec![m.globals.clone()];
    for d in &m.disjunctions {
        out = out
            .into_iter()
            .flat_map(|rows| {
                d.disjuncts.iter().map(move |k| {
                    let mut r = rows.clone();
                    r.extend(k.constraints.iter().cloned());
                    r
                })
            })
            .collect();
    }
    out
}

/// Optimum by a grid of `steps` intervals per variable, refined by a
/// pattern search from the best grid points. `None` when no grid point
/// is feasible.
pub fn oracle_optimum(m: &GdpModel, steps: usize) -> Option<f64> {
    let sign = if m.sense == Sense::Max { -1.0 } else { 1.0 };
    let f = |x: &[f64]| sign * m.objective.eval(x);
    let n = m.variables.len();
    let lo: Vec<f64> = m.variables.iter().map(|v| v.lower).collect();
    let hi: Vec<f64> = m.variables.iter().map(|v| v.upper).collect();
    let mut best: Option<f64> = None;
    for rows in choices(m) {
        let feasible = |x: &[f64]| {
            (0..n).all(|i| x[i] >= lo[i] - 1e-12 && x[i] <= hi[i] + 1e-12)
                && rows.iter().all(|c| c.violation(x) <= 1e-9)
        };
        let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
        let total = (steps + 1).pow(n as u32);
        let mut x = vec![0.0; n];
        for k in 0..total {
            let mut r = k;
            for i in 0..n {
                x[i] = lo[i] + (hi[i] - lo[i]) * (r % (steps + 1)) as f64 / steps as f64;
                r /= steps + 1;
            }
            if feasible(&x) {
                pts.push((f(&x), x.clone()));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.truncate(12);
        for (mut fx, mut x) in pts {
            pattern_search(&f, &feasible, &mut x, &mut fx, 1.0 / steps as f64);
            best = Some(best.map_or(fx, |b: f64| b.min(fx)));
        }
    }
    best.map(|b| sign * b)
}

/// Moves along `{-1, 0, 1}^n` directions, halving the step on failure.
fn pattern_search(
    f: &dyn Fn(&[f64]) -> f64,
    feasible: &dyn Fn(&[f64]) -> bool,
    x: &mut Vec<f64>,
    fx: &mut f64,
    mut step: f64,
) {
    let n = x.len();
    let dirs: Vec<Vec<f64>> = (0..3usize.pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let d = (k % 3) as f64 - 1.0;
                    k /= 3;
                    d
                })
                .collect()
        })
        .filter(|d: &Vec<f64>| d.iter().any(|&v| v != 0.0))
        .collect();
    while step > 1e-9 {
        let mut moved = false;
        for d in &dirs {
            let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + step * b).collect();
            if feasible(&y) {
                let fy = f(&y);
                if fy < *fx - 1e-15 {
                    *x = y;
                    *fx = fy;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
}
