use proptest::prelude::*;

use qgdp::bnb::feasibility_check;
use qgdp::{
    bigm_transform, interval_eval, Constraint, Disjunct, Disjunction, Expression, GdpModel,
    Interval, Literal, LogicClause, Provenance, Relation, Sense, VarId,
};

fn bounds_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, 0.0f64..4.0), n)
        .prop_map(|v| v.into_iter().map(|(lo, w)| (lo, lo + w)).collect())
}

/// Linear + bilinear expression over `n` variables.
fn expr_strategy(n: usize) -> impl Strategy<Value = Expression> {
    (
        -3.0f64..3.0,
        prop::collection::vec((-4.0f64..4.0, 0..n), 0..4),
        prop::collection::vec((-2.0f64..2.0, 0..n, 0..n), 0..3),
    )
        .prop_map(|(c, lin, bil)| {
            let mut e = Expression::constant_only(c);
            for (k, v) in lin {
                e.add_linear(k, VarId(v));
            }
            for (k, a, b) in bil {
                e.add_bilinear(k, VarId(a), VarId(b));
            }
            e
        })
}

fn point_in(bounds: &[(f64, f64)], t: &[f64]) -> Vec<f64> {
    bounds
        .iter()
        .zip(t)
        .map(|(&(lo, hi), &s)| lo + s * (hi - lo))
        .collect()
}

proptest! {
    #[test]
    fn interval_eval_encloses_samples(
        b in bounds_strategy(3),
        e in expr_strategy(3),
        ts in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 20),
    ) {
        let boxes: Vec<Interval> = b.iter().map(|&(l, h)| Interval::new(l, h)).collect();
        let r = interval_eval(&e, &boxes).unwrap();
        for t in &ts {
            let v = e.eval(&point_in(&b, t));
            prop_assert!(r.contains_within(v, 1e-9 * (1.0 + v.abs())), "{v} outside {r:?}");
        }
    }

    #[test]
    fn power_and_log_enclosures(lo in 0.01f64..5.0, w in 0.0f64..5.0, p in 0.05f64..0.95, s in 0.0f64..=1.0) {
        let mut m = GdpModel::new(Sense::Min);
        let x = m.add_variable("x", lo, lo + w);
        let e = Expression::new().with_power(2.0, x, p).with_log(-1.5, x);
        let r = interval_eval(&e, &m.bounds()).unwrap();
        let v = e.eval(&[lo + s * w]);
        prop_assert!(r.contains_within(v, 1e-9 * (1.0 + v.abs())));
    }

    #[test]
    fn bigm_off_never_cuts_and_on_restores_the_row(
        b in bounds_strategy(3),
        e in expr_strategy(3),
        rel in prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)],
        rhs in -4.0f64..4.0,
        ts in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 20),
    ) {
        let mut m = GdpModel::new(Sense::Min);
        for (i, &(l, h)) in b.iter().enumerate() {
            m.add_variable(format!("x{i}"), l, h);
        }
        let row = Constraint::new("row", e, rel, rhs);
        m.disjunctions.push(Disjunction {
            label: "d".into(),
            disjuncts: vec![
                Disjunct { label: "on".into(), guard: "Y".into(), constraints: vec![row.clone()], fix_to_zero: vec![] },
                Disjunct { label: "off".into(), guard: "N".into(), constraints: vec![], fix_to_zero: vec![] },
            ],
        });
        let flat = bigm_transform(&m).unwrap();
        let y = flat.booleans["Y"];
        let relaxed: Vec<&Constraint> = flat
            .constraints
            .iter()
            .zip(&flat.provenance)
            .filter(|(_, p)| matches!(p, Provenance::Disjunct { disjunct, .. } if disjunct == "on"))
            .map(|(c, _)| c)
            .collect();
        prop_assert!(!relaxed.is_empty());

        // corners plus random interior points
        let mut pts: Vec<Vec<f64>> = (0..8)
            .map(|k| (0..3).map(|i| if k >> i & 1 == 1 { b[i].1 } else { b[i].0 }).collect())
            .collect();
        pts.extend(ts.iter().map(|t| point_in(&b, t)));
        for p in pts {
            let mut x = p.clone();
            x.resize(flat.variables.len(), 0.0);
            x[y.0] = 0.0;
            for c in &relaxed {
                prop_assert!(c.violation(&x) <= 1e-9, "y=0 cuts {p:?}: {}", c.violation(&x));
            }
            x[y.0] = 1.0;
            let on: f64 = relaxed.iter().map(|c| c.violation(&x)).fold(0.0, f64::max);
            let orig = row.violation(&p);
            prop_assert!((on - orig).abs() <= 1e-12 * (1.0 + orig.abs() + row.rhs.abs()) * 10.0,
                "y=1 differs: {on} vs {orig}");
        }
    }
}

/// Feasibility under the disjunctive semantics for a fixed Boolean choice.
fn gdp_feasible(m: &GdpModel, x: &[f64], truth: &dyn Fn(&str) -> bool, tol: f64) -> bool {
    let rows_ok = |cs: &[Constraint]| cs.iter().all(|c| c.violation(x) <= tol);
    if !rows_ok(&m.globals) {
        return false;
    }
    for d in &m.disjunctions {
        if d.disjuncts.iter().filter(|k| truth(&k.guard)).count() != 1 {
            return false;
        }
        for k in &d.disjuncts {
            if truth(&k.guard) {
                if !rows_ok(&k.constraints) {
                    return false;
                }
            } else if k.fix_to_zero.iter().any(|v| x[v.0].abs() > tol) {
                return false;
            }
        }
    }
    m.logic
        .iter()
        .all(|cl| cl.literals.iter().any(|l| truth(&l.boolean) == l.positive))
}

fn small_gdp() -> impl Strategy<Value = GdpModel> {
    (
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -2.0f64..2.0, -4.0f64..4.0), 3),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(rows, zero, clause)| {
            let mut m = GdpModel::new(Sense::Min);
            let x = m.add_variable("x", -2.0, 2.0);
            let y = m.add_variable("y", -2.0, 2.0);
            let mk = |(a, b, c, r): (f64, f64, f64, f64), l: &str| {
                Constraint::le(l, Expression::new().with_linear(a, x).with_linear(b, y).with_bilinear(c, x, y), r)
            };
            m.globals.push(mk(rows[0], "g"));
            m.disjunctions.push(Disjunction {
                label: "d".into(),
                disjuncts: vec![
                    Disjunct { label: "a".into(), guard: "A".into(), constraints: vec![mk(rows[1], "ra")], fix_to_zero: vec![] },
                    Disjunct {
                        label: "b".into(),
                        guard: "B".into(),
                        constraints: vec![Constraint::eq("rb", mk(rows[2], "").body, rows[2].3)],
                        fix_to_zero: if zero { vec![x] } else { vec![] },
                    },
                ],
            });
            m.disjunctions.push(Disjunction {
                label: "e".into(),
                disjuncts: vec![
                    Disjunct { label: "c".into(), guard: "C".into(), constraints: vec![], fix_to_zero: vec![y] },
                    Disjunct { label: "d".into(), guard: "D".into(), constraints: vec![], fix_to_zero: vec![] },
                ],
            });
            if clause {
                m.logic.push(LogicClause { literals: vec![Literal::neg("A"), Literal::pos("C")] });
            }
            m
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every point and Boolean choice is feasible for the flattened model
    /// exactly when it is feasible for the disjunctive one.
    #[test]
    fn flattening_preserves_the_feasible_set(m in small_gdp()) {
        let flat = bigm_transform(&m).unwrap();
        let guards = ["A", "B", "C", "D"];
        let grid = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        for bits in 0..16u32 {
            let truth = |g: &str| bits >> guards.iter().position(|h| *h == g).unwrap() & 1 == 1;
            for &xv in &grid {
                for &yv in &grid {
                    let p = [xv, yv];
                    let mut z = p.to_vec();
                    z.resize(flat.variables.len(), 0.0);
                    for g in guards {
                        z[flat.booleans[g].0] = if truth(g) { 1.0 } else { 0.0 };
                    }
                    let want = gdp_feasible(&m, &p, &truth, 1e-9);
                    let got = feasibility_check(&z, &flat, 1e-9).feasible;
                    prop_assert_eq!(want, got, "bits {:04b} at {:?}", bits, p);
                }
            }
        }
    }
}
