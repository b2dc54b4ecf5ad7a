mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_gdp::{gdp_feasible, neg_xy, oracle_optimum, random_instance};
use qgdp::bnb::{feasibility_check, relative_gap, solve_global, SolveOptions, SolveStatus};
use qgdp::{bigm_transform, GdpModel, Sense};

fn solve(m: &GdpModel, opts: &SolveOptions) -> qgdp::bnb::SolveResult {
    solve_global(&bigm_transform(m).unwrap(), opts).unwrap()
}

#[test]
fn neg_xy_matches_closed_form() {
    let r = solve(&neg_xy(), &SolveOptions::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective.unwrap() + 0.25).abs() <= 1e-4 * 0.25 + 1e-12);
    assert_eq!(oracle_optimum(&neg_xy(), 20).map(|z| (z * 1e9).round() / 1e9), Some(-0.25));
}

#[test]
fn random_instances_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..24 {
        let m = random_instance(&mut rng);
        let r = solve(&m, &SolveOptions::default());
        let oracle = oracle_optimum(&m, 10);
        match oracle {
            None => assert_eq!(r.status, SolveStatus::Infeasible, "case {case}"),
            Some(o) => {
                assert_eq!(r.status, SolveStatus::Optimal, "case {case}");
                let z = r.objective.unwrap();
                let x = r.incumbent.as_ref().unwrap();
                assert!(gdp_feasible(&m, &x[..m.variables.len()], 1e-6), "case {case}");
                assert!(
                    (z - o).abs() <= 1e-3 * o.abs().max(1.0),
                    "case {case}: solver {z} oracle {o}"
                );
                // the proven bound must be valid against the oracle
                let valid = match m.sense {
                    Sense::Min => r.bound <= o + 1e-6 * o.abs().max(1.0),
                    Sense::Max => r.bound >= o - 1e-6 * o.abs().max(1.0),
                };
                assert!(valid, "case {case}: bound {} vs oracle {o}", r.bound);
            }
        }
    }
}

#[test]
fn reported_gap_is_truthful() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let m = random_instance(&mut rng);
        let r = solve(&m, &SolveOptions::default());
        if let Some(z) = r.objective {
            assert!((r.gap - relative_gap(z, r.bound)).abs() <= 1e-12);
            if r.status == SolveStatus::Optimal {
                assert!(r.gap <= 1e-4 + 1e-12, "optimal with gap {}", r.gap);
            }
            match m.sense {
                Sense::Min => assert!(r.bound <= z + 1e-12),
                Sense::Max => assert!(r.bound >= z - 1e-12),
            }
        }
    }
}

/// With a single worker the search is deterministic, so growing node
/// limits replay the same tree: the bound may only tighten.
#[test]
fn bound_tightens_with_more_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..6 {
        let m = random_instance(&mut rng);
        let flat = bigm_transform(&m).unwrap();
        let mut last: Option<f64> = None;
        for limit in [1, 2, 4, 8, 16, 64] {
            let opts = SolveOptions {
                node_limit: Some(limit),
                ..SolveOptions::default()
            };
            let r = solve_global(&flat, &opts).unwrap();
            if r.status == SolveStatus::Infeasible {
                break;
            }
            let b = match m.sense {
                Sense::Min => r.bound,
                Sense::Max => -r.bound,
            };
            if let Some(prev) = last {
                assert!(b >= prev - 1e-9 * prev.abs().max(1.0), "{b} < {prev} at {limit}");
            }
            last = Some(b);
            if r.status == SolveStatus::Optimal {
                break;
            }
        }
    }
}

#[test]
fn workers_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..8 {
        let m = random_instance(&mut rng);
        let one = solve(&m, &SolveOptions::default());
        let four = solve(&m, &SolveOptions { workers: 4, ..SolveOptions::default() });
        assert_eq!(one.status, four.status, "case {case}");
        if let (Some(a), Some(b)) = (one.objective, four.objective) {
            assert!((a - b).abs() <= 2e-4 * a.abs().max(1.0), "case {case}: {a} vs {b}");
            let flat = bigm_transform(&m).unwrap();
            assert!(feasibility_check(four.incumbent.as_ref().unwrap(), &flat, 1e-6).feasible);
        }
    }
}
