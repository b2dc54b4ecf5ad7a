use std::path::PathBuf;

use qgdp::approx::ApproxPolicy;
use qgdp::bnb::SolveStatus;
use qgdp::pipeline::{run_pipeline, ApproxChoice, Input, PipelineConfig};
use qgdp::wtn::{build_wtn, WtnData};
use qgdp::{bigm_transform, Error};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn shipped_instances_load_and_flatten() {
    for (file, feeds, units, contaminants) in [
        ("wtn_minimal.json", 1, 1, 1),
        ("wtn_2x2x2.json", 2, 2, 2),
        ("wtn_5x4x4.json", 5, 4, 4),
    ] {
        let d = WtnData::load(data(file)).unwrap();
        assert_eq!(d.feeds.len(), feeds, "{file}");
        assert_eq!(d.units.len(), units, "{file}");
        assert_eq!(d.contaminants.len(), contaminants, "{file}");
        let w = build_wtn(&d).unwrap();
        let flat = bigm_transform(&w.gdp).unwrap();
        assert_eq!(flat.n_binary(), 2 * units, "{file}");
        for policy in [ApproxPolicy::quad(), ApproxPolicy::pwl(11)] {
            let (am, rep) = qgdp::approx::apply_approximation(&w.gdp, policy).unwrap();
            assert_eq!(rep.terms.len(), units, "{file}");
            assert!(!bigm_transform(&am).unwrap().has_univariate_nonlinear());
        }
    }
}

#[test]
fn unknown_fields_name_the_culprit() {
    let bad = r#"{"contaminants":["A"],"feeds":[{"name":"F","flow":1,"concentrations":{"A":1}}],
        "units":[{"name":"U","alpha":{"B":0.5},"L":0,"beta":1,"gamma":1,"theta":1}],
        "limits":{"A":1}}"#;
    match WtnData::from_json_str(bad) {
        Err(Error::InvalidInstance { field, .. }) => assert!(field.contains("U"), "{field}"),
        other => panic!("expected an invalid-instance error, got {other:?}"),
    }
}

#[test]
fn quad_solution_of_the_small_network_is_physical() {
    let cfg = PipelineConfig {
        approx: ApproxChoice::Quad,
        ..PipelineConfig::default()
    };
    let d = WtnData::load(data("wtn_2x2x2.json")).unwrap();
    let r = run_pipeline(Input::Wtn(d), &cfg).unwrap();
    assert_eq!(r.solve.status, SolveStatus::Optimal);
    let w = r.wtn.as_ref().unwrap();
    assert!(w.audit.passes(1e-6), "{:?}", w.audit);
    // both units are needed to meet the limits on this instance
    assert_eq!(w.active_units, ["U1", "U2"]);
    let e: f64 = r.approximation_report.as_ref().unwrap().terms.iter().map(|t| t.max_abs_error).sum();
    let theta_max = 3.0;
    assert!((w.exact_cost - r.solve.objective.unwrap()).abs() <= theta_max * e);
}
