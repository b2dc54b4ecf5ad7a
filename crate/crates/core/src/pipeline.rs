//! Load, approximate, flatten, solve and report.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::approx::{apply_approximation, ApproxPolicy, ApproxReport, DEFAULT_FIT_SAMPLES};
use crate::bnb::{solve_global, SolveOptions, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::model::GdpModel;
use crate::transform::{bigm_transform, FlatModel};
use crate::wtn::{build_wtn, relative_error, WtnAudit, WtnData, WtnModel};

pub const DEFAULT_SEGMENTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxChoice {
    None,
    Quad,
    Pwl,
}

impl fmt::Display for ApproxChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApproxChoice::None => "none",
            ApproxChoice::Quad => "quad",
            ApproxChoice::Pwl => "pwl",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub approx: ApproxChoice,
    pub segments: usize,
    pub fit_samples: usize,
    pub solve: SolveOptions,
    pub reference: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            approx: ApproxChoice::None,
            segments: DEFAULT_SEGMENTS,
            fit_samples: DEFAULT_FIT_SAMPLES,
            solve: SolveOptions::default(),
            reference: None,
        }
    }
}

impl PipelineConfig {
    pub fn policy(&self) -> Option<ApproxPolicy> {
        match self.approx {
            ApproxChoice::None => None,
            ApproxChoice::Quad => Some(ApproxPolicy::Quad {
                samples: self.fit_samples,
            }),
            ApproxChoice::Pwl => Some(ApproxPolicy::Pwl {
                segments: self.segments,
            }),
        }
    }
}

pub enum Input {
    Model(GdpModel),
    Wtn(WtnData),
}

/// Size columns of a flattened model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSizes {
    pub continuous_vars: usize,
    pub binary_vars: usize,
    pub constraints: usize,
    pub nonlinear_constraints: usize,
}

impl ModelSizes {
    pub fn of(m: &FlatModel) -> Self {
        ModelSizes {
            continuous_vars: m.n_continuous(),
            binary_vars: m.n_binary(),
            constraints: m.constraints.len(),
            nonlinear_constraints: m.n_nonlinear_constraints(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sizes {
    pub original: ModelSizes,
    pub reformulated: ModelSizes,
}

/// Network checks and exact cost of a WTN incumbent.
#[derive(Debug, Clone, Serialize)]
pub struct WtnSummary {
    pub active_units: Vec<String>,
    /// Cost of the incumbent flows under the true concave cost.
    pub exact_cost: f64,
    pub audit: WtnAudit,
    pub unit_inlet_flows: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub input: String,
    pub approximation: ApproxChoice,
    pub sizes: Sizes,
    pub approximation_report: Option<ApproxReport>,
    pub solve: SolveResult,
    /// Value of each disjunct guard at the incumbent.
    pub selection: BTreeMap<String, bool>,
    pub reference: Option<f64>,
    /// Percent error of the objective against `reference`.
    pub relative_error: Option<f64>,
    pub wtn: Option<WtnSummary>,
}

/// The prepared model of a run, before solving.
pub struct Prepared {
    pub original: FlatModel,
    pub flat: FlatModel,
    pub approx: Option<ApproxReport>,
    pub wtn: Option<WtnModel>,
    pub input: String,
}

pub fn prepare(input: Input, cfg: &PipelineConfig) -> Result<Prepared> {
    let (gdp, wtn, name) = match input {
        Input::Model(m) => (m, None, "model"),
        Input::Wtn(d) => {
            let w = build_wtn(&d)?;
            (w.gdp.clone(), Some(w), "wtn")
        }
    };
    let original = bigm_transform(&gdp)?;
    let (approximated, approx) = match cfg.policy() {
        Some(p) => {
            let (m, r) = apply_approximation(&gdp, p)?;
            (m, Some(r))
        }
        None => {
            if original.has_univariate_nonlinear() {
                return Err(Error::Unsupported(
                    "model has power or log terms; choose an approximation (quad or pwl)".into(),
                ));
            }
            (gdp, None)
        }
    };
    let flat = bigm_transform(&approximated)?;
    Ok(Prepared {
        original,
        flat,
        approx,
        wtn,
        input: name.into(),
    })
}

pub fn run_pipeline(input: Input, cfg: &PipelineConfig) -> Result<Report> {
    let p = prepare(input, cfg)?;
    let solve = solve_global(&p.flat, &cfg.solve)?;
    let mut selection = BTreeMap::new();
    if let Some(x) = &solve.incumbent {
        for (g, v) in &p.flat.booleans {
            selection.insert(g.clone(), x[v.0] > 0.5);
        }
    }
    let relative_error = match (cfg.reference, solve.objective) {
        (Some(r), Some(z)) => Some(relative_error(z, r)?),
        _ => None,
    };
    let wtn = match (&p.wtn, &solve.incumbent) {
        (Some(w), Some(x)) => Some(summarize_wtn(w, &p.flat, x)),
        _ => None,
    };
    Ok(Report {
        input: p.input,
        approximation: cfg.approx,
        sizes: Sizes {
            original: ModelSizes::of(&p.original),
            reformulated: ModelSizes::of(&p.flat),
        },
        approximation_report: p.approx,
        solve,
        selection,
        reference: cfg.reference,
        relative_error,
        wtn,
    })
}

/// Which units a flattened incumbent switches on.
pub fn active_units(w: &WtnModel, flat: &FlatModel, x: &[f64]) -> Vec<bool> {
    w.units
        .iter()
        .map(|u| x[flat.booleans[&u.active_guard].0] > 0.5)
        .collect()
}

pub fn summarize_wtn(w: &WtnModel, flat: &FlatModel, x: &[f64]) -> WtnSummary {
    let active = active_units(w, flat, x);
    WtnSummary {
        active_units: w
            .data
            .units
            .iter()
            .zip(&active)
            .filter(|(_, &a)| a)
            .map(|(u, _)| u.name.clone())
            .collect(),
        exact_cost: w.exact_cost(x, &active),
        audit: w.audit(x, &active),
        unit_inlet_flows: w
            .data
            .units
            .iter()
            .zip(&w.units)
            .map(|(u, v)| (u.name.clone(), x[v.inlet_flow.0]))
            .collect(),
    }
}

impl Report {
    /// Exit status convention of the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self.solve.status {
            SolveStatus::Optimal | SolveStatus::Feasible => 0,
            SolveStatus::Infeasible => 2,
            SolveStatus::TimeLimit | SolveStatus::NodeLimit | SolveStatus::Incomplete => 3,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Human-readable summary with the size table.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let o = &self.sizes.original;
        let r = &self.sizes.reformulated;
        let _ = writeln!(s, "{:<14} {:>12} {:>12} {:>18}", "model", "# cont. vars", "# binary vars", "# const (nl)");
        for (name, z) in [("original", o), ("reformulated", r)] {
            let cons = format!("{} ({})", z.constraints, z.nonlinear_constraints);
            let _ = writeln!(s, "{:<14} {:>12} {:>12} {:>18}", name, z.continuous_vars, z.binary_vars, cons);
        }
        let _ = writeln!(s);
        if let Some(a) = &self.approximation_report {
            let _ = writeln!(s, "approximation: {}", a.policy);
            for t in &a.terms {
                let _ = writeln!(
                    s,
                    "  {} of {} in {} over {}: max error {:.3e}, rms {:.3e}",
                    t.kind, t.var_name, t.scope, t.domain, t.max_abs_error, t.rms_error
                );
            }
        }
        let sol = &self.solve;
        let _ = writeln!(s, "status: {}", sol.status);
        match sol.objective {
            Some(z) => {
                let _ = writeln!(s, "objective: {z:.6}");
            }
            None => {
                let _ = writeln!(s, "objective: none");
            }
        }
        let _ = writeln!(s, "bound: {:.6}", sol.bound);
        let _ = writeln!(s, "gap: {:.3e}", sol.gap);
        let _ = writeln!(s, "nodes: {}  time: {:.2} s", sol.nodes, sol.wall_time);
        if let (Some(r), Some(e)) = (self.reference, self.relative_error) {
            let _ = writeln!(s, "relative error vs {r}: {e:.4} %");
        }
        if let Some(w) = &self.wtn {
            let _ = writeln!(s, "active units: {}", w.active_units.join(", "));
            let _ = writeln!(s, "exact cost at incumbent: {:.6}", w.exact_cost);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_rejects_power_terms() {
        let data = WtnData::from_json_str(
            r#"{"contaminants":["A"],"feeds":[{"name":"F","flow":1,"concentrations":{"A":1}}],
                "units":[{"name":"U","alpha":{"A":0.5},"L":0,"beta":1,"gamma":1,"theta":1}],
                "limits":{"A":1}}"#,
        )
        .unwrap();
        let err = prepare(Input::Wtn(data), &PipelineConfig::default()).err().unwrap();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
