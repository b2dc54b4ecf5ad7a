//! Water-treatment-network design: instance data, superstructure builder
//! and the checks applied to its solutions.
//!
//! Every feed splits to each unit mixer and to discharge; every unit
//! splitter sends to each other unit's mixer (and its own when recycling is
//! allowed) and to discharge. A unit is either active, treating its inlet
//! at fixed recoveries for a concave cost, or inactive with no inlet flow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Constraint, Disjunct, Disjunction, Expression, GdpModel, Sense, VarId};

pub const COST_EXPONENT: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feed {
    pub name: String,
    pub flow: f64,
    pub concentrations: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub name: String,
    /// Fraction of each contaminant removed.
    pub alpha: BTreeMap<String, f64>,
    #[serde(alias = "L")]
    pub min_flow: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WtnOptions {
    #[serde(default)]
    pub self_recycle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WtnData {
    pub contaminants: Vec<String>,
    pub feeds: Vec<Feed>,
    pub units: Vec<Unit>,
    /// Upper limit on each contaminant's discharged mass flow.
    pub limits: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: WtnOptions,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidInstance {
        field: field.into(),
        message: message.into(),
    }
}

fn check_nonneg(field: String, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(invalid(field, format!("must be a finite non-negative number, got {v}")));
    }
    Ok(())
}

fn check_keys(field: &str, map: &BTreeMap<String, f64>, known: &BTreeSet<&str>) -> Result<()> {
    for k in map.keys() {
        if !known.contains(k.as_str()) {
            return Err(invalid(field, format!("unknown contaminant '{k}'")));
        }
    }
    for k in known {
        if !map.contains_key(*k) {
            return Err(invalid(field, format!("missing entry for contaminant '{k}'")));
        }
    }
    Ok(())
}

impl WtnData {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let data: WtnData =
            serde_json::from_str(s).map_err(|e| invalid("instance", e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.contaminants.is_empty() {
            return Err(invalid("contaminants", "at least one contaminant is required"));
        }
        if self.feeds.is_empty() {
            return Err(invalid("feeds", "at least one feed is required"));
        }
        if self.units.is_empty() {
            return Err(invalid("units", "at least one unit is required"));
        }
        let known: BTreeSet<&str> = self.contaminants.iter().map(String::as_str).collect();
        if known.len() != self.contaminants.len() {
            return Err(invalid("contaminants", "duplicate name"));
        }
        let mut names = BTreeSet::new();
        for f in &self.feeds {
            if !names.insert(f.name.as_str()) {
                return Err(invalid("feeds", format!("duplicate name '{}'", f.name)));
            }
            check_nonneg(format!("feeds.{}.flow", f.name), f.flow)?;
            let field = format!("feeds.{}.concentrations", f.name);
            check_keys(&field, &f.concentrations, &known)?;
            for (j, &c) in &f.concentrations {
                check_nonneg(format!("{field}.{j}"), c)?;
            }
        }
        for u in &self.units {
            if !names.insert(u.name.as_str()) {
                return Err(invalid("units", format!("duplicate name '{}'", u.name)));
            }
            let field = format!("units.{}.alpha", u.name);
            check_keys(&field, &u.alpha, &known)?;
            for (j, &a) in &u.alpha {
                if !(0.0..=1.0).contains(&a) {
                    return Err(invalid(format!("{field}.{j}"), format!("must lie in [0, 1], got {a}")));
                }
            }
            check_nonneg(format!("units.{}.min_flow", u.name), u.min_flow)?;
            check_nonneg(format!("units.{}.beta", u.name), u.beta)?;
            check_nonneg(format!("units.{}.gamma", u.name), u.gamma)?;
            check_nonneg(format!("units.{}.theta", u.name), u.theta)?;
        }
        check_keys("limits", &self.limits, &known)?;
        for (j, &t) in &self.limits {
            check_nonneg(format!("limits.{j}"), t)?;
        }
        if self.total_flow() <= 0.0 {
            return Err(invalid("feeds", "total feed flow must be positive"));
        }
        Ok(())
    }

    pub fn total_flow(&self) -> f64 {
        self.feeds.iter().map(|f| f.flow).sum()
    }

    /// Largest feed concentration of contaminant `j`.
    pub fn max_concentration(&self, j: &str) -> f64 {
        self.feeds
            .iter()
            .map(|f| f.concentrations[j])
            .fold(0.0, f64::max)
    }

    /// Treatment cost of unit `t` at inlet flow `flow`.
    pub fn unit_cost(&self, t: usize, flow: f64) -> f64 {
        let u = &self.units[t];
        u.beta * flow + u.gamma + u.theta * flow.max(0.0).powf(COST_EXPONENT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Endpoint {
    Feed(usize),
    Unit(usize),
    Discharge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stream {
    pub name: String,
    pub source: Endpoint,
    pub sink: Endpoint,
}

/// The stream set of the superstructure in a fixed order: feed arcs first,
/// then unit arcs, each source's arcs to units before discharge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WtnStreams {
    pub streams: Vec<Stream>,
}

impl WtnStreams {
    pub fn enumerate(data: &WtnData) -> Self {
        let mut streams = Vec::new();
        let unit_names: Vec<&str> = data.units.iter().map(|u| u.name.as_str()).collect();
        for (f, feed) in data.feeds.iter().enumerate() {
            for (t, name) in unit_names.iter().enumerate() {
                streams.push(Stream {
                    name: format!("{}->{}", feed.name, name),
                    source: Endpoint::Feed(f),
                    sink: Endpoint::Unit(t),
                });
            }
            streams.push(Stream {
                name: format!("{}->discharge", feed.name),
                source: Endpoint::Feed(f),
                sink: Endpoint::Discharge,
            });
        }
        for (t, from) in unit_names.iter().enumerate() {
            for (u, to) in unit_names.iter().enumerate() {
                if t == u && !data.options.self_recycle {
                    continue;
                }
                streams.push(Stream {
                    name: format!("{from}->{to}"),
                    source: Endpoint::Unit(t),
                    sink: Endpoint::Unit(u),
                });
            }
            streams.push(Stream {
                name: format!("{from}->discharge"),
                source: Endpoint::Unit(t),
                sink: Endpoint::Discharge,
            });
        }
        WtnStreams { streams }
    }

    pub fn into_unit(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.indices(move |s| s.sink == Endpoint::Unit(t))
    }

    pub fn out_of(&self, src: Endpoint) -> impl Iterator<Item = usize> + '_ {
        self.indices(move |s| s.source == src)
    }

    pub fn into_discharge(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(|s| s.sink == Endpoint::Discharge)
    }

    fn indices<'a>(&'a self, pred: impl Fn(&Stream) -> bool + 'a) -> impl Iterator<Item = usize> + 'a {
        self.streams
            .iter()
            .enumerate()
            .filter(move |(_, s)| pred(s))
            .map(|(i, _)| i)
    }
}

/// Variable ids of one unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitVars {
    pub inlet_flow: VarId,
    pub outlet_flow: VarId,
    /// Per contaminant, in `contaminants` order.
    pub inlet_conc: Vec<VarId>,
    pub outlet_conc: Vec<VarId>,
    pub cost: VarId,
    pub active_guard: String,
    pub inactive_guard: String,
}

/// A built model and the map from network quantities to its variables.
///
/// Streams leaving a unit carry the unit's outlet concentration variable,
/// which makes splitter outlets equal by construction. Streams leaving a
/// feed carry the feed's constant concentrations.
#[derive(Debug, Clone, PartialEq)]
pub struct WtnModel {
    pub data: WtnData,
    pub streams: WtnStreams,
    pub gdp: GdpModel,
    pub stream_flow: Vec<VarId>,
    pub units: Vec<UnitVars>,
}

impl WtnModel {
    /// `F_s C_{j,s}` as an expression.
    fn stream_mass(&self, s: usize, j: usize) -> Expression {
        let f = self.stream_flow[s];
        match self.streams.streams[s].source {
            Endpoint::Feed(k) => {
                let c = self.data.feeds[k].concentrations[&self.data.contaminants[j]];
                Expression::new().with_linear(c, f)
            }
            Endpoint::Unit(t) => Expression::new().with_bilinear(1.0, f, self.units[t].outlet_conc[j]),
            Endpoint::Discharge => unreachable!("discharge is never a source"),
        }
    }

    fn stream_conc(&self, x: &[f64], s: usize, j: usize) -> f64 {
        match self.streams.streams[s].source {
            Endpoint::Feed(k) => self.data.feeds[k].concentrations[&self.data.contaminants[j]],
            Endpoint::Unit(t) => x[self.units[t].outlet_conc[j].0],
            Endpoint::Discharge => unreachable!("discharge is never a source"),
        }
    }

    /// Checks a solution point against the network's physical invariants.
    ///
    /// `active[t]` tells whether unit `t` was selected.
    pub fn audit(&self, x: &[f64], active: &[bool]) -> WtnAudit {
        let d = &self.data;
        let flow = |s: usize| x[self.stream_flow[s].0];
        let mut mass_balance = 0.0f64;
        let mut discharge_excess = f64::NEG_INFINITY;
        for (j, name) in d.contaminants.iter().enumerate() {
            let fed: f64 = d.feeds.iter().map(|f| f.flow * f.concentrations[name]).sum();
            let discharged: f64 = self
                .streams
                .into_discharge()
                .map(|s| flow(s) * self.stream_conc(x, s, j))
                .sum();
            let removed: f64 = d
                .units
                .iter()
                .zip(&self.units)
                .zip(active)
                .filter(|(_, &a)| a)
                .map(|((u, v), _)| u.alpha[name] * x[v.inlet_flow.0] * x[v.inlet_conc[j].0])
                .sum();
            let scale = fed.abs().max(1e-12);
            mass_balance = mass_balance.max((fed - discharged - removed).abs() / scale);
            discharge_excess = discharge_excess.max(discharged - d.limits[name]);
        }
        let mut inactive_flow = 0.0f64;
        for (t, v) in self.units.iter().enumerate() {
            if active[t] {
                continue;
            }
            for s in self.streams.into_unit(t) {
                inactive_flow = inactive_flow.max(flow(s).abs());
            }
            inactive_flow = inactive_flow.max(x[v.inlet_flow.0].abs()).max(x[v.cost.0].abs());
        }
        let mut splitter_mismatch = 0.0f64;
        for t in 0..d.units.len() {
            for j in 0..d.contaminants.len() {
                let cs: Vec<f64> = self
                    .streams
                    .out_of(Endpoint::Unit(t))
                    .map(|s| self.stream_conc(x, s, j))
                    .collect();
                let (lo, hi) = cs
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
                if !cs.is_empty() {
                    splitter_mismatch = splitter_mismatch.max(hi - lo);
                }
            }
        }
        WtnAudit {
            mass_balance,
            discharge_excess,
            inactive_flow,
            splitter_mismatch,
        }
    }

    /// Exact treatment cost of the flows at `x`, ignoring inactive units.
    pub fn exact_cost(&self, x: &[f64], active: &[bool]) -> f64 {
        (0..self.units.len())
            .filter(|&t| active[t])
            .map(|t| self.data.unit_cost(t, x[self.units[t].inlet_flow.0]))
            .sum()
    }
}

/// Worst-case departures from the network invariants at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WtnAudit {
    /// Max over contaminants of `|fed - discharged - removed| / fed`.
    pub mass_balance: f64,
    /// Max over contaminants of discharged mass minus its limit.
    pub discharge_excess: f64,
    /// Largest inlet flow or cost left on an inactive unit.
    pub inactive_flow: f64,
    /// Largest concentration spread among one splitter's outlets.
    pub splitter_mismatch: f64,
}

impl WtnAudit {
    pub fn passes(&self, tol: f64) -> bool {
        self.mass_balance <= tol
            && self.discharge_excess <= tol
            && self.inactive_flow <= tol
            && self.splitter_mismatch <= tol
    }
}

/// Builds the design model of `data` with its variable map.
pub fn build_wtn(data: &WtnData) -> Result<WtnModel> {
    data.validate()?;
    let streams = WtnStreams::enumerate(data);
    let mut gdp = GdpModel::new(Sense::Min);
    let fmax = data.total_flow();

    let stream_flow: Vec<VarId> = streams
        .streams
        .iter()
        .map(|s| gdp.add_variable(format!("F[{}]", s.name), 0.0, fmax))
        .collect();

    // Approximations of the cost term may overshoot the true cost a little,
    // so the upper cost bound leaves room.
    let units: Vec<UnitVars> = data
        .units
        .iter()
        .enumerate()
        .map(|(t, u)| {
            let conc = |gdp: &mut GdpModel, tag: &str| -> Vec<VarId> {
                data.contaminants
                    .iter()
                    .map(|j| gdp.add_variable(format!("{tag}[{},{j}]", u.name), 0.0, data.max_concentration(j)))
                    .collect()
            };
            let inlet_flow = gdp.add_variable(format!("Fin[{}]", u.name), 0.0, fmax);
            let outlet_flow = gdp.add_variable(format!("Fout[{}]", u.name), 0.0, fmax);
            let inlet_conc = conc(&mut gdp, "Cin");
            let outlet_conc = conc(&mut gdp, "Cout");
            let margin = 0.1 * u.theta * fmax.powf(COST_EXPONENT) + 1.0;
            let cost = gdp.add_variable(format!("CTU[{}]", u.name), 0.0, data.unit_cost(t, fmax) + margin);
            UnitVars {
                inlet_flow,
                outlet_flow,
                inlet_conc,
                outlet_conc,
                cost,
                active_guard: format!("Y[{}]", u.name),
                inactive_guard: format!("N[{}]", u.name),
            }
        })
        .collect();

    let mut model = WtnModel {
        data: data.clone(),
        streams,
        gdp,
        stream_flow,
        units,
    };
    let mut globals = Vec::new();
    let mut disjunctions = Vec::new();
    let sum_of = |m: &WtnModel, idx: &mut dyn Iterator<Item = usize>, k: f64| {
        let mut e = Expression::new();
        for s in idx {
            e.add_linear(k, m.stream_flow[s]);
        }
        e
    };

    for (f, feed) in data.feeds.iter().enumerate() {
        let e = sum_of(&model, &mut model.streams.out_of(Endpoint::Feed(f)), 1.0);
        globals.push(Constraint::eq(format!("feed_split[{}]", feed.name), e, feed.flow));
    }
    for (t, u) in data.units.iter().enumerate() {
        let v = &model.units[t];
        let mut inlet = sum_of(&model, &mut model.streams.into_unit(t), -1.0);
        inlet.add_linear(1.0, v.inlet_flow);
        globals.push(Constraint::eq(format!("inlet_flow[{}]", u.name), inlet, 0.0));
        let mut outlet = sum_of(&model, &mut model.streams.out_of(Endpoint::Unit(t)), -1.0);
        outlet.add_linear(1.0, v.outlet_flow);
        globals.push(Constraint::eq(format!("outlet_flow[{}]", u.name), outlet, 0.0));
        globals.push(Constraint::eq(
            format!("through_flow[{}]", u.name),
            Expression::var(v.inlet_flow).with_linear(-1.0, v.outlet_flow),
            0.0,
        ));
    }
    for (j, name) in data.contaminants.iter().enumerate() {
        let mut e = Expression::new();
        for s in model.streams.into_discharge() {
            e.add_scaled(1.0, &model.stream_mass(s, j));
        }
        globals.push(Constraint::le(format!("discharge_limit[{name}]"), e, data.limits[name]));
    }

    for (t, u) in data.units.iter().enumerate() {
        let v = &model.units[t];
        let mut on = Vec::new();
        for (j, name) in data.contaminants.iter().enumerate() {
            on.push(Constraint::eq(
                format!("recovery[{},{name}]", u.name),
                Expression::var(v.outlet_conc[j]).with_linear(-(1.0 - u.alpha[name]), v.inlet_conc[j]),
                0.0,
            ));
        }
        for (j, name) in data.contaminants.iter().enumerate() {
            let mut e = Expression::new().with_bilinear(1.0, v.inlet_flow, v.inlet_conc[j]);
            for s in model.streams.into_unit(t) {
                e.add_scaled(-1.0, &model.stream_mass(s, j));
            }
            on.push(Constraint::eq(format!("mixer[{},{name}]", u.name), e, 0.0));
        }
        on.push(Constraint::ge(format!("min_flow[{}]", u.name), Expression::var(v.inlet_flow), u.min_flow));
        on.push(Constraint::eq(
            format!("cost[{}]", u.name),
            Expression::var(v.cost)
                .with_linear(-u.beta, v.inlet_flow)
                .with_power(-u.theta, v.inlet_flow, COST_EXPONENT),
            u.gamma,
        ));
        let off = vec![
            Constraint::eq(
                format!("no_inlet[{}]", u.name),
                sum_of(&model, &mut model.streams.into_unit(t), 1.0),
                0.0,
            ),
            Constraint::eq(format!("no_cost[{}]", u.name), Expression::var(v.cost), 0.0),
        ];
        disjunctions.push(Disjunction {
            label: format!("unit[{}]", u.name),
            disjuncts: vec![
                Disjunct {
                    label: format!("active[{}]", u.name),
                    guard: v.active_guard.clone(),
                    constraints: on,
                    fix_to_zero: vec![],
                },
                Disjunct {
                    label: format!("inactive[{}]", u.name),
                    guard: v.inactive_guard.clone(),
                    constraints: off,
                    fix_to_zero: vec![],
                },
            ],
        });
    }

    let mut objective = Expression::new();
    for v in &model.units {
        objective.add_linear(1.0, v.cost);
    }
    model.gdp.objective = objective;
    model.gdp.globals = globals;
    model.gdp.disjunctions = disjunctions;
    Ok(model)
}

pub fn build_wtn_gdp(data: &WtnData) -> Result<GdpModel> {
    Ok(build_wtn(data)?.gdp)
}

/// `100 |z_approx - z_ref| / |z_ref|`.
pub fn relative_error(z_approx: f64, z_ref: f64) -> Result<f64> {
    if z_ref == 0.0 || !z_ref.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "relative error needs a finite non-zero reference, got {z_ref}"
        )));
    }
    Ok(100.0 * (z_approx - z_ref).abs() / z_ref.abs())
}

/// A percentage rounded for display.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percent {
    pub value: f64,
    pub decimals: usize,
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.*}", self.decimals, self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::bigm_transform;

    const MINIMAL: &str = r#"{
        "contaminants": ["A"],
        "feeds": [{"name": "F1", "flow": 2.0, "concentrations": {"A": 1.0}}],
        "units": [{"name": "U1", "alpha": {"A": 1.0}, "L": 0.5, "beta": 1.0, "gamma": 1.0, "theta": 1.0}],
        "limits": {"A": 0.5}
    }"#;

    #[test]
    fn minimal_instance_structure() {
        let data = WtnData::from_json_str(MINIMAL).unwrap();
        assert_eq!(data.units[0].min_flow, 0.5);
        let m = build_wtn(&data).unwrap();
        assert_eq!(m.gdp.disjunctions.len(), 1);
        assert_eq!(m.gdp.disjunctions[0].disjuncts.len(), 2);
        // F1->U1, F1->discharge, U1->discharge
        assert_eq!(m.streams.streams.len(), 3);
        assert!(m.gdp.validate().is_ok());
        bigm_transform(&m.gdp).unwrap();
    }

    #[test]
    fn recovery_out_of_range_is_rejected() {
        let bad = MINIMAL.replace("\"A\": 1.0}, \"L\"", "\"A\": 1.2}, \"L\"");
        let err = WtnData::from_json_str(&bad).unwrap_err();
        assert!(matches!(err, Error::InvalidInstance { ref field, .. } if field == "units.U1.alpha.A"), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let bad = MINIMAL.replace("\"flow\": 2.0, ", "");
        let err = WtnData::from_json_str(&bad).unwrap_err();
        assert!(err.to_string().contains("flow"), "{err}");
    }

    #[test]
    fn full_recovery_zeroes_outlet() {
        let data = WtnData::from_json_str(MINIMAL).unwrap();
        let m = build_wtn(&data).unwrap();
        let v = &m.units[0];
        let mut x = vec![0.0; m.gdp.variables.len()];
        x[v.inlet_flow.0] = 0.5;
        x[v.inlet_conc[0].0] = 1.0;
        let rec = m.gdp.disjunctions[0].disjuncts[0]
            .constraints
            .iter()
            .find(|c| c.label.starts_with("recovery"))
            .unwrap();
        // the recovery row forces the outlet concentration to zero
        assert_eq!(rec.violation(&x), 0.0);
        x[v.outlet_conc[0].0] = 1e-3;
        assert!(rec.violation(&x) > 0.0);
    }

    #[test]
    fn streams_respect_recycle_flag() {
        let mut data = WtnData::from_json_str(MINIMAL).unwrap();
        data.units.push(Unit {
            name: "U2".into(),
            ..data.units[0].clone()
        });
        assert_eq!(WtnStreams::enumerate(&data).streams.len(), 3 + 2 + 2);
        data.options.self_recycle = true;
        let s = WtnStreams::enumerate(&data);
        assert_eq!(s.streams.len(), 3 + 3 + 3);
        assert!(s.streams.iter().any(|s| s.name == "U1->U1"));
    }

    #[test]
    fn relative_error_examples() {
        let e = relative_error(349556.0, 348337.0).unwrap();
        assert_eq!(Percent { value: e, decimals: 2 }.to_string(), "0.35");
        assert_eq!(relative_error(348337.0, 348337.0).unwrap(), 0.0);
        let e = relative_error(1.043, 1.013).unwrap();
        assert_eq!(Percent { value: e, decimals: 4 }.to_string(), "2.9615");
        assert!(relative_error(1.0, 0.0).is_err());
    }
}
