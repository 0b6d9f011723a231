//! Problem instance: node geometry, location uncertainty, power and
//! interference budgets, and time discretization.
//!
//! Scenarios are loaded from a JSON document whose power-like fields carry an
//! explicit unit suffix (`_w`, `_dbw`, `_dbm`); every length ends in `_m`,
//! speeds in `_mps`, durations in `_s`. A field may appear in exactly one
//! representation. Keys starting with `_` are comments and are ignored.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geom::{self, Point};
use crate::ocr::outage;
use crate::units;

/// Reference channel gain used when a config omits it (-60 dB).
pub const DEFAULT_BETA0: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unit ambiguity in `{field}`: {detail}")]
    UnitAmbiguity { field: String, detail: String },
    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },
}

impl ScenarioError {
    fn invariant(name: &'static str, detail: impl Into<String>) -> Self {
        ScenarioError::Invariant {
            name,
            detail: detail.into(),
        }
    }
}

/// Which location error model a design assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyModel {
    /// Disk of known radius around the estimate.
    Bounded,
    /// Isotropic Gaussian error around the estimate.
    Probabilistic,
}

/// A PU or Eve whose true location is only known up to an error model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainNode {
    pub center_xy: Point,
    pub bounded_radius_m: Option<f64>,
    pub gaussian_std_m: Option<f64>,
}

impl UncertainNode {
    pub fn exact(center_xy: Point) -> Self {
        Self {
            center_xy,
            bounded_radius_m: Some(0.0),
            gaussian_std_m: Some(0.0),
        }
    }

    pub fn radius(&self) -> Option<f64> {
        self.bounded_radius_m
    }

    pub fn std(&self) -> Option<f64> {
        self.gaussian_std_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub su_xy: Point,
    pub pus: Vec<UncertainNode>,
    pub eves: Vec<UncertainNode>,
    pub altitude_m: f64,
    pub beta0: f64,
    pub noise_su_w: f64,
    pub noise_eve_w: Vec<f64>,
    pub p_avg_w: f64,
    pub p_max_w: f64,
    pub v_max_mps: f64,
    pub slot_s: f64,
    pub n_slots: usize,
    pub q_init_xy: Point,
    pub q_final_xy: Point,
    pub it_threshold_w: f64,
    pub rho: f64,
    pub phi: f64,
}

/// Endpoints used by the bundled fixture: illustrative, symmetric on the
/// x-axis, 400 m apart, reachable at `v_max` within the 60 s flight.
pub const FIXTURE_Q_INIT: Point = [-200.0, 0.0];
pub const FIXTURE_Q_FINAL: Point = [200.0, 0.0];
/// Reference gain pinned by the fixture (-10 dB).
pub const FIXTURE_BETA0: f64 = 0.1;

/// The desk-scale benchmark instance: one PU, two Eves, 60 one-second slots,
/// `P_max = 4 P_avg`, -50 dBm noise everywhere, outage levels 0.2, bounded
/// radii matched to the Gaussian errors.
pub fn fixture(p_avg_w: f64, it_threshold_w: f64) -> Scenario {
    let noise = units::dbm_to_w(-50.0);
    let mut s = Scenario {
        su_xy: [0.0, 0.0],
        pus: vec![UncertainNode {
            center_xy: [-40.0, -80.0],
            bounded_radius_m: None,
            gaussian_std_m: Some(5.0),
        }],
        eves: vec![
            UncertainNode {
                center_xy: [240.0, -120.0],
                bounded_radius_m: None,
                gaussian_std_m: Some(5.0),
            },
            UncertainNode {
                center_xy: [-240.0, 120.0],
                bounded_radius_m: None,
                gaussian_std_m: Some(35.0),
            },
        ],
        altitude_m: 100.0,
        beta0: FIXTURE_BETA0,
        noise_su_w: noise,
        noise_eve_w: vec![noise, noise],
        p_avg_w,
        p_max_w: 4.0 * p_avg_w,
        v_max_mps: 10.0,
        slot_s: 1.0,
        n_slots: 60,
        q_init_xy: FIXTURE_Q_INIT,
        q_final_xy: FIXTURE_Q_FINAL,
        it_threshold_w,
        rho: 0.2,
        phi: 0.2,
    };
    s.fill_matched_radii();
    s
}

/// [`fixture`] at `P_avg = 0.1 W` (-10 dBW) and `Γ = 2.5e-7 W`.
pub fn default_fixture() -> Scenario {
    fixture(0.1, 2.5e-7)
}

impl Scenario {
    pub fn num_eves(&self) -> usize {
        self.eves.len()
    }

    pub fn num_pus(&self) -> usize {
        self.pus.len()
    }

    pub fn flight_time_s(&self) -> f64 {
        self.slot_s * self.n_slots as f64
    }

    /// Largest horizontal displacement per slot.
    pub fn max_step_m(&self) -> f64 {
        self.v_max_mps * self.slot_s
    }

    /// Outage level applied to each Eve separately so that the joint level is `rho`.
    pub fn rho_bar(&self) -> f64 {
        outage::decouple_outage(self.rho, self.eves.len().max(1))
    }

    /// Sets every missing bounded radius from the Gaussian std via the
    /// chi-square matching rule.
    pub fn fill_matched_radii(&mut self) {
        let k = self.eves.len().max(1);
        for pu in &mut self.pus {
            if let (None, Some(std)) = (pu.bounded_radius_m, pu.gaussian_std_m) {
                pu.bounded_radius_m = outage::matched_radius(std, 1.0 - self.phi, None).ok();
            }
        }
        for eve in &mut self.eves {
            if let (None, Some(std)) = (eve.bounded_radius_m, eve.gaussian_std_m) {
                eve.bounded_radius_m = outage::matched_radius(std, 1.0 - self.rho, Some(k)).ok();
            }
        }
    }

    /// Overwrites all bounded radii with the matched values.
    pub fn with_matched_radii(mut self) -> Self {
        for n in self.pus.iter_mut().chain(self.eves.iter_mut()) {
            if n.gaussian_std_m.is_some() {
                n.bounded_radius_m = None;
            }
        }
        self.fill_matched_radii();
        self
    }

    /// Same scenario with every bounded radius set to zero (estimates trusted).
    pub fn with_radii_zeroed(mut self) -> Self {
        for n in self.pus.iter_mut().chain(self.eves.iter_mut()) {
            n.bounded_radius_m = Some(0.0);
        }
        self
    }

    /// Same scenario with no location uncertainty under either model.
    pub fn with_zero_uncertainty(mut self) -> Self {
        for n in self.pus.iter_mut().chain(self.eves.iter_mut()) {
            n.bounded_radius_m = Some(0.0);
            n.gaussian_std_m = Some(0.0);
        }
        self
    }

    /// Changes the flight time, keeping the slot length. `P_max / P_avg` is unchanged.
    pub fn with_flight_time(mut self, t_s: f64) -> Result<Self, ScenarioError> {
        self.n_slots = slots_for(t_s, self.slot_s)?;
        self.validate()?;
        Ok(self)
    }

    /// Changes the average power budget, keeping the peak-to-average ratio.
    pub fn with_p_avg(mut self, p_avg_w: f64) -> Result<Self, ScenarioError> {
        let ratio = self.p_max_w / self.p_avg_w;
        self.p_avg_w = p_avg_w;
        self.p_max_w = ratio * p_avg_w;
        self.validate()?;
        Ok(self)
    }

    pub fn with_it_threshold(mut self, it_threshold_w: f64) -> Result<Self, ScenarioError> {
        self.it_threshold_w = it_threshold_w;
        self.validate()?;
        Ok(self)
    }

    /// Fails unless every node has the parameter the given model needs.
    pub fn require_model(&self, model: UncertaintyModel) -> Result<(), ScenarioError> {
        for (kind, nodes) in [("pu", &self.pus), ("eve", &self.eves)] {
            for (i, n) in nodes.iter().enumerate() {
                let present = match model {
                    UncertaintyModel::Bounded => n.bounded_radius_m.is_some(),
                    UncertaintyModel::Probabilistic => n.gaussian_std_m.is_some(),
                };
                if !present {
                    return Err(ScenarioError::invariant(
                        "uncertainty_for_model",
                        format!("{kind}[{i}] lacks the parameter required by the {model:?} model"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks every structural invariant of the instance.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [
            self.altitude_m,
            self.beta0,
            self.noise_su_w,
            self.p_avg_w,
            self.p_max_w,
            self.v_max_mps,
            self.slot_s,
            self.it_threshold_w,
            self.rho,
            self.phi,
        ]
        .iter()
        .chain(self.noise_eve_w.iter())
        .chain(self.su_xy.iter())
        .chain(self.q_init_xy.iter())
        .chain(self.q_final_xy.iter())
        .all(|v| v.is_finite());
        if !finite {
            return Err(ScenarioError::invariant("finite", "non-finite numeric field"));
        }
        if self.n_slots < 2 {
            return Err(ScenarioError::invariant(
                "n_slots>=2",
                format!("n_slots = {}", self.n_slots),
            ));
        }
        let positives = [
            ("altitude_m>0", self.altitude_m),
            ("beta0>0", self.beta0),
            ("noise_su_w>0", self.noise_su_w),
            ("p_avg_w>0", self.p_avg_w),
            ("p_max_w>0", self.p_max_w),
            ("v_max_mps>0", self.v_max_mps),
            ("slot_s>0", self.slot_s),
            ("it_threshold_w>0", self.it_threshold_w),
        ];
        for (name, v) in positives {
            if v <= 0.0 {
                return Err(ScenarioError::invariant(name, format!("got {v}")));
            }
        }
        if self.noise_eve_w.len() != self.eves.len() {
            return Err(ScenarioError::invariant(
                "noise_eve_len",
                format!(
                    "{} noise values for {} eves",
                    self.noise_eve_w.len(),
                    self.eves.len()
                ),
            ));
        }
        if let Some(v) = self.noise_eve_w.iter().find(|v| **v <= 0.0) {
            return Err(ScenarioError::invariant("noise_eve_w>0", format!("got {v}")));
        }
        if self.eves.is_empty() {
            return Err(ScenarioError::invariant("eves_nonempty", "need at least one eve"));
        }
        if self.p_max_w < self.p_avg_w {
            return Err(ScenarioError::invariant(
                "p_max>=p_avg",
                format!("p_max_w = {} < p_avg_w = {}", self.p_max_w, self.p_avg_w),
            ));
        }
        for (name, v) in [("rho_in_(0,1]", self.rho), ("phi_in_(0,1]", self.phi)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ScenarioError::invariant(name, format!("got {v}")));
            }
        }
        for n in self.pus.iter().chain(self.eves.iter()) {
            if n.bounded_radius_m.is_none() && n.gaussian_std_m.is_none() {
                return Err(ScenarioError::invariant(
                    "uncertainty_present",
                    format!("node at {:?} has neither a radius nor a std", n.center_xy),
                ));
            }
            for v in [n.bounded_radius_m, n.gaussian_std_m].into_iter().flatten() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ScenarioError::invariant(
                        "uncertainty_nonnegative",
                        format!("node at {:?} has {v}", n.center_xy),
                    ));
                }
            }
            if !n.center_xy.iter().all(|c| c.is_finite()) {
                return Err(ScenarioError::invariant("finite", "non-finite node center"));
            }
        }
        let gap = geom::dist(self.q_init_xy, self.q_final_xy);
        let reach = self.max_step_m() * (self.n_slots - 1) as f64;
        if gap > reach * (1.0 + 1e-12) {
            return Err(ScenarioError::invariant(
                "reachability",
                format!("endpoints {gap} m apart but at most {reach} m can be flown"),
            ));
        }
        Ok(())
    }

    /// Canonical JSON config: linear units, every optional field explicit.
    pub fn to_config_json(&self) -> String {
        let node = |n: &UncertainNode| {
            json!({
                "center_xy_m": n.center_xy,
                "bounded_radius_m": n.bounded_radius_m,
                "gaussian_std_m": n.gaussian_std_m,
            })
        };
        let doc = json!({
            "su_xy_m": self.su_xy,
            "pus": self.pus.iter().map(node).collect::<Vec<_>>(),
            "eves": self.eves.iter().map(node).collect::<Vec<_>>(),
            "altitude_m": self.altitude_m,
            "beta0_ratio": self.beta0,
            "noise_su_w": self.noise_su_w,
            "noise_eve_w": self.noise_eve_w,
            "p_avg_w": self.p_avg_w,
            "p_max_w": self.p_max_w,
            "v_max_mps": self.v_max_mps,
            "slot_s": self.slot_s,
            "n_slots": self.n_slots,
            "q_init_xy_m": self.q_init_xy,
            "q_final_xy_m": self.q_final_xy,
            "it_threshold_w": self.it_threshold_w,
            "rho": self.rho,
            "phi": self.phi,
        });
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }
}

fn slots_for(t_s: f64, slot_s: f64) -> Result<usize, ScenarioError> {
    let n = t_s / slot_s;
    let r = n.round();
    if !(r >= 1.0) || (n - r).abs() > 1e-9 * r.max(1.0) {
        return Err(ScenarioError::invariant(
            "flight_time_multiple_of_slot",
            format!("flight time {t_s} s is not a whole number of {slot_s} s slots"),
        ));
    }
    Ok(r as usize)
}

/// Parses and validates a JSON scenario config.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(ScenarioError::Parse("top level must be a JSON object".into()));
    };
    let mut r = Reader::new(map, "");
    let su_xy = r.point("su_xy_m")?;
    let altitude_m = r.number("altitude_m")?;
    let beta0 = r
        .ratio_opt("beta0")?
        .unwrap_or(DEFAULT_BETA0);
    let noise_su_w = r.power("noise_su")?;
    let p_avg_w = r.power("p_avg")?;
    let p_max_w = match r.take("p_max_ratio") {
        Some(v) => {
            if r.has_any_power("p_max") {
                return Err(ScenarioError::UnitAmbiguity {
                    field: "p_max".into(),
                    detail: "give either p_max_ratio or one absolute p_max field".into(),
                });
            }
            as_number(&v, "p_max_ratio")? * p_avg_w
        }
        None => r.power("p_max")?,
    };
    let v_max_mps = r.number("v_max_mps")?;
    let slot_s = r.number("slot_s")?;
    let n_slots = match (r.take("n_slots"), r.take("flight_time_s")) {
        (Some(n), None) => {
            let n = as_number(&n, "n_slots")?;
            if n < 0.0 || n.fract() != 0.0 {
                return Err(ScenarioError::Parse(format!("n_slots must be a nonnegative integer, got {n}")));
            }
            n as usize
        }
        (None, Some(t)) => slots_for(as_number(&t, "flight_time_s")?, slot_s)?,
        (Some(_), Some(_)) => {
            return Err(ScenarioError::Parse(
                "give exactly one of n_slots and flight_time_s".into(),
            ))
        }
        (None, None) => return Err(ScenarioError::Parse("missing field `n_slots`".into())),
    };
    let q_init_xy = r.point("q_init_xy_m")?;
    let q_final_xy = r.point("q_final_xy_m")?;
    let it_threshold_w = r.power("it_threshold")?;
    let rho = r.number("rho")?;
    let phi = r.number("phi")?;

    let pus = r.nodes("pus")?;
    let eves = r.nodes("eves")?;
    let noise_eve_w = r.power_list("noise_eve", eves.len())?;
    r.finish()?;

    let mut s = Scenario {
        su_xy,
        pus: pus.iter().map(|n| n.node.clone()).collect(),
        eves: eves.iter().map(|n| n.node.clone()).collect(),
        altitude_m,
        beta0,
        noise_su_w,
        noise_eve_w,
        p_avg_w,
        p_max_w,
        v_max_mps,
        slot_s,
        n_slots,
        q_init_xy,
        q_final_xy,
        it_threshold_w,
        rho,
        phi,
    };
    // "matched" radii depend on rho/phi/K, so resolve them after the rest is known
    if !(rho > 0.0 && rho <= 1.0) || !(phi > 0.0 && phi <= 1.0) {
        s.validate()?;
    }
    let k = s.eves.len().max(1);
    for (slot, parsed) in s.pus.iter_mut().zip(&pus) {
        if parsed.matched {
            slot.bounded_radius_m = Some(matched_or_err(parsed, 1.0 - phi, None)?);
        }
    }
    for (slot, parsed) in s.eves.iter_mut().zip(&eves) {
        if parsed.matched {
            slot.bounded_radius_m = Some(matched_or_err(parsed, 1.0 - rho, Some(k))?);
        }
    }
    s.validate()?;
    Ok(s)
}

fn matched_or_err(parsed: &ParsedNode, prob: f64, k: Option<usize>) -> Result<f64, ScenarioError> {
    let std = parsed.node.gaussian_std_m.ok_or_else(|| {
        ScenarioError::Parse("bounded_radius_m = \"matched\" requires gaussian_std_m".into())
    })?;
    outage::matched_radius(std, prob, k)
        .map_err(|e| ScenarioError::invariant("matched_radius", e.to_string()))
}

struct ParsedNode {
    node: UncertainNode,
    matched: bool,
}

const POWER_SUFFIXES: [&str; 3] = ["_w", "_dbw", "_dbm"];

fn as_number(v: &Value, field: &str) -> Result<f64, ScenarioError> {
    v.as_f64()
        .ok_or_else(|| ScenarioError::Parse(format!("`{field}` must be a number")))
}

fn as_point(v: &Value, field: &str) -> Result<Point, ScenarioError> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([x, y]) => Ok([as_number(x, field)?, as_number(y, field)?]),
        _ => Err(ScenarioError::Parse(format!("`{field}` must be a 2-element array"))),
    }
}

/// Consumes keys from a JSON object and reports anything left over.
struct Reader {
    map: Map<String, Value>,
    path: String,
}

impl Reader {
    fn new(map: Map<String, Value>, path: &str) -> Self {
        Self {
            map,
            path: path.to_string(),
        }
    }

    fn name(&self, key: &str) -> String {
        format!("{}{key}", self.path)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key).filter(|v| !v.is_null())
    }

    fn require(&mut self, key: &str) -> Result<Value, ScenarioError> {
        if let Some(v) = self.take(key) {
            return Ok(v);
        }
        // a bare base name ("altitude" for "altitude_m") is a unit mistake, not a missing field
        if let Some((base, _)) = key.rsplit_once('_') {
            if self.map.contains_key(base) {
                return Err(ScenarioError::UnitAmbiguity {
                    field: self.name(base),
                    detail: format!("missing unit suffix, expected `{key}`"),
                });
            }
        }
        Err(ScenarioError::Parse(format!("missing field `{}`", self.name(key))))
    }

    fn number(&mut self, key: &str) -> Result<f64, ScenarioError> {
        let name = self.name(key);
        as_number(&self.require(key)?, &name)
    }

    fn point(&mut self, key: &str) -> Result<Point, ScenarioError> {
        let name = self.name(key);
        as_point(&self.require(key)?, &name)
    }

    fn has_any_power(&self, base: &str) -> bool {
        POWER_SUFFIXES
            .iter()
            .any(|s| self.map.get(&format!("{base}{s}")).is_some_and(|v| !v.is_null()))
    }

    /// Takes the single present representation among `{base}_w|_dbw|_dbm`.
    fn power_value(&mut self, base: &str) -> Result<Option<(Value, &'static str)>, ScenarioError> {
        let mut found: Vec<(Value, &'static str)> = Vec::new();
        for suffix in POWER_SUFFIXES {
            if let Some(v) = self.take(&format!("{base}{suffix}")) {
                found.push((v, suffix));
            }
        }
        match found.len() {
            0 => {
                if self.map.contains_key(base) {
                    Err(ScenarioError::UnitAmbiguity {
                        field: self.name(base),
                        detail: "missing unit suffix (_w, _dbw or _dbm)".into(),
                    })
                } else {
                    Ok(None)
                }
            }
            1 => Ok(found.pop()),
            _ => Err(ScenarioError::UnitAmbiguity {
                field: self.name(base),
                detail: "more than one unit representation given".into(),
            }),
        }
    }

    fn power(&mut self, base: &str) -> Result<f64, ScenarioError> {
        let Some((v, suffix)) = self.power_value(base)? else {
            return Err(ScenarioError::Parse(format!(
                "missing field `{}_w` (or _dbw/_dbm)",
                self.name(base)
            )));
        };
        let x = as_number(&v, &format!("{}{suffix}", self.name(base)))?;
        Ok(to_watts(x, suffix))
    }

    /// Scalar (applied to every Eve) or per-Eve list.
    fn power_list(&mut self, base: &str, len: usize) -> Result<Vec<f64>, ScenarioError> {
        let Some((v, suffix)) = self.power_value(base)? else {
            return Err(ScenarioError::Parse(format!(
                "missing field `{}_w` (or _dbw/_dbm)",
                self.name(base)
            )));
        };
        let field = format!("{}{suffix}", self.name(base));
        let raw = match &v {
            Value::Array(items) => items
                .iter()
                .map(|x| as_number(x, &field))
                .collect::<Result<Vec<_>, _>>()?,
            other => vec![as_number(other, &field)?; len],
        };
        Ok(raw.into_iter().map(|x| to_watts(x, suffix)).collect())
    }

    fn ratio_opt(&mut self, base: &str) -> Result<Option<f64>, ScenarioError> {
        let lin = self.take(&format!("{base}_ratio"));
        let db = self.take(&format!("{base}_db"));
        match (lin, db) {
            (Some(_), Some(_)) => Err(ScenarioError::UnitAmbiguity {
                field: self.name(base),
                detail: "both _ratio and _db given".into(),
            }),
            (Some(v), None) => Ok(Some(as_number(&v, &self.name(&format!("{base}_ratio")))?)),
            (None, Some(v)) => Ok(Some(units::db_to_ratio(as_number(
                &v,
                &self.name(&format!("{base}_db")),
            )?))),
            (None, None) if self.map.contains_key(base) => Err(ScenarioError::UnitAmbiguity {
                field: self.name(base),
                detail: "missing unit suffix (_ratio or _db)".into(),
            }),
            (None, None) => Ok(None),
        }
    }

    fn nodes(&mut self, key: &str) -> Result<Vec<ParsedNode>, ScenarioError> {
        let v = self.require(key)?;
        let Value::Array(items) = v else {
            return Err(ScenarioError::Parse(format!("`{key}` must be an array")));
        };
        items
            .into_iter()
            .enumerate()
            .map(|(i, item)| {
                let Value::Object(m) = item else {
                    return Err(ScenarioError::Parse(format!("`{key}[{i}]` must be an object")));
                };
                let mut r = Reader::new(m, &format!("{key}[{i}]."));
                let center_xy = r.point("center_xy_m")?;
                let gaussian_std_m = match r.take("gaussian_std_m") {
                    Some(v) => Some(as_number(&v, "gaussian_std_m")?),
                    None => None,
                };
                let (bounded_radius_m, matched) = match r.take("bounded_radius_m") {
                    Some(Value::String(s)) if s == "matched" => (None, true),
                    Some(v) => (Some(as_number(&v, "bounded_radius_m")?), false),
                    None => (None, false),
                };
                for base in ["bounded_radius", "gaussian_std"] {
                    if r.map.contains_key(base) {
                        return Err(ScenarioError::UnitAmbiguity {
                            field: r.name(base),
                            detail: format!("missing unit suffix, expected `{base}_m`"),
                        });
                    }
                }
                r.finish()?;
                Ok(ParsedNode {
                    node: UncertainNode {
                        center_xy,
                        bounded_radius_m,
                        gaussian_std_m,
                    },
                    matched,
                })
            })
            .collect()
    }

    fn finish(self) -> Result<(), ScenarioError> {
        for key in self.map.keys() {
            if key.starts_with('_') {
                continue;
            }
            return Err(ScenarioError::Parse(format!(
                "unknown field `{}`",
                format!("{}{key}", self.path)
            )));
        }
        Ok(())
    }
}

fn to_watts(x: f64, suffix: &str) -> f64 {
    match suffix {
        "_dbw" => units::dbw_to_w(x),
        "_dbm" => units::dbm_to_w(x),
        _ => x,
    }
}
