//! Scenario files: TOML with `key = value` pairs and `[section]` tables,
//! parsed into [`ScenarioConfig`] and checked into a runnable [`Scenario`].
//!
//! ```toml
//! model = "fermi_ulam"
//! g = 2.0
//!
//! [lower]
//! kind = "constant"
//! value = 0.0
//!
//! [upper]
//! kind = "sinusoid"
//! amplitude = 0.1
//! offset = 1.0
//!
//! [[initial]]
//! t = 0.0
//! v = 5.0
//!
//! [stop]
//! n_events = 1000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bouncing::{BallState, Resonance, ResonantSpec, TwoBallSetup};
use crate::error::{Error, Result};
use crate::fermi_ulam::PhasePoint;
use crate::forcing::{ForcingProfile, Harmonic, PlatePair, Tangency};
use crate::record::{Body, RecordMeta, StopRule};
use crate::solver::RootSolveSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    FermiUlam,
    FermiUlamSingular,
    OneBall,
    TwoBall,
    RestrictedCase1,
    RestrictedCase2,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::FermiUlam => "fermi_ulam",
            Model::FermiUlamSingular => "fermi_ulam_singular",
            Model::OneBall => "one_ball",
            Model::TwoBall => "two_ball",
            Model::RestrictedCase1 => "restricted_case1",
            Model::RestrictedCase2 => "restricted_case2",
        }
    }

    fn is_fermi(self) -> bool {
        matches!(self, Model::FermiUlam | Model::FermiUlamSingular)
    }
}

fn one() -> f64 {
    1.0
}

/// Plate law as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        #[serde(default = "one")]
        period: f64,
        value: f64,
    },
    Sinusoid {
        #[serde(default = "one")]
        period: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    Polynomial {
        #[serde(default = "one")]
        period: f64,
        coefficients: Vec<f64>,
        window: [f64; 2],
    },
    Harmonics {
        #[serde(default = "one")]
        period: f64,
        #[serde(default)]
        offset: f64,
        terms: Vec<HarmonicSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    pub multiple: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ForcingProfile> {
        match self {
            ProfileSpec::Constant { period, value } => ForcingProfile::constant(*period, *value),
            ProfileSpec::Sinusoid { period, amplitude, phase, offset } => {
                ForcingProfile::sinusoid(*period, *amplitude, *phase, *offset)
            }
            ProfileSpec::Polynomial { period, coefficients, window } => {
                ForcingProfile::polynomial(*period, coefficients.clone(), (window[0], window[1]))
            }
            ProfileSpec::Harmonics { period, offset, terms } => ForcingProfile::harmonics(
                *period,
                *offset,
                terms
                    .iter()
                    .map(|h| Harmonic { multiple: h.multiple, amplitude: h.amplitude, phase: h.phase })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TangencySpec {
    pub t_star: f64,
    pub order: u8,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Masses {
    pub m1: f64,
    pub m2: f64,
}

/// A phase point `(t, v)` for section-map models, or a ball
/// `(label, z, v)` for two-ball models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Ball { label: String, z: f64, v: f64 },
    Point { t: f64, v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub n_events: Option<usize>,
    pub horizon_time: Option<f64>,
    pub v_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub t_tol: Option<f64>,
    pub max_bracket_steps: Option<usize>,
    pub grazing_slope_floor: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonantConfig {
    pub variant: Resonance,
    pub m2_int: u32,
    pub hops: usize,
    /// Launch time; located automatically when absent.
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_window")]
    pub window: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { window: default_window() }
    }
}

fn default_window() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: Model,
    pub g: f64,
    #[serde(default)]
    pub seed: u64,
    /// Length scale for `(t, y)` coordinates.
    pub l: Option<f64>,
    /// Start time of two-ball runs.
    pub t0: Option<f64>,
    /// Speed the start of a singular run must exceed.
    pub min_speed: Option<f64>,
    pub plate: Option<ProfileSpec>,
    pub lower: Option<ProfileSpec>,
    pub upper: Option<ProfileSpec>,
    pub tangency: Option<TangencySpec>,
    pub masses: Option<Masses>,
    #[serde(default)]
    pub initial: Vec<InitialSpec>,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    pub resonant: Option<ResonantConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
}

/// How a one-ball scenario starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneBallStart {
    Launches(usize),
    Resonant { spec: ResonantSpec, hops: usize },
}

/// A validated, runnable scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Physics {
    FermiUlam { plates: PlatePair, starts: Vec<PhasePoint> },
    FermiUlamSingular { plates: PlatePair, starts: Vec<PhasePoint>, min_speed: f64 },
    OneBall { plate: ForcingProfile, starts: Vec<PhasePoint>, resonant: Option<(ResonantSpec, usize)> },
    TwoBall { plate: ForcingProfile, setup: TwoBallSetup },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: Model,
    pub g: f64,
    pub seed: u64,
    pub l: Option<f64>,
    pub physics: Physics,
    pub stop: StopRule,
    pub settings: RootSolveSettings,
    pub window: usize,
}

impl Scenario {
    pub fn period(&self) -> f64 {
        match &self.physics {
            Physics::FermiUlam { plates, .. } | Physics::FermiUlamSingular { plates, .. } => plates.period(),
            Physics::OneBall { plate, .. } | Physics::TwoBall { plate, .. } => plate.period(),
        }
    }

    pub fn meta(&self) -> RecordMeta {
        RecordMeta { model: self.model.as_str().into(), period: self.period(), g: self.g }
    }

    pub fn plates(&self) -> Option<&PlatePair> {
        match &self.physics {
            Physics::FermiUlam { plates, .. } | Physics::FermiUlamSingular { plates, .. } => Some(plates),
            _ => None,
        }
    }
}

fn cfg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn field<'a, T>(value: &'a Option<T>, name: &str, model: Model) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| Error::Config(format!("model {} needs `{name}`", model.as_str())))
}

fn in_field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("`{name}`: {e}")))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn settings(&self) -> Result<RootSolveSettings> {
        let d = RootSolveSettings::default();
        let t = &self.tolerances;
        let s = RootSolveSettings {
            t_tol: t.t_tol.unwrap_or(d.t_tol),
            max_bracket_steps: t.max_bracket_steps.unwrap_or(d.max_bracket_steps),
            grazing_slope_floor: t.grazing_slope_floor.unwrap_or(d.grazing_slope_floor),
            horizon: t.horizon.unwrap_or(d.horizon),
        };
        in_field("tolerances", s.validate().map(|_| s))
    }

    fn points(&self) -> Result<Vec<PhasePoint>> {
        if self.initial.is_empty() {
            return cfg(format!("model {} needs at least one [[initial]] entry with t and v", self.model.as_str()));
        }
        self.initial
            .iter()
            .map(|i| match i {
                InitialSpec::Point { t, v } => Ok(PhasePoint::new(*t, *v)),
                InitialSpec::Ball { .. } => cfg("[[initial]] entries for this model take `t` and `v`"),
            })
            .collect()
    }

    fn balls(&self, masses: &Masses) -> Result<[BallState; 2]> {
        if self.initial.len() != 2 {
            return cfg("two-ball models need exactly two [[initial]] balls");
        }
        let mut out = Vec::with_capacity(2);
        for i in &self.initial {
            let InitialSpec::Ball { label, z, v } = i else {
                return cfg("two-ball [[initial]] entries take `label`, `z` and `v`");
            };
            let (body, mass) = match label.as_str() {
                "p1" | "P1" => (Body::P1, masses.m1),
                "p2" | "P2" => (Body::P2, masses.m2),
                other => return cfg(format!("[[initial]] label must be p1 or p2, got {other:?}")),
            };
            out.push(BallState { label: body, mass, z: *z, v: *v });
        }
        Ok([out[0], out[1]])
    }

    /// Checks model-specific completeness and builds the runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        let model = self.model;
        if !self.g.is_finite() || self.g < 0.0 {
            return cfg(format!("`g` must be finite and non-negative, got {}", self.g));
        }
        if !model.is_fermi() && !(self.g > 0.0) {
            return cfg(format!("`g` must be positive for model {}", model.as_str()));
        }
        let settings = self.settings()?;
        let stop = StopRule {
            n_events: self.stop.n_events,
            horizon_time: self.stop.horizon_time,
            v_threshold: self.stop.v_threshold,
        };
        let needs_stop = !(model == Model::OneBall && self.resonant.is_some());
        if needs_stop && !stop.is_set() {
            return cfg("[stop] needs one of n_events, horizon_time, v_threshold");
        }
        if self.sweep.window < 8 {
            return cfg("`sweep.window` must be at least 8");
        }

        let physics = match model {
            Model::FermiUlam | Model::FermiUlamSingular => {
                let lower = in_field("lower", field(&self.lower, "lower", model)?.build())?;
                let upper = in_field("upper", field(&self.upper, "upper", model)?.build())?;
                let tangency = self.tangency.map(|t| Tangency { t_star: t.t_star, order: t.order, eps: t.eps });
                if model == Model::FermiUlamSingular && tangency.is_none() {
                    return cfg("model fermi_ulam_singular needs `[tangency]`");
                }
                let plates = in_field("lower/upper", PlatePair::new(lower, upper, tangency))?;
                if let Some(l) = self.l {
                    in_field("l", crate::fermi_ulam::validate_scale(l, &plates))?;
                }
                let starts = self.points()?;
                if model == Model::FermiUlam {
                    Physics::FermiUlam { plates, starts }
                } else {
                    Physics::FermiUlamSingular { plates, starts, min_speed: self.min_speed.unwrap_or(0.0) }
                }
            }
            Model::OneBall => {
                let plate = in_field("plate", field(&self.plate, "plate", model)?.build())?;
                match self.resonant {
                    Some(r) => {
                        let spec = match r.t0 {
                            Some(t0) => ResonantSpec::new(r.variant, r.m2_int, t0, &plate, self.g),
                            None => ResonantSpec::locate(r.variant, r.m2_int, &plate, self.g),
                        };
                        let spec = in_field("resonant", spec)?;
                        Physics::OneBall { plate, starts: Vec::new(), resonant: Some((spec, r.hops)) }
                    }
                    None => Physics::OneBall { plate, starts: self.points()?, resonant: None },
                }
            }
            Model::TwoBall | Model::RestrictedCase1 | Model::RestrictedCase2 => {
                let plate = in_field("plate", field(&self.plate, "plate", model)?.build())?;
                let masses = field(&self.masses, "masses", model)?;
                let balls = self.balls(masses)?;
                let setup = TwoBallSetup { t0: self.t0.unwrap_or(0.0), balls };
                let p1 = balls.iter().find(|b| b.label == Body::P1).copied();
                let p2 = balls.iter().find(|b| b.label == Body::P2).copied();
                let (Some(p1), Some(p2)) = (p1, p2) else {
                    return cfg("two-ball models need one p1 and one p2");
                };
                match model {
                    Model::RestrictedCase1 if !(p1.mass == 0.0 && p1.z >= p2.z) => {
                        return cfg("restricted_case1 needs m1 = 0 with p1 above p2");
                    }
                    Model::RestrictedCase2 if !(p1.mass == 0.0 && p1.z <= p2.z) => {
                        return cfg("restricted_case2 needs m1 = 0 with p1 below p2");
                    }
                    _ => {}
                }
                Physics::TwoBall { plate, setup }
            }
        };
        Ok(Scenario {
            model,
            g: self.g,
            seed: self.seed,
            l: self.l,
            physics,
            stop,
            settings,
            window: self.sweep.window,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA2: &str = r#"
model = "one_ball"
g = 2.0

[plate]
kind = "sinusoid"
amplitude = 0.5

[resonant]
variant = "gamma2"
m2_int = 3
hops = 10
"#;

    #[test]
    fn resonant_one_ball_parses() {
        let scenario = ScenarioConfig::from_toml(GAMMA2).unwrap().build().unwrap();
        let Physics::OneBall { resonant: Some((spec, hops)), .. } = scenario.physics else { panic!() };
        assert_eq!(spec.variant, Resonance::Gamma2);
        assert_eq!(hops, 10);
    }

    #[test]
    fn missing_g_is_a_config_error() {
        let text = GAMMA2.replace("g = 2.0\n", "");
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("g")), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = GAMMA2.replace("amplitude = 0.5", "amplitude = 0.5\nfrequency = 3");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }

    #[test]
    fn bouncing_models_need_positive_g() {
        let text = GAMMA2.replace("g = 2.0", "g = 0.0");
        let err = ScenarioConfig::from_toml(&text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn two_ball_config() {
        let text = r#"
model = "restricted_case1"
g = 2.0
[plate]
kind = "constant"
value = 0.0
[masses]
m1 = 0.0
m2 = 1.0
[[initial]]
label = "p2"
z = 0.0
v = 3.0
[[initial]]
label = "p1"
z = 1.0
v = 0.0
[stop]
n_events = 10
"#;
        let s = ScenarioConfig::from_toml(text).unwrap().build().unwrap();
        assert!(matches!(s.physics, Physics::TwoBall { .. }));
        let swapped = text.replace("z = 1.0", "z = -0.0").replace("z = 0.0\nv = 3.0", "z = 2.0\nv = 3.0");
        assert!(ScenarioConfig::from_toml(&swapped).unwrap().build().is_err());
    }

    #[test]
    fn fermi_config_with_scale() {
        let text = r#"
model = "fermi_ulam"
g = 0.0
l = 0.5
[lower]
kind = "constant"
value = 0.0
[upper]
kind = "constant"
value = 1.0
[[initial]]
t = 0.0
v = 2.0
[stop]
n_events = 3
"#;
        let err = ScenarioConfig::from_toml(text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("`l`")), "{err}");
        assert!(ScenarioConfig::from_toml(&text.replace("l = 0.5", "l = 2.0")).unwrap().build().is_ok());
    }
}
