use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // forcing
    #[error("derivative order {order} exceeds profile capability {max}")]
    OrderUnsupported { order: usize, max: usize },
    #[error("time {t} lies outside the polynomial validity window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },
    #[error("profile has no positive velocity (sup of derivative = {sup})")]
    DegenerateProfile { sup: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid plate pair: {0}")]
    InvalidPlates(String),

    // collision kernel
    #[error("no impact before horizon {horizon}")]
    NoImpact { horizon: f64 },
    #[error("grazing impact at t = {t} (gap slope {slope:e})")]
    GrazingImpact { t: f64, slope: f64 },
    #[error("bracketing exceeded {steps} marching steps")]
    BracketExhausted { steps: usize },
    #[error("flight starts on the wrong side of the plate at t = {t}")]
    WrongSide { t: f64 },
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),

    // Fermi-Ulam layer
    #[error("velocity {v} at t = {t} is below the validity threshold of the collision map")]
    BelowValidityThreshold { t: f64, v: f64 },
    #[error("alternation broken at t = {t}: the same plate was hit twice in a row")]
    AlternationBroken { t: f64 },
    #[error("length scale {l} must exceed sup|f2 - f1| = {sup}")]
    InvalidScale { l: f64, sup: f64 },
    #[error("sampled region too large: {0}")]
    RegionTooLarge(String),
    #[error("loop curve invalid: {0}")]
    CurveInvalid(String),
    #[error("closed-form iteration for the flight time did not converge at t = {t}")]
    NoConvergence { t: f64 },

    // bouncing balls
    #[error("ball escaped (g = 0 and no return)")]
    NonReturn,
    #[error("resonance broken at hop {hop}: deviation {deviation:e}")]
    ResonanceBroken { hop: usize, deviation: f64 },
    #[error("triple collision at t = {t}")]
    TripleCollision { t: f64 },
    #[error("orbit is not periodic: mismatch {mismatch:e}")]
    NotPeriodic { mismatch: f64 },
    #[error("invalid ball configuration: {0}")]
    InvalidBalls(String),

    // diagnostics
    #[error("record too short: {events} events for window {window}")]
    TooShort { events: usize, window: usize },
    #[error("iterate left the domain at step {step} (s = {s})")]
    LeftDomain { step: usize, s: f64 },
    #[error("records come from different scenarios")]
    MixedScenario,

    // configuration
    #[error("config: {0}")]
    Config(String),

    // oracle
    #[error("event storm: more than {limit} events before horizon")]
    EventStorm { limit: usize },
}
