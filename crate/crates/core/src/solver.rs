//! Event kernel: free parabolic flight against moving plates, and the two
//! collision laws.
//!
//! Root location never relies on a fixed marching step. With `G` the signed
//! gap between ball and plate and `M ≥ sup|G''| = g + sup|f̈|`, the quadratic
//! `G(τ) + G'(τ)·h − M·h²/2` is a lower bound of `G(τ + h)`, so its first
//! positive root is a step that cannot jump over a crossing. The march
//! converges onto the first root from the safe side; once the safe step drops
//! below `t_tol` the root is bracketed, bisected down to `t_tol`, and the
//! bracket's secant point is returned.

use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;

/// Ball state at time `t`; position follows `z + v·(τ−t) − g·(τ−t)²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightState {
    pub t: f64,
    pub z: f64,
    pub v: f64,
    pub g: f64,
}

impl FlightState {
    pub fn position(&self, tau: f64) -> f64 {
        let dt = tau - self.t;
        self.z + self.v * dt - 0.5 * self.g * dt * dt
    }

    pub fn velocity(&self, tau: f64) -> f64 {
        self.v - self.g * (tau - self.t)
    }

    /// The same flight re-based at `tau`.
    pub fn advanced(&self, tau: f64) -> Self {
        Self { t: tau, z: self.position(tau), v: self.velocity(tau), g: self.g }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSolveSettings {
    /// Absolute tolerance on event times.
    pub t_tol: f64,
    pub max_bracket_steps: usize,
    /// Crossings with `|G'|` below this are rejected as grazing.
    pub grazing_slope_floor: f64,
    /// Longest flight searched before reporting no impact.
    pub horizon: f64,
}

impl Default for RootSolveSettings {
    fn default() -> Self {
        Self { t_tol: 1e-11, max_bracket_steps: 1_000_000, grazing_slope_floor: 1e-8, horizon: 1e6 }
    }
}

impl RootSolveSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_tol > 0.0) {
            return Err(Error::InvalidSettings(format!("t_tol must be positive, got {}", self.t_tol)));
        }
        if self.max_bracket_steps == 0 {
            return Err(Error::InvalidSettings("max_bracket_steps must be positive".into()));
        }
        if !(self.grazing_slope_floor > 0.0) {
            return Err(Error::InvalidSettings("grazing_slope_floor must be positive".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidSettings("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Side of the plate the ball travels on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    FromAbove,
    FromBelow,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::FromAbove => 1.0,
            Direction::FromBelow => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateHit {
    pub t: f64,
    pub plate_velocity: f64,
    /// `G'(t)` at the crossing, with `G = z − f`.
    pub slope: f64,
}

/// Result of [`first_impact`]: which surface was hit first, and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impact {
    pub surface: usize,
    pub hit: PlateHit,
}

/// A plate the flight may strike, approached from `direction`.
#[derive(Debug, Clone, Copy)]
pub struct Surface<'a> {
    pub plate: &'a ForcingProfile,
    pub direction: Direction,
}

impl<'a> Surface<'a> {
    pub fn new(plate: &'a ForcingProfile, direction: Direction) -> Self {
        Self { plate, direction }
    }
}

#[derive(Clone, Copy)]
struct GapProbe<'a> {
    surface: Surface<'a>,
    curvature: f64,
}

impl GapProbe<'_> {
    /// Oriented gap and its slope: `(s·G, s·G')`, positive before impact.
    fn eval(&self, flight: &FlightState, tau: f64) -> Result<(f64, f64)> {
        let s = self.surface.direction.sign();
        let f = self.surface.plate.eval(tau, 0)?;
        let fd = self.surface.plate.eval(tau, 1)?;
        Ok((s * (flight.position(tau) - f), s * (flight.velocity(tau) - fd)))
    }

    fn value(&self, flight: &FlightState, tau: f64) -> Result<f64> {
        let s = self.surface.direction.sign();
        Ok(s * (flight.position(tau) - self.surface.plate.eval(tau, 0)?))
    }
}

/// Largest `h` for which `a + b·h − m·h²/2` stays positive on `[0, h)`.
fn safe_step(a: f64, b: f64, m: f64) -> f64 {
    if b < 0.0 {
        2.0 * a / ((b * b + 2.0 * m * a).sqrt() - b)
    } else if m > 0.0 {
        (b + (b * b + 2.0 * m * a).sqrt()) / m
    } else {
        f64::INFINITY
    }
}

const MAX_SURFACES: usize = 4;

/// Earliest transversal crossing of `flight` with any of `surfaces`.
pub fn first_impact(flight: &FlightState, surfaces: &[Surface<'_>], settings: &RootSolveSettings) -> Result<Impact> {
    let Some(&head) = surfaces.first() else { return Err(Error::NoImpact { horizon: settings.horizon }) };
    if surfaces.len() > MAX_SURFACES {
        return Err(Error::InvalidSettings(format!("at most {MAX_SURFACES} surfaces per flight")));
    }
    let mut buf = [GapProbe { surface: head, curvature: 0.0 }; MAX_SURFACES];
    for (slot, &surface) in buf.iter_mut().zip(surfaces) {
        *slot = GapProbe { surface, curvature: flight.g.abs() + surface.plate.derivative_bound(2) };
    }
    let probes = &buf[..surfaces.len()];
    let end = flight.t + settings.horizon;
    let mut tau = flight.t;
    let mut prev = flight.t;
    let mut first = true;

    for _ in 0..settings.max_bracket_steps {
        let mut step = f64::INFINITY;
        let mut slowest_slope = f64::INFINITY;
        let mut overshot = false;
        for probe in probes {
            let (mut a, b) = probe.eval(flight, tau)?;
            if a < 0.0 || (!first && a == 0.0) {
                if first {
                    // Launch points sit on a plate; tolerate rounding there only.
                    let scale = flight.z.abs().max(1.0) * 1e-12;
                    if a > -scale && b > 0.0 {
                        a = 0.0;
                    } else {
                        return Err(Error::WrongSide { t: tau });
                    }
                } else {
                    // The march landed on or just past a root through rounding.
                    overshot = true;
                    break;
                }
            }
            if first && a == 0.0 && b <= 0.0 {
                return Err(Error::WrongSide { t: tau });
            }
            let mut h = safe_step(a, b, probe.curvature);
            if let Some(bp) = probe.surface.plate.next_breakpoint(tau) {
                h = h.min(bp - tau);
            }
            if h < step {
                step = h;
                slowest_slope = b.abs();
            }
        }
        first = false;

        if overshot {
            return bracketed(probes, flight, prev, tau, settings)?
                .ok_or(Error::WrongSide { t: tau });
        }
        if !step.is_finite() || tau + step > end {
            return Err(Error::NoImpact { horizon: settings.horizon });
        }
        if step > settings.t_tol {
            prev = tau;
            tau += step;
            continue;
        }

        // Close to a crossing: bracket just past the safe point.
        let hi = tau + 2.0 * step + settings.t_tol;
        match bracketed(probes, flight, tau, hi, settings)? {
            Some(impact) => return Ok(impact),
            None => {
                if slowest_slope < settings.grazing_slope_floor {
                    return Err(Error::GrazingImpact { t: tau, slope: slowest_slope });
                }
                prev = tau;
                tau += step;
            }
        }
    }
    Err(Error::BracketExhausted { steps: settings.max_bracket_steps })
}

/// Earliest crossing among the surfaces whose gap is non-positive at `hi`,
/// given all gaps positive at `lo`.
fn bracketed(
    probes: &[GapProbe<'_>],
    flight: &FlightState,
    lo: f64,
    hi: f64,
    settings: &RootSolveSettings,
) -> Result<Option<Impact>> {
    let mut best: Option<Impact> = None;
    for (idx, probe) in probes.iter().enumerate() {
        if probe.value(flight, hi)? > 0.0 {
            continue;
        }
        let t_root = refine(probe, flight, lo, hi, settings.t_tol)?;
        if best.is_none_or(|b| t_root < b.hit.t) {
            let (_, slope) = probe.eval(flight, t_root)?;
            let plate_velocity = probe.surface.plate.eval(t_root, 1)?;
            let slope = slope * probe.surface.direction.sign();
            best = Some(Impact { surface: idx, hit: PlateHit { t: t_root, plate_velocity, slope } });
        }
    }
    let Some(impact) = best else { return Ok(None) };
    let probe = &probes[impact.surface];
    // Slopes below what the gap's rounding noise can resolve are tangencies.
    let level = flight.position(impact.hit.t).abs() + probe.surface.plate.eval(impact.hit.t, 0)?.abs() + 1.0;
    let resolvable = (2.0 * probe.curvature * 4.0 * f64::EPSILON * level).sqrt();
    if impact.hit.slope.abs() < settings.grazing_slope_floor.max(resolvable) {
        return Err(Error::GrazingImpact { t: impact.hit.t, slope: impact.hit.slope });
    }
    Ok(Some(impact))
}

/// Bisection on `[lo, hi]` (gap positive at `lo`, non-positive at `hi`)
/// down to width `t_tol`, then the secant point of the final bracket.
fn refine(probe: &GapProbe<'_>, flight: &FlightState, mut lo: f64, mut hi: f64, t_tol: f64) -> Result<f64> {
    let mut g_lo = probe.value(flight, lo)?;
    let mut g_hi = probe.value(flight, hi)?;
    if g_hi == 0.0 {
        return Ok(hi);
    }
    while hi - lo > t_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = probe.value(flight, mid)?;
        if g_mid > 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else if g_mid < 0.0 {
            hi = mid;
            g_hi = g_mid;
        } else {
            return Ok(mid);
        }
    }
    let t = lo + g_lo * (hi - lo) / (g_lo - g_hi);
    Ok(t.clamp(lo, hi))
}

/// Minimal transversal crossing of `flight` with `plate` after `flight.t`.
pub fn next_plate_hit(
    flight: &FlightState,
    plate: &ForcingProfile,
    direction: Direction,
    settings: &RootSolveSettings,
) -> Result<PlateHit> {
    first_impact(flight, &[Surface::new(plate, direction)], settings).map(|i| i.hit)
}

/// Elastic reflection off an infinitely heavy wall moving at `plate_velocity`.
pub fn reflect_off_plate(v_in: f64, plate_velocity: f64) -> f64 {
    -v_in + 2.0 * plate_velocity
}

/// Elastic collision of two point masses on a line, written with
/// `α = (m1 − m2)/(m1 + m2)`. A zero mass gives `α = ±1`, leaving the massive
/// ball's velocity bit-for-bit unchanged.
pub fn ball_ball_collide(m1: f64, v1_minus: f64, m2: f64, v2_minus: f64) -> (f64, f64) {
    let alpha = (m1 - m2) / (m1 + m2);
    let v1_plus = alpha * v1_minus + (1.0 - alpha) * v2_minus;
    let v2_plus = (1.0 + alpha) * v1_minus - alpha * v2_minus;
    (v1_plus, v2_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(z: f64) -> ForcingProfile {
        ForcingProfile::constant(1.0, z).unwrap()
    }

    #[test]
    fn upward_hit_on_static_upper_plate() {
        let flight = FlightState { t: 0.0, z: 0.0, v: 3.0, g: 2.0 };
        let hit = next_plate_hit(&flight, &flat(1.0), Direction::FromBelow, &RootSolveSettings::default()).unwrap();
        let expected = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((hit.t - expected).abs() < 1e-11, "{} vs {expected}", hit.t);
        assert_eq!(hit.plate_velocity, 0.0);
    }

    #[test]
    fn symmetric_hop() {
        let flight = FlightState { t: 0.0, z: 0.0, v: 1.0, g: 2.0 };
        let hit = next_plate_hit(&flight, &flat(0.0), Direction::FromAbove, &RootSolveSettings::default()).unwrap();
        assert!((hit.t - 1.0).abs() < 1e-11);
    }

    #[test]
    fn linear_plate_without_gravity() {
        let plate = ForcingProfile::polynomial(1.0, vec![0.0, -1.0], (-2.0, 1.0)).unwrap();
        let flight = FlightState { t: -1.0, z: 0.0, v: 2.0, g: 0.0 };
        let hit = next_plate_hit(&flight, &plate, Direction::FromBelow, &RootSolveSettings::default()).unwrap();
        assert!((hit.t + 2.0 / 3.0).abs() < 1e-12, "{}", hit.t);
        assert_eq!(hit.plate_velocity, -1.0);
    }

    #[test]
    fn escape_without_gravity_is_no_impact() {
        let flight = FlightState { t: 0.0, z: 0.0, v: 1.0, g: 0.0 };
        let err = next_plate_hit(&flight, &flat(0.0), Direction::FromAbove, &RootSolveSettings::default());
        assert!(matches!(err, Err(Error::NoImpact { .. })));
    }

    #[test]
    fn tangential_contact_is_grazing() {
        // Apex of the parabola exactly touches the upper plate at z = 1.
        let flight = FlightState { t: 0.0, z: 0.0, v: 2.0, g: 2.0 };
        let err = next_plate_hit(&flight, &flat(1.0), Direction::FromBelow, &RootSolveSettings::default());
        assert!(matches!(err, Err(Error::GrazingImpact { .. })), "{err:?}");
    }

    #[test]
    fn wrong_side_launch_is_rejected() {
        let flight = FlightState { t: 0.0, z: 0.0, v: -1.0, g: 2.0 };
        let err = next_plate_hit(&flight, &flat(0.0), Direction::FromAbove, &RootSolveSettings::default());
        assert!(matches!(err, Err(Error::WrongSide { .. })));
    }

    #[test]
    fn first_impact_picks_earliest_surface() {
        let lower = flat(0.0);
        let upper = flat(1.0);
        let surfaces = [Surface::new(&upper, Direction::FromBelow), Surface::new(&lower, Direction::FromAbove)];
        let settings = RootSolveSettings::default();
        let high = first_impact(&FlightState { t: 0.0, z: 0.0, v: 3.0, g: 2.0 }, &surfaces, &settings).unwrap();
        assert_eq!(high.surface, 0);
        let low = first_impact(&FlightState { t: 0.0, z: 0.0, v: 1.0, g: 2.0 }, &surfaces, &settings).unwrap();
        assert_eq!(low.surface, 1);
        assert!((low.hit.t - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect_off_plate(-3.0, 0.0), 3.0);
        assert_eq!(reflect_off_plate(-3.0, 1.0), 5.0);
        assert_eq!(reflect_off_plate(2.0, -1.0), -4.0);
    }

    #[test]
    fn collision_examples() {
        assert_eq!(ball_ball_collide(1.0, -4.0, 1.0, 7.0), (7.0, -4.0));
        assert_eq!(ball_ball_collide(0.0, -5.0, 1.0, 3.0), (11.0, 3.0));
        let (a, b) = ball_ball_collide(2.0, 0.0, 1.0, 3.0);
        assert!((a - 2.0).abs() < 1e-15 && (b + 1.0).abs() < 1e-15);
    }

    fn dense_sign_change(flight: &FlightState, plate: &ForcingProfile, dir: Direction, a: f64, b: f64) -> bool {
        let s = if dir == Direction::FromAbove { 1.0 } else { -1.0 };
        let n = 20_000;
        (0..=n).any(|i| {
            let t = a + (b - a) * i as f64 / n as f64;
            s * (flight.position(t) - plate.eval(t, 0).unwrap()) < 0.0
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn hit_is_a_root_and_the_first(
            amp in 0.0f64..0.3,
            phase in 0.0f64..std::f64::consts::TAU,
            t0 in 0.0f64..1.0,
            v in 1.0f64..8.0,
            g in 0.5f64..4.0,
        ) {
            let plate = ForcingProfile::sinusoid(1.0, amp, phase, 0.0).unwrap();
            let z0 = plate.eval(t0, 0).unwrap();
            let fd = plate.eval(t0, 1).unwrap();
            prop_assume!(v > fd + 0.1);
            let flight = FlightState { t: t0, z: z0, v, g };
            let settings = RootSolveSettings::default();
            match next_plate_hit(&flight, &plate, Direction::FromAbove, &settings) {
                Ok(hit) => {
                    let gap = flight.position(hit.t) - plate.eval(hit.t, 0).unwrap();
                    prop_assert!(gap.abs() <= hit.slope.abs() * settings.t_tol + 1e-14);
                    prop_assert!(!dense_sign_change(&flight, &plate, Direction::FromAbove,
                        t0 + settings.t_tol, hit.t - settings.t_tol));
                }
                Err(Error::GrazingImpact { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }

        #[test]
        fn momentum_and_energy_are_conserved(
            m1 in 0.0f64..10.0, m2 in 0.01f64..10.0, v1 in -50.0f64..50.0, v2 in -50.0f64..50.0,
        ) {
            let (a, b) = ball_ball_collide(m1, v1, m2, v2);
            let p_scale = m1 * v1.abs() + m2 * v2.abs() + 1e-300;
            prop_assert!((m1 * v1 + m2 * v2 - (m1 * a + m2 * b)).abs() <= 1e-12 * p_scale);
            let e0 = m1 * v1 * v1 + m2 * v2 * v2;
            let e1 = m1 * a * a + m2 * b * b;
            prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1e-300));
        }

        // Values on a dyadic lattice make every intermediate exact.
        #[test]
        fn reflection_is_an_involution(i in -1_000_000i64..1_000_000, j in -1_000_000i64..1_000_000) {
            let v = i as f64 / 1024.0;
            let w = j as f64 / 1024.0;
            prop_assert_eq!(reflect_off_plate(reflect_off_plate(v, w), w), v);
        }
    }
}
