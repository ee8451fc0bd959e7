//! Fixed-step reference integrator. Every body flies on its exact parabola;
//! every `h` the gap functions are sampled and each sign change is bisected.
//! Event location is independent of [`crate::solver`]; the collision laws
//! are shared.

use crate::bouncing::TwoBallSetup;
use crate::error::{Error, Result};
use crate::fermi_ulam::PhasePoint;
use crate::forcing::{ForcingProfile, PlatePair};
use crate::record::{Body, BodyImpact, CollisionEvent, EventKind, Outcome, RecordMeta, TrajectoryRecord};
use crate::scenario::{Physics, Scenario};
use crate::solver::{ball_ball_collide, reflect_off_plate, FlightState};

/// Events allowed before a run is declared an event storm.
pub const EVENT_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub h: f64,
    /// Bisection halvings per detected sign change.
    pub refine_iters: usize,
    /// Resolution the engine under test works at; `h` may not be finer.
    pub t_tol: f64,
    pub max_events: usize,
}

impl OracleSettings {
    pub fn for_period(period: f64, t_tol: f64) -> Self {
        Self { h: 1e-6 * period, refine_iters: 60, t_tol, max_events: EVENT_LIMIT }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidSettings(format!("oracle step must be positive, got {}", self.h)));
        }
        if self.h < self.t_tol {
            return Err(Error::InvalidSettings(format!(
                "oracle step {} is finer than the time tolerance {}",
                self.h, self.t_tol
            )));
        }
        if self.refine_iters == 0 {
            return Err(Error::InvalidSettings("refine_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Ball {
    body: Body,
    mass: f64,
    flight: FlightState,
}

#[derive(Debug, Clone, Copy)]
enum Gap<'a> {
    /// Ball above a plate.
    Floor { ball: usize, plate: &'a ForcingProfile },
    /// Ball below a plate.
    Ceiling { ball: usize, plate: &'a ForcingProfile },
    /// `hi` above `lo`.
    Pair { lo: usize, hi: usize },
}

impl Gap<'_> {
    fn eval(&self, balls: &[Ball], t: f64) -> Result<f64> {
        Ok(match *self {
            Gap::Floor { ball, plate } => balls[ball].flight.position(t) - plate.eval(t, 0)?,
            Gap::Ceiling { ball, plate } => plate.eval(t, 0)? - balls[ball].flight.position(t),
            Gap::Pair { lo, hi } => balls[hi].flight.position(t) - balls[lo].flight.position(t),
        })
    }
}

struct Stepper<'a> {
    balls: Vec<Ball>,
    gaps: Vec<Gap<'a>>,
    settings: OracleSettings,
    record: TrajectoryRecord,
}

fn bisect(gap: &Gap<'_>, balls: &[Ball], mut a: f64, mut b: f64, iters: usize) -> Result<f64> {
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if gap.eval(balls, m)? > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

impl Stepper<'_> {
    fn run(mut self, horizon: f64) -> Result<TrajectoryRecord> {
        let window = 10.0 * self.settings.t_tol;
        let mut anchor = self.balls.iter().map(|b| b.flight.t).fold(f64::NEG_INFINITY, f64::max);
        'events: loop {
            if self.record.len() >= self.settings.max_events {
                return Err(Error::EventStorm { limit: self.settings.max_events });
            }
            let mut prev: Vec<f64> = self.gaps.iter().map(|g| g.eval(&self.balls, anchor)).collect::<Result<_>>()?;
            if prev.iter().any(|&v| v < -1e-9) {
                return Err(Error::WrongSide { t: anchor });
            }
            let mut t_prev = anchor;
            let mut k = 1u64;
            loop {
                if t_prev >= horizon {
                    break 'events;
                }
                let t_next = anchor + k as f64 * self.settings.h;
                let next: Vec<f64> = self.gaps.iter().map(|g| g.eval(&self.balls, t_next)).collect::<Result<_>>()?;
                let crossed: Vec<usize> = (0..self.gaps.len())
                    .filter(|&i| next[i] < 0.0 || (next[i] == 0.0 && prev[i] > 0.0))
                    .collect();
                if crossed.is_empty() {
                    prev = next;
                    t_prev = t_next;
                    k += 1;
                    continue;
                }
                let mut first: Option<(usize, f64)> = None;
                for &i in &crossed {
                    let tc = bisect(&self.gaps[i], &self.balls, t_prev, t_next, self.settings.refine_iters)?;
                    if first.is_none_or(|(_, t)| tc < t) {
                        first = Some((i, tc));
                    }
                }
                let (i, tc) = first.expect("a crossing");
                if tc > horizon {
                    break 'events;
                }
                // A second gap closing within the simultaneity window.
                let mut partner = None;
                for j in 0..self.gaps.len() {
                    if j != i && self.gaps[j].eval(&self.balls, tc + window)? <= 0.0 {
                        let tj = bisect(&self.gaps[j], &self.balls, t_prev, tc + window, self.settings.refine_iters)?;
                        if (tj - tc).abs() <= window {
                            partner = Some(j);
                        }
                    }
                }
                match partner {
                    Some(j) => {
                        if self.triple(i, j, tc)? {
                            break 'events;
                        }
                        anchor = t_prev;
                    }
                    None => {
                        self.apply(i, tc)?;
                        anchor = tc;
                    }
                }
                continue 'events;
            }
        }
        Ok(self.record)
    }

    fn apply(&mut self, gap: usize, tc: f64) -> Result<()> {
        match self.gaps[gap] {
            Gap::Floor { ball, plate } | Gap::Ceiling { ball, plate } => {
                let kind = if matches!(self.gaps[gap], Gap::Floor { .. }) {
                    EventKind::PlateHit
                } else {
                    EventKind::UpperPlateHit
                };
                let b = &mut self.balls[ball];
                let v_pre = b.flight.velocity(tc);
                let w = plate.eval(tc, 1)?;
                let v_post = reflect_off_plate(v_pre, w);
                let z = plate.eval(tc, 0)?;
                b.flight = FlightState { t: tc, z, v: v_post, g: b.flight.g };
                self.record.events.push(CollisionEvent::single(kind, tc, z, w, b.body, v_pre, v_post));
            }
            Gap::Pair { lo, hi } => {
                let (l, h) = (self.balls[lo], self.balls[hi]);
                let z = l.flight.position(tc);
                let (vl, vh) = (l.flight.velocity(tc), h.flight.velocity(tc));
                let (l_post, h_post) = ball_ball_collide(l.mass, vl, h.mass, vh);
                self.balls[lo].flight = FlightState { t: tc, z, v: l_post, g: l.flight.g };
                self.balls[hi].flight = FlightState { t: tc, z, v: h_post, g: h.flight.g };
                let mut impacts = vec![
                    BodyImpact { body: l.body, v_pre: vl, v_post: Some(l_post) },
                    BodyImpact { body: h.body, v_pre: vh, v_post: Some(h_post) },
                ];
                impacts.sort_by_key(|i| i.body == Body::P2);
                self.record.events.push(CollisionEvent {
                    kind: EventKind::BallBall,
                    time: tc,
                    z,
                    plate_velocity: None,
                    impacts,
                });
            }
        }
        Ok(())
    }

    /// Plate and both balls meet. Returns whether the run ends.
    fn triple(&mut self, i: usize, j: usize, tc: f64) -> Result<bool> {
        let (floor, pair) = match (self.gaps[i], self.gaps[j]) {
            (f @ Gap::Floor { .. }, p @ Gap::Pair { .. }) | (p @ Gap::Pair { .. }, f @ Gap::Floor { .. }) => (f, p),
            _ => return Err(Error::InvalidBalls(format!("unexpected simultaneous impacts at t = {tc}"))),
        };
        let (Gap::Floor { plate, .. }, Gap::Pair { lo, hi }) = (floor, pair) else { unreachable!() };
        let (l, h) = (self.balls[lo], self.balls[hi]);
        self.record.events.push(CollisionEvent {
            kind: EventKind::Triple,
            time: tc,
            z: plate.eval(tc, 0)?,
            plate_velocity: Some(plate.eval(tc, 1)?),
            impacts: vec![
                BodyImpact { body: l.body, v_pre: l.flight.velocity(tc), v_post: None },
                BodyImpact { body: h.body, v_pre: h.flight.velocity(tc), v_post: None },
            ],
        });
        if l.mass > 0.0 {
            self.record.outcome = Outcome::TripleCollision { t: tc };
            return Ok(true);
        }
        self.record.outcome = Outcome::ZeroMassSingularity { t: tc };
        self.gaps = vec![Gap::Floor { ball: hi, plate }];
        Ok(false)
    }
}

fn flight(t: f64, z: f64, v: f64, g: f64) -> FlightState {
    FlightState { t, z, v, g }
}

/// One ball above `plate` from an arbitrary state.
pub fn one_ball(
    plate: &ForcingProfile,
    start: FlightState,
    horizon: f64,
    meta: RecordMeta,
    settings: &OracleSettings,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    Stepper {
        balls: vec![Ball { body: Body::Ball, mass: 1.0, flight: start }],
        gaps: vec![Gap::Floor { ball: 0, plate }],
        settings: *settings,
        record: TrajectoryRecord::new(meta),
    }
    .run(horizon)
}

/// A ball launched from the lower plate at `start` between two plates.
pub fn fermi_ulam(
    plates: &PlatePair,
    g: f64,
    start: PhasePoint,
    horizon: f64,
    meta: RecordMeta,
    settings: &OracleSettings,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    let z0 = plates.lower().eval(start.t, 0)?;
    Stepper {
        balls: vec![Ball { body: Body::Ball, mass: 1.0, flight: flight(start.t, z0, start.v, g) }],
        gaps: vec![Gap::Floor { ball: 0, plate: plates.lower() }, Gap::Ceiling { ball: 0, plate: plates.upper() }],
        settings: *settings,
        record: TrajectoryRecord::new(meta),
    }
    .run(horizon)
}

/// Two balls above one plate.
pub fn two_ball(
    setup: &TwoBallSetup,
    plate: &ForcingProfile,
    g: f64,
    horizon: f64,
    meta: RecordMeta,
    settings: &OracleSettings,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    let [a, b] = setup.balls;
    let (lo, hi) = if b.z < a.z { (b, a) } else { (a, b) };
    let ball = |s: crate::bouncing::BallState| Ball { body: s.label, mass: s.mass, flight: flight(setup.t0, s.z, s.v, g) };
    Stepper {
        balls: vec![ball(lo), ball(hi)],
        gaps: vec![Gap::Floor { ball: 0, plate }, Gap::Pair { lo: 0, hi: 1 }],
        settings: *settings,
        record: TrajectoryRecord::new(meta),
    }
    .run(horizon)
}

/// Runs every initial condition of `scenario` up to `horizon`.
pub fn oracle_run(scenario: &Scenario, horizon: f64, settings: &OracleSettings) -> Result<Vec<TrajectoryRecord>> {
    if !horizon.is_finite() {
        return Err(Error::InvalidSettings("oracle horizon must be finite".into()));
    }
    let meta = scenario.meta();
    match &scenario.physics {
        Physics::FermiUlam { plates, starts } | Physics::FermiUlamSingular { plates, starts, .. } => starts
            .iter()
            .map(|&p| fermi_ulam(plates, scenario.g, p, horizon, meta.clone(), settings))
            .collect(),
        Physics::OneBall { plate, starts, resonant } => {
            let launches: Vec<PhasePoint> = match resonant {
                Some((spec, _)) => vec![spec.launch(0, plate.period(), scenario.g)],
                None => starts.clone(),
            };
            launches
                .iter()
                .map(|p| {
                    let start = flight(p.t, plate.eval(p.t, 0)?, p.v, scenario.g);
                    one_ball(plate, start, horizon, meta.clone(), settings)
                })
                .collect()
        }
        Physics::TwoBall { plate, setup } => Ok(vec![two_ball(setup, plate, scenario.g, horizon, meta, settings)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bouncing::BallState;

    fn meta() -> RecordMeta {
        RecordMeta { model: "test".into(), period: 1.0, g: 2.0 }
    }

    fn settings() -> OracleSettings {
        OracleSettings::for_period(1.0, 1e-11)
    }

    #[test]
    fn static_fermi_ulam_first_impact() {
        let plates = PlatePair::new(
            ForcingProfile::constant(1.0, 0.0).unwrap(),
            ForcingProfile::constant(1.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let rec = fermi_ulam(&plates, 2.0, PhasePoint::new(0.0, 3.0), 0.5, meta(), &settings()).unwrap();
        let e = &rec.events[0];
        assert_eq!(e.kind, EventKind::UpperPlateHit);
        assert!((e.time - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-9, "{}", e.time);
        assert!((e.impacts[0].v_post.unwrap() + 5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn symmetric_hop() {
        let plate = ForcingProfile::constant(1.0, 0.0).unwrap();
        let rec = one_ball(&plate, flight(0.0, 0.0, 1.0, 2.0), 2.5, meta(), &settings()).unwrap();
        assert_eq!(rec.len(), 2);
        assert!((rec.events[0].time - 1.0).abs() < 1e-9);
        assert!((rec.events[1].time - 2.0).abs() < 1e-9);
    }

    #[test]
    fn step_finer_than_tolerance_is_rejected() {
        let plate = ForcingProfile::constant(1.0, 0.0).unwrap();
        let s = OracleSettings { h: 1e-12, ..settings() };
        assert!(matches!(
            one_ball(&plate, flight(0.0, 0.0, 1.0, 2.0), 1.0, meta(), &s),
            Err(Error::InvalidSettings(_))
        ));
    }

    #[test]
    fn halving_the_step_moves_events_below_tolerance() {
        let plate = ForcingProfile::sinusoid(1.0, 0.01, 0.0, 0.0).unwrap();
        let start = flight(0.1, plate.eval(0.1, 0).unwrap(), 1.0, 2.0);
        let s = OracleSettings { h: 1e-5, ..settings() };
        let a = one_ball(&plate, start, 5.0, meta(), &s).unwrap();
        let b = one_ball(&plate, start, 5.0, meta(), &OracleSettings { h: 5e-6, ..s }).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.events.iter().zip(&b.events) {
            assert!((x.time - y.time).abs() < 1e-11);
        }
    }

    #[test]
    fn balls_meet_after_half_a_second() {
        let plate = ForcingProfile::constant(1.0, 0.0).unwrap();
        let setup = TwoBallSetup {
            t0: 0.0,
            balls: [
                BallState { label: Body::P1, mass: 1.0, z: 1.0, v: 3.0 },
                BallState { label: Body::P2, mass: 1.0, z: 2.0, v: 1.0 },
            ],
        };
        let rec = two_ball(&setup, &plate, 9.81, 0.6, meta(), &settings()).unwrap();
        assert_eq!(rec.events[0].kind, EventKind::BallBall);
        assert!((rec.events[0].time - 0.5).abs() < 1e-9);
        assert!((rec.events[0].impacts[0].v_post.unwrap() - (1.0 - 9.81 * 0.5)).abs() < 1e-8);
    }

    #[test]
    fn event_storm_is_reported() {
        let plate = ForcingProfile::constant(1.0, 0.0).unwrap();
        let s = OracleSettings { max_events: 3, ..settings() };
        assert!(matches!(
            one_ball(&plate, flight(0.0, 0.0, 0.1, 2.0), 10.0, meta(), &s),
            Err(Error::EventStorm { limit: 3 })
        ));
    }
}
