//! Balls bouncing in gravity on a single oscillating plate: the one-ball
//! section map, the resonant orbits, and the event-driven two-ball system
//! including its zero-mass restrictions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermi_ulam::PhasePoint;
use crate::forcing::{class_c_test, velocity_roots, Arc, ForcingProfile, PlatePair, ProfileKind, Tangency};
use crate::record::{
    Body, BodyImpact, CollisionEvent, EventKind, Outcome, RecordMeta, StopReason, StopRule, TrajectoryRecord,
};
use crate::solver::{
    ball_ball_collide, next_plate_hit, reflect_off_plate, Direction, FlightState, RootSolveSettings,
};

/// Deviation allowed between a simulated hop and the resonant pattern.
pub const RESONANCE_TOL: f64 = 1e-8;

/// One plate impact of a ball: landing velocity, outgoing velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounce {
    pub t: f64,
    pub z: f64,
    pub v_in: f64,
    pub v_out: f64,
    pub plate_velocity: f64,
}

/// Flies from an arbitrary state to the next plate impact and reflects.
pub fn bounce_from(flight: &FlightState, plate: &ForcingProfile, settings: &RootSolveSettings) -> Result<Bounce> {
    let hit = next_plate_hit(flight, plate, Direction::FromAbove, settings).map_err(|e| match e {
        Error::NoImpact { .. } if flight.g == 0.0 => Error::NonReturn,
        other => other,
    })?;
    let v_in = flight.velocity(hit.t);
    Ok(Bounce {
        t: hit.t,
        z: plate.eval(hit.t, 0)?,
        v_in,
        v_out: reflect_off_plate(v_in, hit.plate_velocity),
        plate_velocity: hit.plate_velocity,
    })
}

/// Section map from one plate impact to the next, `v′ = g(t′−t) − v + 2ḟ(t′)`.
pub fn one_ball_map(p: PhasePoint, plate: &ForcingProfile, g: f64, settings: &RootSolveSettings) -> Result<PhasePoint> {
    one_ball_bounce(p, plate, g, settings).map(|b| PhasePoint::new(b.t, b.v_out))
}

pub fn one_ball_bounce(p: PhasePoint, plate: &ForcingProfile, g: f64, settings: &RootSolveSettings) -> Result<Bounce> {
    if !(p.v > 0.0) {
        return Err(Error::WrongSide { t: p.t });
    }
    let flight = FlightState { t: p.t, z: plate.eval(p.t, 0)?, v: p.v, g };
    bounce_from(&flight, plate, settings)
}

/// Plate impacts of a lone ball from an arbitrary state until `stop`.
pub fn one_ball_run(
    start: FlightState,
    plate: &ForcingProfile,
    stop: &StopRule,
    settings: &RootSolveSettings,
) -> Result<Vec<Bounce>> {
    if !stop.is_set() {
        return Err(Error::InvalidSettings("run needs a stop rule".into()));
    }
    let mut out: Vec<Bounce> = Vec::new();
    let mut flight = start;
    while stop.reached(out.len(), flight.t, out.last().map_or(0.0, |b| b.v_out.abs())).is_none() {
        let b = bounce_from(&flight, plate, settings)?;
        flight = FlightState { t: b.t, z: b.z, v: b.v_out, g: start.g };
        out.push(b);
    }
    Ok(out)
}

/// Plate-hit record of a lone ball.
pub fn bounces_record(bounces: &[Bounce], meta: RecordMeta) -> TrajectoryRecord {
    let mut record = TrajectoryRecord::new(meta);
    record.events = bounces
        .iter()
        .map(|b| CollisionEvent::single(EventKind::PlateHit, b.t, b.z, b.plate_velocity, Body::Ball, b.v_in, b.v_out))
        .collect();
    record
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resonance {
    /// Periodic: launch at a plate velocity zero, constant speed.
    Gamma1,
    /// Accelerating: launch where the plate velocity is `T·g/2`.
    Gamma2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonantSpec {
    pub variant: Resonance,
    pub m2_int: u32,
    pub t0: f64,
}

impl ResonantSpec {
    fn target(variant: Resonance, plate: &ForcingProfile, g: f64) -> f64 {
        match variant {
            Resonance::Gamma1 => 0.0,
            Resonance::Gamma2 => plate.period() * g / 2.0,
        }
    }

    pub fn new(variant: Resonance, m2_int: u32, t0: f64, plate: &ForcingProfile, g: f64) -> Result<Self> {
        if m2_int == 0 || !(g > 0.0) {
            return Err(Error::InvalidBalls(format!("need m2_int ≥ 1 and g > 0 (got {m2_int}, {g})")));
        }
        let target = Self::target(variant, plate, g);
        let miss = plate.eval(t0, 1)? - target;
        if miss.abs() > 1e-10 {
            return Err(Error::InvalidProfile(format!("plate velocity at t0 misses {target} by {miss:e}")));
        }
        Ok(Self { variant, m2_int, t0 })
    }

    /// Finds a launch time in one period. Where several exist, the one with
    /// `f̈(t₀)` closest to `−g/2` is chosen, which is the most stable.
    pub fn locate(variant: Resonance, m2_int: u32, plate: &ForcingProfile, g: f64) -> Result<Self> {
        if variant == Resonance::Gamma2 && class_c_test(plate, g, 1).is_none() {
            return Err(Error::InvalidProfile("plate velocity never reaches T·g/2".into()));
        }
        let target = Self::target(variant, plate, g);
        let roots = velocity_roots(plate, target);
        let t0 = roots
            .iter()
            .copied()
            .min_by(|a, b| {
                let da = (plate.eval(*a, 2).unwrap_or(f64::NAN) + g / 2.0).abs();
                let db = (plate.eval(*b, 2).unwrap_or(f64::NAN) + g / 2.0).abs();
                da.total_cmp(&db)
            })
            .ok_or_else(|| Error::InvalidProfile(format!("no time with plate velocity {target}")))?;
        Self::new(variant, m2_int, t0, plate, g)
    }

    pub fn v0(&self, period: f64, g: f64) -> f64 {
        period * g * f64::from(self.m2_int) / 2.0
    }

    /// Launch state of hop `n` on the exact pattern.
    pub fn launch(&self, n: usize, period: f64, g: f64) -> PhasePoint {
        let nf = n as f64;
        let m2 = f64::from(self.m2_int);
        match self.variant {
            Resonance::Gamma1 => PhasePoint::new(self.t0 + nf * m2 * period, self.v0(period, g)),
            Resonance::Gamma2 => {
                PhasePoint::new(self.t0 + period * (nf * m2 + nf * (nf - 1.0)), self.v0(period, g) + nf * period * g)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopCheck {
    pub hop: usize,
    pub duration: f64,
    pub v_out: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonantRun {
    pub spec: ResonantSpec,
    pub record: TrajectoryRecord,
    pub hops: Vec<HopCheck>,
    pub max_deviation: f64,
    /// Hops a free-running iteration from the first launch stays within
    /// tolerance of the pattern before rounding errors are amplified away.
    pub free_run_hops: usize,
    /// Trace of the numerical Jacobian of the first hop; `|trace| > 2`
    /// means the orbit is linearly unstable.
    pub hop_jacobian_trace: f64,
}

/// Simulates `n_hops` hops of the resonant orbit and checks each one.
///
/// Every hop starts from the exact pattern state, so the check measures
/// whether the section map reproduces the pattern rather than how fast an
/// unstable orbit loses it; the latter is reported as `free_run_hops`.
pub fn build_resonant(
    spec: ResonantSpec,
    plate: &ForcingProfile,
    g: f64,
    n_hops: usize,
    settings: &RootSolveSettings,
) -> Result<ResonantRun> {
    let period = plate.period();
    let mut record = TrajectoryRecord::new(RecordMeta { model: "one_ball".into(), period, g });
    let mut hops = Vec::with_capacity(n_hops);
    let mut max_dev: f64 = 0.0;
    for n in 0..n_hops {
        let launch = spec.launch(n, period, g);
        let expected = spec.launch(n + 1, period, g);
        let b = one_ball_bounce(launch, plate, g, settings).map_err(|_| Error::ResonanceBroken {
            hop: n,
            deviation: f64::INFINITY,
        })?;
        let deviation = (b.t - expected.t).abs().max((b.v_out - expected.v).abs());
        if deviation > RESONANCE_TOL {
            return Err(Error::ResonanceBroken { hop: n, deviation });
        }
        max_dev = max_dev.max(deviation);
        hops.push(HopCheck { hop: n, duration: b.t - launch.t, v_out: b.v_out, deviation });
        record.events.push(CollisionEvent::single(
            EventKind::PlateHit,
            b.t,
            b.z,
            b.plate_velocity,
            Body::Ball,
            b.v_in,
            b.v_out,
        ));
    }

    let mut free_run_hops = 0;
    let mut p = spec.launch(0, period, g);
    while free_run_hops < n_hops {
        let Ok(next) = one_ball_map(p, plate, g, settings) else { break };
        let expected = spec.launch(free_run_hops + 1, period, g);
        if (next.t - expected.t).abs().max((next.v - expected.v).abs()) > RESONANCE_TOL {
            break;
        }
        free_run_hops += 1;
        p = next;
    }

    let hop_jacobian_trace = hop_trace(spec.launch(0, period, g), plate, g, settings)?;
    Ok(ResonantRun { spec, record, hops, max_deviation: max_dev, free_run_hops, hop_jacobian_trace })
}

fn hop_trace(p: PhasePoint, plate: &ForcingProfile, g: f64, settings: &RootSolveSettings) -> Result<f64> {
    let h = 1e-6;
    let map = |q: PhasePoint| one_ball_map(q, plate, g, settings);
    let dt_dt = (map(PhasePoint::new(p.t + h, p.v))?.t - map(PhasePoint::new(p.t - h, p.v))?.t) / (2.0 * h);
    let dv_dv = (map(PhasePoint::new(p.t, p.v + h))?.v - map(PhasePoint::new(p.t, p.v - h))?.v) / (2.0 * h);
    Ok(dt_dt + dv_dv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallState {
    pub label: Body,
    pub mass: f64,
    pub z: f64,
    pub v: f64,
}

/// Initial condition of a two-ball run at time `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoBallSetup {
    pub t0: f64,
    pub balls: [BallState; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBallRun {
    pub setup: TwoBallSetup,
    pub plate: ForcingProfile,
    pub g: f64,
    pub record: TrajectoryRecord,
    pub stopped_by: StopReason,
}

/// A ball in flight since its last velocity change.
#[derive(Debug, Clone, Copy)]
struct Tracked {
    label: Body,
    mass: f64,
    flight: FlightState,
}

impl Tracked {
    fn z(&self, t: f64) -> f64 {
        self.flight.position(t)
    }

    fn v(&self, t: f64) -> f64 {
        self.flight.velocity(t)
    }

    /// Re-anchors only when the velocity changed, so an unaffected ball keeps
    /// computing its flight from the same launch state.
    fn set_velocity(&mut self, t: f64, z: f64, v_pre: f64, v_post: f64) {
        if v_post.to_bits() != v_pre.to_bits() {
            self.flight = FlightState { t, z, v: v_post, g: self.flight.g };
        }
    }
}

fn validate_setup(setup: &TwoBallSetup, plate: &ForcingProfile, g: f64) -> Result<()> {
    if !(g > 0.0) {
        return Err(Error::InvalidBalls(format!("bouncing models need g > 0, got {g}")));
    }
    let [a, b] = setup.balls;
    if a.label == b.label || a.label == Body::Ball || b.label == Body::Ball {
        return Err(Error::InvalidBalls("balls must be labelled p1 and p2".into()));
    }
    for ball in [a, b] {
        if !(ball.mass >= 0.0) || !ball.mass.is_finite() || !ball.z.is_finite() || !ball.v.is_finite() {
            return Err(Error::InvalidBalls(format!("invalid state for {}", ball.label.as_str())));
        }
    }
    if a.mass == 0.0 && b.mass == 0.0 {
        return Err(Error::InvalidBalls("at most one ball may have zero mass".into()));
    }
    let floor = plate.eval(setup.t0, 0)?;
    let scale = 1e-12 * floor.abs().max(1.0);
    if a.z.min(b.z) < floor - scale {
        return Err(Error::InvalidBalls(format!("a ball starts below the plate (plate at {floor})")));
    }
    Ok(())
}

/// Event-driven simulation of two balls above one plate.
pub fn two_ball_simulate(
    setup: TwoBallSetup,
    plate: &ForcingProfile,
    g: f64,
    stop: &StopRule,
    settings: &RootSolveSettings,
) -> Result<TwoBallRun> {
    validate_setup(&setup, plate, g)?;
    settings.validate()?;
    if !stop.is_set() {
        return Err(Error::InvalidSettings("run needs a stop rule".into()));
    }
    let track = |b: BallState| Tracked {
        label: b.label,
        mass: b.mass,
        flight: FlightState { t: setup.t0, z: b.z, v: b.v, g },
    };
    let [a, b] = setup.balls;
    let (mut lo, mut hi) = if b.z < a.z { (track(b), track(a)) } else { (track(a), track(b)) };
    // Once the massless lower ball is squeezed out, only `hi` remains and it
    // is the one meeting the plate.
    let mut alone = false;
    let mut t = setup.t0;
    let mut record = TrajectoryRecord::new(RecordMeta { model: "two_ball".into(), period: plate.period(), g });
    let mut last_speed = 0.0;

    let stopped_by = loop {
        if let Some(reason) = stop.reached(record.len(), t, last_speed) {
            break reason;
        }
        if alone {
            let hit = next_plate_hit(&hi.flight, plate, Direction::FromAbove, settings)?;
            let v_pre = hi.v(hit.t);
            let v_post = reflect_off_plate(v_pre, hit.plate_velocity);
            let z = plate.eval(hit.t, 0)?;
            hi.set_velocity(hit.t, z, v_pre, v_post);
            record.events.push(CollisionEvent::single(
                EventKind::PlateHit,
                hit.t,
                z,
                hit.plate_velocity,
                hi.label,
                v_pre,
                v_post,
            ));
            t = hit.t;
            last_speed = v_post.abs();
            continue;
        }

        let hit = next_plate_hit(&lo.flight, plate, Direction::FromAbove, settings)?;
        let gap = hi.z(t) - lo.z(t);
        let closing = lo.v(t) - hi.v(t);
        let t_bb = if closing > 0.0 { t + gap.max(0.0) / closing } else { f64::INFINITY };

        let window = 10.0 * settings.t_tol;
        let upper_gap = hi.z(hit.t) - plate.eval(hit.t, 0)?;
        let upper_arrives = t_bb >= hit.t - window
            && upper_gap.abs() <= window * (hi.v(hit.t) - hit.plate_velocity).abs();
        if (hit.t - t_bb).abs() <= window || upper_arrives {
            let te = hit.t.min(t_bb);
            record.events.push(CollisionEvent {
                kind: EventKind::Triple,
                time: te,
                z: plate.eval(te, 0)?,
                plate_velocity: Some(hit.plate_velocity),
                impacts: vec![
                    BodyImpact { body: lo.label, v_pre: lo.v(te), v_post: None },
                    BodyImpact { body: hi.label, v_pre: hi.v(te), v_post: None },
                ],
            });
            if lo.mass > 0.0 {
                record.outcome = Outcome::TripleCollision { t: te };
                break StopReason::Terminated;
            }
            record.outcome = Outcome::ZeroMassSingularity { t: te };
            alone = true;
            continue;
        }

        if hit.t < t_bb {
            let v_pre = lo.v(hit.t);
            let v_post = reflect_off_plate(v_pre, hit.plate_velocity);
            let z = plate.eval(hit.t, 0)?;
            lo.set_velocity(hit.t, z, v_pre, v_post);
            record.events.push(CollisionEvent::single(
                EventKind::PlateHit,
                hit.t,
                z,
                hit.plate_velocity,
                lo.label,
                v_pre,
                v_post,
            ));
            t = hit.t;
            last_speed = v_post.abs();
        } else {
            let (vl, vh) = (lo.v(t_bb), hi.v(t_bb));
            let z = lo.z(t_bb);
            let (l_post, h_post) = ball_ball_collide(lo.mass, vl, hi.mass, vh);
            lo.set_velocity(t_bb, z, vl, l_post);
            hi.set_velocity(t_bb, z, vh, h_post);
            let mut impacts = vec![
                BodyImpact { body: lo.label, v_pre: vl, v_post: Some(l_post) },
                BodyImpact { body: hi.label, v_pre: vh, v_post: Some(h_post) },
            ];
            impacts.sort_by_key(|i| i.body == Body::P2);
            record.events.push(CollisionEvent { kind: EventKind::BallBall, time: t_bb, z, plate_velocity: None, impacts });
            t = t_bb;
            last_speed = l_post.abs().max(h_post.abs());
        }
    };

    Ok(TwoBallRun { setup, plate: plate.clone(), g, record, stopped_by })
}

impl TwoBallRun {
    /// Heights of `(plate, lower, upper)` at `t`, reconstructed from the
    /// record by replaying free flight from the last event before `t`.
    pub fn heights_between(&self, i: usize, fraction: f64) -> Result<(f64, f64, f64)> {
        let events = &self.record.events;
        let (t_a, t_b) = (events[i].time, events[i + 1].time);
        let t = t_a + fraction * (t_b - t_a);
        let mut states = [None, None];
        for (k, body) in [Body::P1, Body::P2].into_iter().enumerate() {
            let last = events[..=i].iter().rev().find_map(|e| {
                e.impact(body).and_then(|imp| imp.v_post.map(|v| (e.time, e.z, v)))
            });
            let flight = match last {
                Some((te, z, v)) => FlightState { t: te, z, v, g: self.g },
                None => {
                    let b = self.setup.balls.iter().find(|b| b.label == body).expect("labelled ball");
                    FlightState { t: self.setup.t0, z: b.z, v: b.v, g: self.g }
                }
            };
            states[k] = Some(flight.position(t));
        }
        let (z1, z2) = (states[0].unwrap_or(f64::NAN), states[1].unwrap_or(f64::NAN));
        Ok((self.plate.eval(t, 0)?, z1.min(z2), z1.max(z2)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub plate_hits_compared: usize,
    pub count_mismatch: bool,
    pub max_time_deviation: f64,
    pub max_velocity_deviation: f64,
    pub exchanges_checked: usize,
    pub max_exchange_deviation: f64,
}

impl EquivalenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_time_deviation.max(self.max_velocity_deviation).max(self.max_exchange_deviation)
    }
}

/// Equal masses exchange velocities, so the unlabelled trajectories are two
/// independent one-ball trajectories. Compares the record against them.
pub fn equal_mass_equivalence_check(run: &TwoBallRun, settings: &RootSolveSettings) -> Result<EquivalenceReport> {
    let end = run.record.last_time().unwrap_or(run.setup.t0);
    let mut independent: Vec<(f64, f64)> = Vec::new();
    for ball in run.setup.balls {
        let start = FlightState { t: run.setup.t0, z: ball.z, v: ball.v, g: run.g };
        let stop = StopRule::time(end + 1e-9);
        for b in one_ball_run(start, &run.plate, &stop, settings)? {
            if b.t <= end + 1e-9 {
                independent.push((b.t, b.v_out));
            }
        }
    }
    independent.sort_by(|a, b| a.0.total_cmp(&b.0));
    let recorded: Vec<(f64, f64)> = run
        .record
        .events
        .iter()
        .filter(|e| e.kind == EventKind::PlateHit)
        .filter_map(|e| e.impacts[0].v_post.map(|v| (e.time, v)))
        .collect();

    let mut report = EquivalenceReport {
        plate_hits_compared: recorded.len().min(independent.len()),
        count_mismatch: recorded.len() != independent.len(),
        max_time_deviation: 0.0,
        max_velocity_deviation: 0.0,
        exchanges_checked: 0,
        max_exchange_deviation: 0.0,
    };
    for (r, i) in recorded.iter().zip(&independent) {
        report.max_time_deviation = report.max_time_deviation.max((r.0 - i.0).abs());
        report.max_velocity_deviation = report.max_velocity_deviation.max((r.1 - i.1).abs());
    }
    for e in run.record.events.iter().filter(|e| e.kind == EventKind::BallBall) {
        let (a, b) = (e.impacts[0], e.impacts[1]);
        let dev = (a.v_post.unwrap_or(f64::NAN) - b.v_pre).abs().max((b.v_post.unwrap_or(f64::NAN) - a.v_pre).abs());
        report.exchanges_checked += 1;
        report.max_exchange_deviation = report.max_exchange_deviation.max(dev);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismReport {
    pub checked: usize,
    pub violations: usize,
}

/// With massless P1 above massive P2: whenever P2 is faster than `c` at a
/// ball–ball event and the time since the previous one is below `c2`, P1
/// leaves faster than `c − max prior |v⁽¹⁾|`.
pub fn case1_mechanism_check(record: &TrajectoryRecord, c: f64, c2: f64) -> MechanismReport {
    let mut report = MechanismReport { checked: 0, violations: 0 };
    let mut max_v1: f64 = 0.0;
    let mut last_bb: Option<f64> = None;
    for e in &record.events {
        let Some(p1) = e.impact(Body::P1) else { continue };
        if e.kind == EventKind::BallBall {
            let v2 = e.impact(Body::P2).map_or(0.0, |i| i.v_pre.abs());
            let close = last_bb.is_none_or(|t| e.time - t < c2);
            max_v1 = max_v1.max(p1.v_pre.abs());
            if v2 > c && close {
                report.checked += 1;
                if !(p1.v_post.unwrap_or(f64::NAN).abs() > c - max_v1) {
                    report.violations += 1;
                }
            }
            last_bb = Some(e.time);
        }
        max_v1 = max_v1.max(p1.v_pre.abs());
        if let Some(v) = p1.v_post {
            max_v1 = max_v1.max(v.abs());
        }
    }
    report
}

/// Turns a periodic one-ball orbit into an upper plate: its flight arcs form
/// a parabolic-arc profile that touches the real plate at each landing.
///
/// `orbit` must hold the ball's plate impacts (at least two); the first
/// impact is the train origin and the period is found as the first later
/// impact with matching phase and speed.
pub fn restricted_case2_as_fermi_ulam(orbit: &TrajectoryRecord, plate: &ForcingProfile, g: f64) -> Result<PlatePair> {
    let hits: Vec<(f64, f64, f64)> = orbit
        .events
        .iter()
        .filter(|e| e.kind == EventKind::PlateHit)
        .filter_map(|e| e.impacts.first().and_then(|i| i.v_post.map(|v| (e.time, e.z, v))))
        .collect();
    if hits.len() < 2 {
        return Err(Error::NotPeriodic { mismatch: f64::INFINITY });
    }
    let base = plate.period();
    let (t0, z0, v0) = hits[0];
    let mut best = f64::INFINITY;
    let mut closing = None;
    for (j, &(t, z, v)) in hits.iter().enumerate().skip(1) {
        let cycles = ((t - t0) / base).round();
        let mismatch = (t - t0 - cycles * base).abs().max((z - z0).abs()).max((v - v0).abs());
        best = best.min(mismatch);
        if cycles >= 1.0 && mismatch <= 1e-9 {
            closing = Some((j, cycles * base));
            break;
        }
    }
    let Some((j, period)) = closing else { return Err(Error::NotPeriodic { mismatch: best }) };

    let mut arcs = Vec::with_capacity(j);
    for k in 0..j {
        let (t, z, v) = hits[k];
        let start = t - t0;
        let end = if k + 1 == j { period } else { hits[k + 1].0 - t0 };
        arcs.push(Arc { start, duration: end - start, z0: z, v0: v, g });
    }
    let last = arcs[j - 1];
    let upper = ForcingProfile::new(period, ProfileKind::ParabolicArcs { origin: t0, arcs })?;
    let t_star = t0 + period;
    let mismatch = upper.eval_left(t_star, 1)? - plate.eval(t_star, 1)?;
    let order = if mismatch.abs() > 1e-9 { 1 } else { 2 };
    let tangency = Tangency { t_star, order, eps: 0.5 * last.duration };
    PlatePair::new(plate.clone(), upper, Some(tangency))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> RootSolveSettings {
        RootSolveSettings::default()
    }

    fn sine(a: f64) -> ForcingProfile {
        ForcingProfile::sinusoid(1.0, a, 0.0, 0.0).unwrap()
    }

    #[test]
    fn symmetric_hop_on_flat_plate() {
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        let p = one_ball_map(PhasePoint::new(0.0, 1.0), &flat, 2.0, &settings()).unwrap();
        assert!((p.t - 1.0).abs() < 1e-11 && (p.v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn landing_on_a_rising_plate() {
        // Plate z = t − 1; from (0, −1) at v = 2 the ball meets it again at t = 1.
        let plate = ForcingProfile::polynomial(1.0, vec![-1.0, 1.0], (-1.0, 3.0)).unwrap();
        let p = one_ball_map(PhasePoint::new(0.0, 2.0), &plate, 2.0, &settings()).unwrap();
        assert!((p.t - 1.0).abs() < 1e-11);
        // v′ = g·1 − 2 + 2·ḟ
        assert!((p.v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn escape_without_gravity() {
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        assert_eq!(one_ball_map(PhasePoint::new(0.0, 1.0), &flat, 0.0, &settings()), Err(Error::NonReturn));
    }

    #[test]
    fn gamma2_pattern_for_large_amplitude() {
        let plate = sine(0.5);
        let spec = ResonantSpec::locate(Resonance::Gamma2, 3, &plate, 2.0).unwrap();
        let run = build_resonant(spec, &plate, 2.0, 5, &settings()).unwrap();
        let speeds: Vec<f64> = run.hops.iter().map(|h| h.v_out).collect();
        for (n, v) in speeds.iter().enumerate() {
            assert!((v - (5.0 + 2.0 * n as f64)).abs() < 1e-8);
        }
        for (n, h) in run.hops.iter().enumerate() {
            assert!((h.duration - (3.0 + 2.0 * n as f64)).abs() < 1e-8);
        }
        assert!(run.hop_jacobian_trace.abs() > 2.0);
    }

    #[test]
    fn gamma1_is_periodic() {
        let plate = sine(0.5);
        let spec = ResonantSpec::locate(Resonance::Gamma1, 3, &plate, 2.0).unwrap();
        let run = build_resonant(spec, &plate, 2.0, 20, &settings()).unwrap();
        assert!(run.hops.iter().all(|h| (h.v_out - 3.0).abs() < 1e-8 && (h.duration - 3.0).abs() < 1e-8));
    }

    #[test]
    fn gamma2_needs_class_membership() {
        let err = ResonantSpec::locate(Resonance::Gamma2, 3, &sine(0.1), 2.0);
        assert!(matches!(err, Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn small_m2_breaks_resonance() {
        let plate = sine(0.5);
        let spec = ResonantSpec::locate(Resonance::Gamma2, 1, &plate, 2.0).unwrap();
        assert!(matches!(build_resonant(spec, &plate, 2.0, 3, &settings()), Err(Error::ResonanceBroken { .. })));
    }

    #[test]
    fn relative_flight_closes_in_half_a_second() {
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        let setup = TwoBallSetup {
            t0: 0.0,
            balls: [
                BallState { label: Body::P1, mass: 1.0, z: 1.0, v: 3.0 },
                BallState { label: Body::P2, mass: 1.0, z: 2.0, v: 1.0 },
            ],
        };
        let run = two_ball_simulate(setup, &flat, 5.0, &StopRule::events(1), &settings()).unwrap();
        let e = &run.record.events[0];
        assert_eq!(e.kind, EventKind::BallBall);
        assert!((e.time - 0.5).abs() < 1e-15);
        assert_eq!(e.impact(Body::P1).unwrap().v_post, Some(e.impact(Body::P2).unwrap().v_pre));
    }

    #[test]
    fn massless_upper_ball_leaves_lower_untouched() {
        let plate = sine(0.1);
        let setup = TwoBallSetup {
            t0: 0.0,
            balls: [
                BallState { label: Body::P2, mass: 1.0, z: 0.0, v: 4.0 },
                BallState { label: Body::P1, mass: 0.0, z: 1.5, v: 0.5 },
            ],
        };
        let stop = StopRule::time(60.0);
        let run = two_ball_simulate(setup, &plate, 2.0, &stop, &settings()).unwrap();
        let alone = one_ball_run(FlightState { t: 0.0, z: 0.0, v: 4.0, g: 2.0 }, &plate, &stop, &settings()).unwrap();
        let p2_hits: Vec<_> = run.record.events_of(Body::P2).filter(|e| e.kind == EventKind::PlateHit).collect();
        assert!(run.record.events.iter().any(|e| e.kind == EventKind::BallBall));
        assert!(p2_hits.len() >= 10);
        for (e, b) in p2_hits.iter().zip(&alone) {
            assert_eq!(e.time.to_bits(), b.t.to_bits());
            assert_eq!(e.impacts[0].v_post.unwrap().to_bits(), b.v_out.to_bits());
        }
        let report = case1_mechanism_check(&run.record, 1.0, 10.0);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn massive_triple_collision_stops_the_run() {
        // Both balls dropped together onto a flat plate meet it at once.
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        let setup = TwoBallSetup {
            t0: 0.0,
            balls: [
                BallState { label: Body::P1, mass: 1.0, z: 1.0, v: 0.0 },
                BallState { label: Body::P2, mass: 2.0, z: 1.0, v: 0.0 },
            ],
        };
        let run = two_ball_simulate(setup, &flat, 2.0, &StopRule::events(10), &settings()).unwrap();
        assert!(matches!(run.record.outcome, Outcome::TripleCollision { .. }));
        assert_eq!(run.record.events.last().unwrap().kind, EventKind::Triple);
    }

    #[test]
    fn invalid_setups_are_rejected() {
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        let both_zero = TwoBallSetup {
            t0: 0.0,
            balls: [
                BallState { label: Body::P1, mass: 0.0, z: 1.0, v: 0.0 },
                BallState { label: Body::P2, mass: 0.0, z: 2.0, v: 0.0 },
            ],
        };
        let stop = StopRule::events(5);
        assert!(matches!(two_ball_simulate(both_zero, &flat, 2.0, &stop, &settings()), Err(Error::InvalidBalls(_))));
        let mut below = both_zero;
        below.balls[0].mass = 1.0;
        below.balls[0].z = -0.5;
        assert!(matches!(two_ball_simulate(below, &flat, 2.0, &stop, &settings()), Err(Error::InvalidBalls(_))));
    }

    #[test]
    fn gamma1_orbit_becomes_an_upper_plate() {
        let plate = sine(0.5);
        let spec = ResonantSpec::locate(Resonance::Gamma1, 3, &plate, 2.0).unwrap();
        let run = build_resonant(spec, &plate, 2.0, 3, &settings()).unwrap();
        let pair = restricted_case2_as_fermi_ulam(&run.record, &plate, 2.0).unwrap();
        let tan = pair.tangency().unwrap();
        assert_eq!(tan.order, 1);
        assert!((pair.upper().period() - 3.0).abs() < 1e-12);
        // Touches at the landing, strictly apart in between.
        assert!(pair.gap(tan.t_star).unwrap().abs() < 1e-9);
        for i in 1..300 {
            let t = tan.t_star - 3.0 * i as f64 / 300.0;
            assert!(pair.gap(t).unwrap() > 0.0);
        }
        // Landing speed 3 against a resting plate: gain 2·(0 − (−3)).
        assert!((pair.contact_gain().unwrap() - 6.0).abs() < 1e-8);
    }

    #[test]
    fn aperiodic_orbit_is_rejected() {
        let plate = sine(0.5);
        let spec = ResonantSpec::locate(Resonance::Gamma2, 3, &plate, 2.0).unwrap();
        let run = build_resonant(spec, &plate, 2.0, 3, &settings()).unwrap();
        assert!(matches!(restricted_case2_as_fermi_ulam(&run.record, &plate, 2.0), Err(Error::NotPeriodic { .. })));
    }
}
