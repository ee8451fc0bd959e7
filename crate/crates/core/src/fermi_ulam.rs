//! The two-plate collision map `A: (t, v) ↦ (t′, v′)` between successive
//! lower-plate impacts, its four-factor form, the `(t, y = 2l/v)` chart,
//! the loop-integral invariant, and runs toward a plate contact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forcing::PlatePair;
use crate::record::{Body, CollisionEvent, EventKind, Outcome, RecordMeta, StopReason, StopRule, TrajectoryRecord};
use crate::solver::{first_impact, reflect_off_plate, Direction, FlightState, RootSolveSettings, Surface};

/// Outgoing state at a lower-plate impact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub t: f64,
    pub v: f64,
}

impl PhasePoint {
    pub fn new(t: f64, v: f64) -> Self {
        Self { t, v }
    }
}

/// The intermediate upper-plate impact `(t̃, ṽ)`; `ṽ` is the post-impact
/// velocity and is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MidHit {
    pub t: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapStep {
    pub next: PhasePoint,
    pub mid: MidHit,
}

/// One application of the collision map.
pub fn map_a(p: PhasePoint, plates: &PlatePair, g: f64, settings: &RootSolveSettings) -> Result<MapStep> {
    if !(p.v > 0.0) {
        return Err(Error::BelowValidityThreshold { t: p.t, v: p.v });
    }
    let lower = plates.lower();
    let upper = plates.upper();
    let rise = FlightState { t: p.t, z: lower.eval(p.t, 0)?, v: p.v, g };
    let up = first_impact(
        &rise,
        &[Surface::new(upper, Direction::FromBelow), Surface::new(lower, Direction::FromAbove)],
        settings,
    )
    .map_err(|e| match e {
        Error::NoImpact { .. } => Error::BelowValidityThreshold { t: p.t, v: p.v },
        other => other,
    })?;
    if up.surface == 1 {
        return Err(Error::BelowValidityThreshold { t: p.t, v: p.v });
    }
    let t_mid = up.hit.t;
    let v_mid = reflect_off_plate(rise.velocity(t_mid), up.hit.plate_velocity);

    let fall = FlightState { t: t_mid, z: upper.eval(t_mid, 0)?, v: v_mid, g };
    let down = first_impact(
        &fall,
        &[Surface::new(lower, Direction::FromAbove), Surface::new(upper, Direction::FromBelow)],
        settings,
    )?;
    if down.surface == 1 {
        return Err(Error::AlternationBroken { t: down.hit.t });
    }
    let t_next = down.hit.t;
    let v_next = reflect_off_plate(fall.velocity(t_next), down.hit.plate_velocity);
    Ok(MapStep { next: PhasePoint::new(t_next, v_next), mid: MidHit { t: t_mid, v: v_mid } })
}

/// Residuals of the four implicit equations defining the map.
pub fn residuals(p: PhasePoint, step: &MapStep, plates: &PlatePair, g: f64) -> Result<[f64; 4]> {
    let (f1, f2) = (plates.lower(), plates.upper());
    let (t, v) = (p.t, p.v);
    let (tm, vm) = (step.mid.t, step.mid.v);
    let (tn, vn) = (step.next.t, step.next.v);
    let d1 = tm - t;
    let d2 = tn - tm;
    Ok([
        f2.eval(tm, 0)? - f1.eval(t, 0)? - (v * d1 - 0.5 * g * d1 * d1),
        vm - (-v + g * d1 + 2.0 * f2.eval(tm, 1)?),
        f2.eval(tm, 0)? - f1.eval(tn, 0)? - (-vm * d2 + 0.5 * g * d2 * d2),
        vn - (v + g * (tn - 2.0 * tm + t) + 2.0 * f1.eval(tn, 1)? - 2.0 * f2.eval(tm, 1)?),
    ])
}

const FIXED_POINT_ITERS: usize = 500;

/// Flight duration: the first `Δ > 0` with `w·Δ − g·Δ²/2 = H(Δ)`, where `H`
/// is the height of the target plate relative to the launch point. Uses
/// fixed-point iteration on the closed-form root `2H/(w ± sqrt(w² − 2gH))`,
/// then Newton polishing. `h` returns `(H(Δ), H′(Δ))`.
fn closed_form_flight(w: f64, g: f64, t: f64, h: impl Fn(f64) -> Result<(f64, f64)>) -> Result<f64> {
    let below = Error::BelowValidityThreshold { t, v: w };
    let root = |hh: f64| -> Option<f64> {
        let disc = w * w - 2.0 * g * hh;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        Some(if w >= 0.0 { 2.0 * hh / (w + s) } else { 2.0 * hh / (w - s) })
    };
    let (h0, _) = h(0.0)?;
    let mut delta = root(h0).ok_or(below.clone())?;
    let mut converged = false;
    for _ in 0..FIXED_POINT_ITERS {
        let (hh, _) = h(delta)?;
        let next = root(hh).ok_or(below.clone())?;
        let change = (next - delta).abs();
        delta = next;
        if change <= 1e-15 * delta.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged || !(delta > 0.0) {
        return Err(Error::NoConvergence { t });
    }
    for _ in 0..3 {
        let (hh, hp) = h(delta)?;
        let f = w * delta - 0.5 * g * delta * delta - hh;
        let fp = w - g * delta - hp;
        if fp == 0.0 {
            break;
        }
        delta -= f / fp;
    }
    Ok(delta)
}

/// Rise from the lower plate to the upper one: `(t, v) ↦ (t̃, v − gΔ)`.
pub fn factor_rise(p: PhasePoint, plates: &PlatePair, g: f64) -> Result<PhasePoint> {
    let z0 = plates.lower().eval(p.t, 0)?;
    let upper = plates.upper();
    let delta = closed_form_flight(p.v, g, p.t, |dl| {
        Ok((upper.eval(p.t + dl, 0)? - z0, upper.eval(p.t + dl, 1)?))
    })?;
    Ok(PhasePoint::new(p.t + delta, p.v - g * delta))
}

/// Reflection off the upper plate.
pub fn factor_reflect_upper(p: PhasePoint, plates: &PlatePair) -> Result<PhasePoint> {
    Ok(PhasePoint::new(p.t, reflect_off_plate(p.v, plates.upper().eval(p.t, 1)?)))
}

/// Fall from the upper plate to the lower one: `(t̃, ṽ) ↦ (t′, ṽ − gΔ)`.
pub fn factor_fall(p: PhasePoint, plates: &PlatePair, g: f64) -> Result<PhasePoint> {
    let z0 = plates.upper().eval(p.t, 0)?;
    let lower = plates.lower();
    let delta = closed_form_flight(p.v, g, p.t, |dl| {
        Ok((lower.eval(p.t + dl, 0)? - z0, lower.eval(p.t + dl, 1)?))
    })?;
    Ok(PhasePoint::new(p.t + delta, p.v - g * delta))
}

/// Reflection off the lower plate.
pub fn factor_reflect_lower(p: PhasePoint, plates: &PlatePair) -> Result<PhasePoint> {
    Ok(PhasePoint::new(p.t, reflect_off_plate(p.v, plates.lower().eval(p.t, 1)?)))
}

/// The collision map as the composition of its four factors. Flight times
/// come from closed-form fixed-point iteration rather than the marching
/// kernel, so this is an independent route to the same map.
pub fn map_a_factored(p: PhasePoint, plates: &PlatePair, g: f64) -> Result<MapStep> {
    if !(p.v > 0.0) {
        return Err(Error::BelowValidityThreshold { t: p.t, v: p.v });
    }
    let a1 = factor_rise(p, plates, g)?;
    let a2 = factor_reflect_upper(a1, plates)?;
    let a3 = factor_fall(a2, plates, g)?;
    let a4 = factor_reflect_lower(a3, plates)?;
    Ok(MapStep { next: a4, mid: MidHit { t: a2.t, v: a2.v } })
}

/// A point in the `(t, y)` chart with `y = 2l/v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedPoint {
    pub t: f64,
    pub y: f64,
    pub l: f64,
}

impl TransformedPoint {
    pub fn to_phase(&self) -> PhasePoint {
        PhasePoint::new(self.t, 2.0 * self.l / self.y)
    }
}

/// Checks that `l` exceeds the largest plate separation.
pub fn validate_scale(l: f64, plates: &PlatePair) -> Result<f64> {
    let sup = plates.sup_separation();
    if !(l > sup) {
        return Err(Error::InvalidScale { l, sup });
    }
    Ok(l)
}

pub fn transform_u(p: PhasePoint, l: f64, plates: &PlatePair) -> Result<TransformedPoint> {
    validate_scale(l, plates)?;
    if !(p.v > 0.0) {
        return Err(Error::BelowValidityThreshold { t: p.t, v: p.v });
    }
    Ok(TransformedPoint { t: p.t, y: 2.0 * l / p.v, l })
}

/// Remainders of the chart map: `t′ = t + y + ψ` and `y′ = y + φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartRemainders {
    pub psi: f64,
    pub phi: f64,
}

/// The collision map read in the `(t, y)` chart. The scale is not
/// re-validated here; [`transform_u`] owns that check.
pub fn map_a_prime(
    q: TransformedPoint,
    plates: &PlatePair,
    g: f64,
    settings: &RootSolveSettings,
) -> Result<(TransformedPoint, ChartRemainders)> {
    let step = map_a(q.to_phase(), plates, g, settings)?;
    let y_next = 2.0 * q.l / step.next.v;
    let image = TransformedPoint { t: step.next.t, y: y_next, l: q.l };
    Ok((image, ChartRemainders { psi: step.next.t - q.t - q.y, phi: y_next - q.y }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub c0_hat: f64,
    pub c1_hat: f64,
    pub c0_below_one: bool,
}

/// Sampled bounds `|φ| ≤ c₁·y²` and `|ψ|, |∂ψ/∂y| ≤ c₀·y` over
/// `t ∈ [0, T)`, `0 < y ≤ r`, on a `samples × samples` grid.
pub fn estimate_constants(
    plates: &PlatePair,
    g: f64,
    l: f64,
    r: f64,
    samples: usize,
    settings: &RootSolveSettings,
) -> Result<ConstantEstimate> {
    validate_scale(l, plates)?;
    if !(r > 0.0) || samples < 2 {
        return Err(Error::RegionTooLarge(format!("need r > 0 and at least 2 samples (r = {r}, samples = {samples})")));
    }
    let period = plates.period();
    let eval = |t: f64, y: f64| -> Result<ChartRemainders> {
        map_a_prime(TransformedPoint { t, y, l }, plates, g, settings)
            .map(|(_, rem)| rem)
            .map_err(|e| Error::RegionTooLarge(format!("map failed at t = {t}, y = {y}: {e}")))
    };
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for i in 0..samples {
        let t = period * i as f64 / samples as f64;
        for j in 1..=samples {
            let y = r * j as f64 / samples as f64;
            let rem = eval(t, y)?;
            c1 = c1.max(rem.phi.abs() / (y * y));
            let h = 1e-3 * y;
            let dpsi = (eval(t, y + h)?.psi - eval(t, y - h)?.psi) / (2.0 * h);
            c0 = c0.max(rem.psi.abs() / y).max(dpsi.abs());
        }
    }
    Ok(ConstantEstimate { c0_hat: c0, c1_hat: c1, c0_below_one: c0 < 1.0 })
}

/// A closed loop in the section, sampled at a uniform parameter `s = i/N`.
/// Times increase strictly and wrap once around the period:
/// sample `N` would be sample `0` shifted by `period`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopCurve {
    points: Vec<PhasePoint>,
    period: f64,
}

pub const MIN_LOOP_SAMPLES: usize = 256;

impl LoopCurve {
    pub fn new(points: Vec<PhasePoint>, period: f64) -> Result<Self> {
        let n = points.len();
        if n < MIN_LOOP_SAMPLES || !n.is_multiple_of(4) {
            return Err(Error::CurveInvalid(format!("need a multiple of 4 and at least {MIN_LOOP_SAMPLES} samples, got {n}")));
        }
        if !(period > 0.0) {
            return Err(Error::CurveInvalid(format!("period must be positive, got {period}")));
        }
        if let Some(p) = points.iter().find(|p| !(p.v > 0.0) || !p.t.is_finite()) {
            return Err(Error::CurveInvalid(format!("invalid sample (t = {}, v = {})", p.t, p.v)));
        }
        if points.windows(2).any(|w| w[1].t <= w[0].t) || points[n - 1].t >= points[0].t + period {
            return Err(Error::CurveInvalid("times must increase strictly within one period".into()));
        }
        Ok(Self { points, period })
    }

    /// Loop `t ↦ (t, v(t))` sampled uniformly over `[t0, t0 + period)`.
    pub fn graph(period: f64, t0: f64, samples: usize, v: impl Fn(f64) -> f64) -> Result<Self> {
        let points = (0..samples)
            .map(|i| {
                let t = t0 + period * i as f64 / samples as f64;
                PhasePoint::new(t, v(t))
            })
            .collect();
        Self::new(points, period)
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Image of the loop under the collision map, keeping the parameter.
    pub fn mapped(&self, plates: &PlatePair, g: f64, settings: &RootSolveSettings) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|&p| map_a(p, plates, g, settings).map(|s| s.next))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, self.period)
    }
}

// Eighth-order central difference weights for offsets 1..=4.
const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Periodic Simpson estimate over every `stride`-th sample.
fn loop_quadrature(curve: &LoopCurve, integrand: &[f64], stride: usize) -> f64 {
    let pts = &curve.points;
    let n = pts.len() / stride;
    let h = 1.0 / n as f64;
    // Periodic part of t(s): u_i = t_i − P·i/n.
    let u = |i: isize| -> f64 {
        let idx = i.rem_euclid(n as isize) as usize;
        pts[idx * stride].t - curve.period * idx as f64 / n as f64
    };
    let mut sum = 0.0;
    for i in 0..n {
        let ii = i as isize;
        let du: f64 = FD8
            .iter()
            .enumerate()
            .map(|(k, c)| c * (u(ii + k as isize + 1) - u(ii - k as isize - 1)))
            .sum::<f64>()
            / h;
        let weight = if i % 2 == 0 { 2.0 } else { 4.0 };
        sum += weight * integrand[i * stride] * (curve.period + du);
    }
    sum * h / 3.0
}

/// `∮ (v²/2 + g·f₁(t) − v·ḟ₁(t)) dt` over the loop.
pub fn poincare_cartan_integral(curve: &LoopCurve, plates: &PlatePair, g: f64) -> Result<f64> {
    let lower = plates.lower();
    let integrand = curve
        .points
        .iter()
        .map(|p| Ok(0.5 * p.v * p.v + g * lower.eval(p.t, 0)? - p.v * lower.eval(p.t, 1)?))
        .collect::<Result<Vec<f64>>>()?;
    let fine = loop_quadrature(curve, &integrand, 1);
    let coarse = loop_quadrature(curve, &integrand, 2);
    if (fine - coarse).abs() > 1e-8 * fine.abs() {
        return Err(Error::CurveInvalid(format!(
            "quadrature not converged: {fine} vs {coarse} at half resolution"
        )));
    }
    Ok(fine)
}

/// A run of the collision map: section points and the upper impacts between
/// them (`mids[i]` lies between `points[i]` and `points[i + 1]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub points: Vec<PhasePoint>,
    pub mids: Vec<MidHit>,
    pub stopped_by: StopReason,
}

impl Orbit {
    pub fn to_record(&self, plates: &PlatePair, meta: RecordMeta) -> Result<TrajectoryRecord> {
        section_record(&self.points, &self.mids, plates, meta)
    }
}

/// Iterates the collision map until `stop`; `n_events` counts map steps.
pub fn orbit(
    plates: &PlatePair,
    g: f64,
    start: PhasePoint,
    stop: &StopRule,
    settings: &RootSolveSettings,
) -> Result<Orbit> {
    if !stop.is_set() {
        return Err(Error::InvalidSettings("run needs a stop rule".into()));
    }
    let mut points = vec![start];
    let mut mids = Vec::new();
    let mut p = start;
    let stopped_by = loop {
        if let Some(reason) = stop.reached(mids.len(), p.t, p.v) {
            break reason;
        }
        let step = map_a(p, plates, g, settings)?;
        mids.push(step.mid);
        points.push(step.next);
        p = step.next;
    };
    Ok(Orbit { points, mids, stopped_by })
}

fn section_record(points: &[PhasePoint], mids: &[MidHit], plates: &PlatePair, meta: RecordMeta) -> Result<TrajectoryRecord> {
    let mut record = TrajectoryRecord::new(meta);
    for (mid, next) in mids.iter().zip(&points[1..]) {
        let w_up = plates.upper().eval(mid.t, 1)?;
        record.events.push(CollisionEvent::single(
            EventKind::UpperPlateHit,
            mid.t,
            plates.upper().eval(mid.t, 0)?,
            w_up,
            Body::Ball,
            2.0 * w_up - mid.v,
            mid.v,
        ));
        let w_low = plates.lower().eval(next.t, 1)?;
        record.events.push(CollisionEvent::single(
            EventKind::PlateHit,
            next.t,
            plates.lower().eval(next.t, 0)?,
            w_low,
            Body::Ball,
            2.0 * w_low - next.v,
            next.v,
        ));
    }
    Ok(record)
}

/// Least-squares fit of velocity increments against the leading-order
/// model `2·(f₁^{(k)} − f₂^{(k)})(t*)·(tₙ − t*)^{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Fitted coefficient of the model; 1 means exact agreement.
    pub slope: f64,
    pub events_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularOptions {
    pub stop: StopRule,
    /// Lower speed bound the start must exceed.
    pub min_speed: f64,
    pub fit_window: usize,
}

impl Default for SingularOptions {
    fn default() -> Self {
        Self { stop: StopRule::events(1000), min_speed: 0.0, fit_window: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularRun {
    pub points: Vec<PhasePoint>,
    pub mids: Vec<MidHit>,
    pub stopped_by: StopReason,
    pub fit: GrowthFit,
    /// Predicted per-round-trip gain `2·(f₁^{(k)} − f₂^{(k)})(t*)`.
    pub contact_gain: f64,
    /// Whether `f₁^{(k)}(t*) < f₂^{(k)}(t*)`, as opposed to the sign that
    /// gap positivity before the contact implies for odd `k`.
    pub lower_derivative_below_upper: bool,
    /// Smallest `v − gΔ/2` over rises and `−ṽ + gΔ′/2` over falls.
    pub min_flight_factor: f64,
    pub monotone: bool,
}

impl SingularRun {
    /// Lower- and upper-plate impacts; each map step is two collisions.
    pub fn collisions(&self) -> usize {
        self.points.len() - 1 + self.mids.len()
    }

    pub fn increments(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].v - w[0].v).collect()
    }

    pub fn to_record(&self, plates: &PlatePair, meta: RecordMeta) -> Result<TrajectoryRecord> {
        let mut record = section_record(&self.points, &self.mids, plates, meta)?;
        if self.stopped_by == StopReason::Terminated {
            let t = self.points.last().map_or(f64::NAN, |p| p.t);
            record.outcome = Outcome::ContactReached { t };
        }
        Ok(record)
    }
}

/// Iterates the collision map from `start` toward the plates' declared
/// contact at `t*`, where the ball is squeezed and accelerates.
pub fn singular_run(
    plates: &PlatePair,
    g: f64,
    start: PhasePoint,
    options: &SingularOptions,
    settings: &RootSolveSettings,
) -> Result<SingularRun> {
    let tan = *plates
        .tangency()
        .ok_or_else(|| Error::InvalidPlates("singular runs need a declared contact".into()))?;
    if !(start.t > tan.t_star - tan.eps && start.t < tan.t_star) {
        return Err(Error::InvalidPlates(format!(
            "start time {} outside the contact window ({}, {})",
            start.t,
            tan.t_star - tan.eps,
            tan.t_star
        )));
    }
    if !(start.v > options.min_speed) {
        return Err(Error::AlternationBroken { t: start.t });
    }
    if !options.stop.is_set() {
        return Err(Error::InvalidSettings("singular run needs a stop rule".into()));
    }
    let k = usize::from(tan.order);
    let d_low = plates.lower().eval_left(tan.t_star, k)?;
    let d_up = plates.upper().eval_left(tan.t_star, k)?;
    let contact_gain = 2.0 * (d_low - d_up);

    let mut points = vec![start];
    let mut mids = Vec::new();
    let mut min_factor = f64::INFINITY;
    let mut p = start;
    let stopped_by = loop {
        if let Some(reason) = options.stop.reached(mids.len(), p.t, p.v) {
            break reason;
        }
        let step = match map_a(p, plates, g, settings) {
            Ok(step) => step,
            Err(Error::BelowValidityThreshold { t, .. }) if mids.is_empty() => {
                return Err(Error::AlternationBroken { t });
            }
            Err(e) if mids.is_empty() => return Err(e),
            // Past the first steps, failures come from collision times
            // clustering below solver resolution at the contact.
            Err(_) => break StopReason::Terminated,
        };
        if step.next.t >= tan.t_star {
            break StopReason::Terminated;
        }
        min_factor = min_factor
            .min(p.v - 0.5 * g * (step.mid.t - p.t))
            .min(-step.mid.v + 0.5 * g * (step.next.t - step.mid.t));
        mids.push(step.mid);
        points.push(step.next);
        p = step.next;
    };

    let fit = growth_fit(&points, tan.t_star, k, contact_gain, 100.0 * settings.t_tol, options.fit_window);
    let monotone = points.windows(2).all(|w| w[1].v >= w[0].v);
    Ok(SingularRun {
        points,
        mids,
        stopped_by,
        fit,
        contact_gain,
        lower_derivative_below_upper: d_low < d_up,
        min_flight_factor: min_factor,
        monotone,
    })
}

fn growth_fit(points: &[PhasePoint], t_star: f64, k: usize, gain: f64, guard: f64, window: usize) -> GrowthFit {
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut used = 0;
    for w in points.windows(2).filter(|w| (w[0].t - t_star).abs() > guard).take(window) {
        let x = gain * (w[0].t - t_star).powi(k as i32 - 1);
        let y = w[1].v - w[0].v;
        sxy += x * y;
        sxx += x * x;
        used += 1;
    }
    GrowthFit { slope: if sxx > 0.0 { sxy / sxx } else { f64::NAN }, events_used: used }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::{ForcingProfile, Tangency};
    use proptest::prelude::*;

    fn static_pair() -> PlatePair {
        PlatePair::new(
            ForcingProfile::constant(1.0, 0.0).unwrap(),
            ForcingProfile::constant(1.0, 1.0).unwrap(),
            None,
        )
        .unwrap()
    }

    fn wavy_pair() -> PlatePair {
        PlatePair::new(
            ForcingProfile::constant(1.0, 0.0).unwrap(),
            ForcingProfile::sinusoid(1.0, 0.1, 0.0, 1.0).unwrap(),
            None,
        )
        .unwrap()
    }

    fn linear_contact() -> PlatePair {
        PlatePair::new(
            ForcingProfile::constant(1.0, 0.0).unwrap(),
            ForcingProfile::polynomial(1.0, vec![0.0, -1.0], (-2.0, 1.0)).unwrap(),
            Some(Tangency { t_star: 0.0, order: 1, eps: 1.5 }),
        )
        .unwrap()
    }

    fn quadratic_contact() -> PlatePair {
        PlatePair::new(
            ForcingProfile::constant(1.0, 0.0).unwrap(),
            ForcingProfile::polynomial(1.0, vec![0.0, 0.0, 1.0], (-2.0, 1.0)).unwrap(),
            Some(Tangency { t_star: 0.0, order: 2, eps: 1.5 }),
        )
        .unwrap()
    }

    fn settings() -> RootSolveSettings {
        RootSolveSettings::default()
    }

    #[test]
    fn static_plates_with_gravity() {
        let step = map_a(PhasePoint::new(0.0, 3.0), &static_pair(), 2.0, &settings()).unwrap();
        let s5 = 5f64.sqrt();
        assert!((step.mid.t - (3.0 - s5) / 2.0).abs() < 1e-11);
        assert!((step.mid.v + s5).abs() < 1e-10);
        assert!((step.next.t - (3.0 - s5)).abs() < 1e-11);
        assert!((step.next.v - 3.0).abs() < 1e-10);
    }

    #[test]
    fn static_plates_without_gravity() {
        let step = map_a(PhasePoint::new(0.0, 2.0), &static_pair(), 0.0, &settings()).unwrap();
        assert!((step.next.t - 1.0).abs() < 1e-12 && (step.next.v - 2.0).abs() < 1e-12);
        assert!((step.mid.t - 0.5).abs() < 1e-12 && (step.mid.v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn slow_ball_is_below_threshold() {
        let err = map_a(PhasePoint::new(0.0, 1.0), &static_pair(), 2.0, &settings());
        assert!(matches!(err, Err(Error::BelowValidityThreshold { .. })));
    }

    #[test]
    fn wavy_plate_residuals() {
        let p = PhasePoint::new(0.0, 3.0);
        let step = map_a(p, &wavy_pair(), 2.0, &settings()).unwrap();
        for r in residuals(p, &step, &wavy_pair(), 2.0).unwrap() {
            assert!(r.abs() < 1e-9, "{r}");
        }
        assert!(p.t < step.mid.t && step.mid.t < step.next.t);
        assert!(step.mid.v < 0.0 && step.next.v > 0.0);
    }

    #[test]
    fn factors_match_closed_form() {
        let plates = static_pair();
        let a1 = factor_rise(PhasePoint::new(0.0, 3.0), &plates, 2.0).unwrap();
        assert!((a1.v - 5f64.sqrt()).abs() < 1e-12);
        let a2 = factor_reflect_upper(a1, &plates).unwrap();
        assert!((a2.v + 5f64.sqrt()).abs() < 1e-12);
        let step = map_a_factored(PhasePoint::new(0.0, 3.0), &plates, 2.0).unwrap();
        assert!((step.next.t - (3.0 - 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn chart_examples() {
        let plates = static_pair();
        let q = transform_u(PhasePoint::new(0.0, 4.0), 2.0, &plates).unwrap();
        assert_eq!(q.y, 1.0);
        assert!(matches!(transform_u(PhasePoint::new(0.0, 4.0), 0.5, &plates), Err(Error::InvalidScale { .. })));

        let q = TransformedPoint { t: 0.0, y: 0.002, l: 2.0 };
        let (_, rem) = map_a_prime(q, &plates, 0.0, &settings()).unwrap();
        assert!((rem.psi + 0.001).abs() < 1e-12);
        assert_eq!(rem.phi, 0.0);
        let q = TransformedPoint { t: 0.0, y: 0.001, l: 1.0 };
        let (_, rem) = map_a_prime(q, &plates, 0.0, &settings()).unwrap();
        assert!(rem.psi.abs() < 1e-12);
    }

    #[test]
    fn constants_for_static_plates() {
        let est = estimate_constants(&static_pair(), 0.0, 2.0, 0.01, 8, &settings()).unwrap();
        assert!(est.c1_hat < 1e-9);
        assert!((est.c0_hat - 0.5).abs() < 1e-6);
        assert!(est.c0_below_one);
    }

    #[test]
    fn loop_integral_of_constant_loops() {
        let plates = static_pair();
        let curve = LoopCurve::graph(1.0, 0.0, 256, |_| 7.0).unwrap();
        let i = poincare_cartan_integral(&curve, &plates, 3.0).unwrap();
        assert!((i - 24.5).abs() < 1e-10);

        let wavy_lower = PlatePair::new(
            ForcingProfile::sinusoid(1.0, 0.1, 0.0, 0.0).unwrap(),
            ForcingProfile::constant(1.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let i = poincare_cartan_integral(&curve, &wavy_lower, 2.0).unwrap();
        assert!((i - 24.5).abs() < 1e-10, "{i}");
    }

    #[test]
    fn loop_rejects_non_monotone_times() {
        let mut pts: Vec<_> = (0..256).map(|i| PhasePoint::new(i as f64 / 256.0, 5.0)).collect();
        pts.swap(3, 4);
        assert!(matches!(LoopCurve::new(pts, 1.0), Err(Error::CurveInvalid(_))));
    }

    #[test]
    fn linear_contact_gains_two_per_round_trip() {
        let opts = SingularOptions { stop: StopRule::events(2000), ..Default::default() };
        let run = singular_run(&linear_contact(), 0.0, PhasePoint::new(-1.0, 10.0), &opts, &settings()).unwrap();
        for (n, d) in run.increments().iter().enumerate() {
            assert!((d - 2.0).abs() < 1e-8, "increment {n}: {d}");
        }
        // Start (−1, 10) gives t_n = −5/(5 + n).
        for (n, p) in run.points.iter().enumerate().step_by(97) {
            let expected = -5.0 / (5.0 + n as f64);
            assert!((p.t - expected).abs() < 1e-12 * (1.0 + n as f64), "{n}: {} vs {expected}", p.t);
        }
        // Durations so far plus the closed-form remainder recover t* − t₀.
        let n = run.points.len() - 1;
        let elapsed: f64 = run.points.windows(2).map(|w| w[1].t - w[0].t).sum();
        let remaining = 5.0 / (5.0 + n as f64);
        assert!((elapsed + remaining - 1.0).abs() < 1e-8);
        assert_eq!(run.contact_gain, 2.0);
        assert!(!run.lower_derivative_below_upper);
        assert!(run.monotone);
        assert!((run.fit.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_contact_follows_leading_term() {
        let opts = SingularOptions { stop: StopRule::events(200), ..Default::default() };
        let run = singular_run(&quadratic_contact(), 0.0, PhasePoint::new(-0.5, 20.0), &opts, &settings()).unwrap();
        assert_eq!(run.contact_gain, -4.0);
        assert!(run.lower_derivative_below_upper);
        assert!((run.fit.slope - 1.0).abs() < 0.1, "{:?}", run.fit);
        assert!(run.points.windows(2).all(|w| w[1].v > w[0].v));
    }

    #[test]
    fn singular_start_outside_window_is_rejected() {
        let opts = SingularOptions::default();
        let err = singular_run(&linear_contact(), 0.0, PhasePoint::new(0.5, 10.0), &opts, &settings());
        assert!(matches!(err, Err(Error::InvalidPlates(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn factored_route_agrees(t in 0.0f64..1.0, v in 4.0f64..20.0, g in 0.0f64..3.0) {
            let plates = wavy_pair();
            let p = PhasePoint::new(t, v);
            let a = map_a(p, &plates, g, &settings()).unwrap();
            let b = map_a_factored(p, &plates, g).unwrap();
            prop_assert!((a.next.t - b.next.t).abs() < 10.0 * settings().t_tol);
            prop_assert!((a.next.v - b.next.v).abs() < 1e-9);
        }

        #[test]
        fn chart_round_trip(v in 1.0f64..1e6) {
            let q = transform_u(PhasePoint::new(0.0, v), 2.0, &static_pair()).unwrap();
            prop_assert!((q.to_phase().v - v).abs() <= 1e-15 * v);
        }

        #[test]
        fn chart_conjugates_the_map(t in 0.0f64..1.0, v in 4.0f64..50.0) {
            let plates = wavy_pair();
            let p = PhasePoint::new(t, v);
            let direct = map_a(p, &plates, 2.0, &settings()).unwrap().next;
            let (image, _) = map_a_prime(transform_u(p, 2.0, &plates).unwrap(), &plates, 2.0, &settings()).unwrap();
            let back = image.to_phase();
            prop_assert!((back.t - direct.t).abs() < 1e-12);
            prop_assert!((back.v - direct.v).abs() <= 1e-15 * direct.v.abs());
        }
    }
}
