//! Periodic plate-motion laws.
//!
//! Every profile is analytic on its domain, so derivatives are evaluated in
//! closed form rather than by differencing. Four kinds are user-facing
//! (constant, sinusoid, local polynomial, harmonic sum); a fifth, the
//! parabolic arc train, is derived from a simulated ball orbit and lets a
//! periodic ball stand in for a plate.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Samples per period used when scanning for roots and extrema.
pub const GRID_SAMPLES: usize = 4096;

/// Default highest derivative order a profile answers.
pub const DEFAULT_MAX_ORDER: usize = 8;

const ROOT_TOL: f64 = 1e-12;

/// One term `amplitude * sin(2π·multiple·t/T + phase)` of a harmonic sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub multiple: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// A free-flight arc `z0 + v0·τ − g·τ²/2` for `τ ∈ [0, duration)`, starting
/// `start` after the train origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub duration: f64,
    pub z0: f64,
    pub v0: f64,
    pub g: f64,
}

impl Arc {
    fn derivative(&self, tau: f64, order: usize) -> f64 {
        match order {
            0 => self.z0 + self.v0 * tau - 0.5 * self.g * tau * tau,
            1 => self.v0 - self.g * tau,
            2 => -self.g,
            _ => 0.0,
        }
    }

    fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant { value: f64 },
    /// `offset + amplitude·sin(2πt/T + phase)`
    Sinusoid { amplitude: f64, phase: f64, offset: f64 },
    /// `Σ a_j t^j`, only meaningful on `window`.
    Polynomial { coefficients: Vec<f64>, window: (f64, f64) },
    Harmonics { offset: f64, terms: Vec<Harmonic> },
    /// Periodic train of parabolic arcs covering `[origin, origin + T)`.
    ParabolicArcs { origin: f64, arcs: Vec<Arc> },
}

/// A smooth T-periodic plate law with derivatives up to `max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingProfile {
    period: f64,
    kind: ProfileKind,
    max_order: usize,
}

impl ForcingProfile {
    pub fn new(period: f64, kind: ProfileKind) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidProfile(format!("period must be positive, got {period}")));
        }
        match &kind {
            ProfileKind::Polynomial { coefficients, window } => {
                if coefficients.is_empty() {
                    return Err(Error::InvalidProfile("polynomial needs coefficients".into()));
                }
                if !(window.0 < window.1) {
                    return Err(Error::InvalidProfile(format!("empty window {window:?}")));
                }
            }
            ProfileKind::Harmonics { terms, .. } => {
                if terms.iter().any(|h| h.multiple == 0) {
                    return Err(Error::InvalidProfile("harmonic multiples must be >= 1".into()));
                }
            }
            ProfileKind::ParabolicArcs { arcs, .. } => {
                if arcs.is_empty() {
                    return Err(Error::InvalidProfile("arc train is empty".into()));
                }
                let mut cursor = 0.0;
                for arc in arcs {
                    if (arc.start - cursor).abs() > 1e-9 * period || arc.duration <= 0.0 {
                        return Err(Error::InvalidProfile("arcs must tile the period".into()));
                    }
                    cursor = arc.end();
                }
                if (cursor - period).abs() > 1e-9 * period {
                    return Err(Error::InvalidProfile(format!(
                        "arcs cover {cursor}, period is {period}"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self { period, kind, max_order: DEFAULT_MAX_ORDER })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(period, ProfileKind::Constant { value })
    }

    pub fn sinusoid(period: f64, amplitude: f64, phase: f64, offset: f64) -> Result<Self> {
        Self::new(period, ProfileKind::Sinusoid { amplitude, phase, offset })
    }

    /// Local polynomial `Σ a_j t^j` valid on `window`. The period only sets
    /// time scales for scanning; the profile itself is not periodic.
    pub fn polynomial(period: f64, coefficients: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        Self::new(period, ProfileKind::Polynomial { coefficients, window })
    }

    pub fn harmonics(period: f64, offset: f64, terms: Vec<Harmonic>) -> Result<Self> {
        Self::new(period, ProfileKind::Harmonics { offset, terms })
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self.kind, ProfileKind::Polynomial { .. })
    }

    /// Interval scanned for roots and extrema: one period, or the validity
    /// window of a local polynomial.
    pub fn scan_interval(&self) -> (f64, f64) {
        match &self.kind {
            ProfileKind::Polynomial { window, .. } => *window,
            ProfileKind::ParabolicArcs { origin, .. } => (*origin, origin + self.period),
            _ => (0.0, self.period),
        }
    }

    /// The `order`-th derivative at `t`; order 0 is the position itself.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        self.eval_inner(t, order, false)
    }

    /// Like [`eval`](Self::eval) but takes left limits at arc joints.
    /// Analytic kinds are continuous, so both agree there.
    pub fn eval_left(&self, t: f64, order: usize) -> Result<f64> {
        self.eval_inner(t, order, true)
    }

    fn eval_inner(&self, t: f64, order: usize, left: bool) -> Result<f64> {
        if order > self.max_order {
            return Err(Error::OrderUnsupported { order, max: self.max_order });
        }
        let value = match &self.kind {
            ProfileKind::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            ProfileKind::Sinusoid { amplitude, phase, offset } => {
                let theta = TAU * self.cycle_fraction(t) + phase;
                let w = TAU / self.period;
                let base = amplitude * w.powi(order as i32) * rotated_sin(theta, order);
                if order == 0 {
                    offset + base
                } else {
                    base
                }
            }
            ProfileKind::Harmonics { offset, terms } => {
                let frac = self.cycle_fraction(t);
                let w = TAU / self.period;
                let mut acc = if order == 0 { *offset } else { 0.0 };
                for h in terms {
                    let m = f64::from(h.multiple);
                    // Reduce m·frac modulo one so each term stays exactly periodic.
                    let theta = TAU * (m * frac).fract() + h.phase;
                    acc += h.amplitude * (m * w).powi(order as i32) * rotated_sin(theta, order);
                }
                acc
            }
            ProfileKind::Polynomial { coefficients, window } => {
                if t < window.0 || t > window.1 {
                    return Err(Error::OutOfWindow { t, lo: window.0, hi: window.1 });
                }
                polynomial_derivative(coefficients, t, order)
            }
            ProfileKind::ParabolicArcs { origin, arcs } => {
                let (arc, tau) = self.locate_arc(*origin, arcs, t, left);
                arc.derivative(tau, order)
            }
        };
        Ok(value)
    }

    /// Position within the current cycle, in `[0, 1)`.
    fn cycle_fraction(&self, t: f64) -> f64 {
        (t / self.period).rem_euclid(1.0)
    }

    fn locate_arc<'a>(&self, origin: f64, arcs: &'a [Arc], t: f64, left: bool) -> (&'a Arc, f64) {
        let mut s = (t - origin).rem_euclid(self.period);
        let snap = 4.0 * f64::EPSILON * (t.abs() + origin.abs() + self.period);
        if s < snap || self.period - s < snap {
            s = if left { self.period } else { 0.0 };
        }
        let idx = if left {
            arcs.partition_point(|a| a.end() < s)
        } else {
            arcs.partition_point(|a| a.end() <= s)
        };
        let arc = &arcs[idx.min(arcs.len() - 1)];
        (arc, s - arc.start)
    }

    /// First derivative discontinuity strictly after `t`, if the profile has any.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        let ProfileKind::ParabolicArcs { origin, arcs } = &self.kind else {
            return None;
        };
        let s = (t - origin).rem_euclid(self.period);
        let base = t - s;
        arcs.iter()
            .map(|a| base + a.end())
            .find(|&b| b > t)
            .or_else(|| Some(base + self.period + arcs[0].end()))
    }

    /// Global bound on `|f^{(order)}|`, used by the event solver's safe steps.
    pub fn derivative_bound(&self, order: usize) -> f64 {
        match &self.kind {
            ProfileKind::Constant { value } => {
                if order == 0 {
                    value.abs()
                } else {
                    0.0
                }
            }
            ProfileKind::Sinusoid { amplitude, offset, .. } => {
                let w = TAU / self.period;
                let b = amplitude.abs() * w.powi(order as i32);
                if order == 0 {
                    b + offset.abs()
                } else {
                    b
                }
            }
            ProfileKind::Harmonics { offset, terms } => {
                let w = TAU / self.period;
                let b: f64 = terms
                    .iter()
                    .map(|h| h.amplitude.abs() * (f64::from(h.multiple) * w).powi(order as i32))
                    .sum();
                if order == 0 {
                    b + offset.abs()
                } else {
                    b
                }
            }
            ProfileKind::Polynomial { coefficients, window } => {
                let r = window.0.abs().max(window.1.abs());
                let mut acc = 0.0;
                for (j, a) in coefficients.iter().enumerate().skip(order) {
                    acc += a.abs() * falling_factorial(j, order) * r.powi((j - order) as i32);
                }
                acc
            }
            ProfileKind::ParabolicArcs { arcs, .. } => match order {
                0 => arcs
                    .iter()
                    .map(|a| {
                        let apex = if a.g > 0.0 { (a.v0 / a.g).clamp(0.0, a.duration) } else { 0.0 };
                        let ends = [0.0, a.duration, apex];
                        ends.iter().map(|&tau| a.derivative(tau, 0).abs()).fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max),
                1 => arcs
                    .iter()
                    .map(|a| a.v0.abs().max((a.v0 - a.g * a.duration).abs()))
                    .fold(0.0, f64::max),
                2 => arcs.iter().map(|a| a.g.abs()).fold(0.0, f64::max),
                _ => 0.0,
            },
        }
    }

    /// Supremum of the first derivative over one period (or the window).
    pub fn sup_velocity(&self) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::Sinusoid { amplitude, .. } => amplitude.abs() * TAU / self.period,
            _ => {
                let (lo, hi) = self.scan_interval();
                grid_extremum(|t| self.eval(t, 1).unwrap_or(f64::NEG_INFINITY), lo, hi, true).1
            }
        }
    }

    /// `(min, max)` of the position over one period (or the window).
    pub fn range(&self) -> (f64, f64) {
        match &self.kind {
            ProfileKind::Constant { value } => (*value, *value),
            ProfileKind::Sinusoid { amplitude, offset, .. } => {
                (offset - amplitude.abs(), offset + amplitude.abs())
            }
            _ => {
                let (lo, hi) = self.scan_interval();
                let f = |t: f64| self.eval(t, 0).unwrap_or(f64::NAN);
                let min = grid_extremum(f, lo, hi, false).1;
                let max = grid_extremum(f, lo, hi, true).1;
                (min, max)
            }
        }
    }

    /// The profile `t ↦ f(c·t)`, with period `T/c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidProfile(format!("scale must be positive, got {c}")));
        }
        let kind = match &self.kind {
            ProfileKind::Polynomial { coefficients, window } => ProfileKind::Polynomial {
                coefficients: coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * c.powi(j as i32))
                    .collect(),
                window: (window.0 / c, window.1 / c),
            },
            ProfileKind::ParabolicArcs { origin, arcs } => ProfileKind::ParabolicArcs {
                origin: origin / c,
                arcs: arcs
                    .iter()
                    .map(|a| Arc {
                        start: a.start / c,
                        duration: a.duration / c,
                        z0: a.z0,
                        v0: a.v0 * c,
                        g: a.g * c * c,
                    })
                    .collect(),
            },
            other => other.clone(),
        };
        Ok(Self { period: self.period / c, kind, max_order: self.max_order })
    }
}

fn rotated_sin(theta: f64, order: usize) -> f64 {
    match order % 4 {
        0 => theta.sin(),
        1 => theta.cos(),
        2 => -theta.sin(),
        _ => -theta.cos(),
    }
}

fn falling_factorial(j: usize, m: usize) -> f64 {
    ((j - m + 1)..=j).map(|k| k as f64).product()
}

fn polynomial_derivative(coefficients: &[f64], t: f64, order: usize) -> f64 {
    // Horner on the differentiated coefficients.
    let mut acc = 0.0;
    for j in (order..coefficients.len()).rev() {
        acc = acc * t + coefficients[j] * falling_factorial(j, order);
    }
    acc
}

/// Grid scan followed by golden-section refinement around the best sample.
/// Returns `(argument, value)`.
pub(crate) fn grid_extremum(f: impl Fn(f64) -> f64, lo: f64, hi: f64, maximize: bool) -> (f64, f64) {
    let sign = if maximize { 1.0 } else { -1.0 };
    let step = (hi - lo) / GRID_SAMPLES as f64;
    let mut best = (lo, sign * f(lo));
    for i in 1..=GRID_SAMPLES {
        let t = lo + step * i as f64;
        let v = sign * f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (sign * f(c), sign * f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = sign * f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = sign * f(mid);
    if fm >= best.1 {
        (mid, sign * fm)
    } else {
        (best.0, sign * best.1)
    }
}

/// All sign changes of `h` on a uniform grid over `[lo, hi)`, each refined by
/// bisection to `ROOT_TOL`. Exact zeros on the grid count as roots.
pub(crate) fn grid_roots(h: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / GRID_SAMPLES as f64;
    let mut roots = Vec::new();
    let mut prev_t = lo;
    let mut prev = h(lo);
    for i in 1..=GRID_SAMPLES {
        let t = if i == GRID_SAMPLES { hi } else { lo + step * i as f64 };
        let cur = h(t);
        if prev == 0.0 {
            roots.push(prev_t);
        } else if prev * cur < 0.0 {
            roots.push(bisect(&h, prev_t, t, prev));
        }
        prev_t = t;
        prev = cur;
    }
    roots
}

fn bisect(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = h(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Roots in one period of `ḟ(t) = target`, polished with a Newton step.
pub fn velocity_roots(profile: &ForcingProfile, target: f64) -> Vec<f64> {
    let (lo, hi) = profile.scan_interval();
    let h = |t: f64| profile.eval(t, 1).map(|v| v - target).unwrap_or(f64::NAN);
    grid_roots(h, lo, hi)
        .into_iter()
        .map(|t0| {
            let (Ok(r), Ok(d)) = (profile.eval(t0, 1), profile.eval(t0, 2)) else {
                return t0;
            };
            if d.abs() > 0.0 {
                let polished = t0 - (r - target) / d;
                let better = profile.eval(polished, 1).map(|v| (v - target).abs() < (r - target).abs());
                if (polished - t0).abs() < 1e-9 && better.unwrap_or(false) {
                    return polished;
                }
            }
            t0
        })
        .map(|t| if profile.is_periodic() && t >= hi { t - profile.period } else { t })
        .collect()
}

/// Resonance test for class membership: the smallest `K ≤ k_max` with some
/// `t₀ ∈ [0, T)` solving `ḟ(t₀) = K·T·g/2`, or `None`.
pub fn class_c_test(profile: &ForcingProfile, g: f64, k_max: u32) -> Option<(f64, u32)> {
    if !(g > 0.0) {
        return None;
    }
    (1..=k_max).find_map(|k| {
        let target = f64::from(k) * profile.period() * g / 2.0;
        velocity_roots(profile, target).into_iter().next().map(|t0| (t0, k))
    })
}

/// Scale `c₀` at which the time-rescaled profile `f(c·t)` meets the `K = 1`
/// resonance exactly: `c₀ = sqrt(T·g / (2·sup ḟ))`. Profiles with `c ≥ c₀`
/// are in the class, slower ones are not.
pub fn critical_scale(profile: &ForcingProfile, g: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::InvalidProfile(format!("g must be positive, got {g}")));
    }
    let sup = profile.sup_velocity();
    if !(sup > 0.0) {
        return Err(Error::DegenerateProfile { sup });
    }
    Ok((profile.period() * g / (2.0 * sup)).sqrt())
}

/// A touching point of the two plates at `t_star`: derivatives agree below
/// `order` and differ at `order`; the gap is positive on `(t_star − eps, t_star)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangency {
    pub t_star: f64,
    pub order: u8,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatePair {
    lower: ForcingProfile,
    upper: ForcingProfile,
    tangency: Option<Tangency>,
}

const TANGENCY_MATCH_TOL: f64 = 1e-9;

impl PlatePair {
    /// Builds a pair after checking the gap invariants. Without tangency the
    /// gap must be positive over a full period; with one, the declared contact
    /// is verified numerically.
    pub fn new(lower: ForcingProfile, upper: ForcingProfile, tangency: Option<Tangency>) -> Result<Self> {
        if lower.is_periodic() && upper.is_periodic() {
            let (short, long) = if lower.period() <= upper.period() {
                (lower.period(), upper.period())
            } else {
                (upper.period(), lower.period())
            };
            let ratio = long / short;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                return Err(Error::InvalidPlates(format!(
                    "periods {} and {} are not commensurate",
                    lower.period(),
                    upper.period()
                )));
            }
        }
        let pair = Self { lower, upper, tangency };
        match tangency {
            None => {
                let (lo, hi) = pair.scan_interval();
                let (t, gap) = grid_extremum(|t| pair.gap(t).unwrap_or(f64::NAN), lo, hi, false);
                if !(gap > 0.0) {
                    return Err(Error::InvalidPlates(format!("plates touch or cross at t = {t} (gap {gap})")));
                }
            }
            Some(tan) => pair.verify_tangency(&tan)?,
        }
        Ok(pair)
    }

    fn verify_tangency(&self, tan: &Tangency) -> Result<()> {
        if !(tan.order == 1 || tan.order == 2) {
            return Err(Error::InvalidPlates(format!("contact order must be 1 or 2, got {}", tan.order)));
        }
        if !(tan.eps > 0.0) {
            return Err(Error::InvalidPlates("tangency window must be positive".into()));
        }
        let k = usize::from(tan.order);
        for j in 0..k {
            let d = self.lower.eval_left(tan.t_star, j)? - self.upper.eval_left(tan.t_star, j)?;
            if d.abs() > TANGENCY_MATCH_TOL {
                return Err(Error::InvalidPlates(format!(
                    "derivative {j} differs by {d} at the declared contact"
                )));
            }
        }
        let dk = self.lower.eval_left(tan.t_star, k)? - self.upper.eval_left(tan.t_star, k)?;
        if dk.abs() <= TANGENCY_MATCH_TOL {
            return Err(Error::InvalidPlates(format!("derivative {k} does not differ at the contact")));
        }
        for i in 1..=64 {
            let t = tan.t_star - tan.eps * f64::from(i) / 64.0;
            let gap = self.gap(t)?;
            if !(gap > 0.0) {
                return Err(Error::InvalidPlates(format!("gap {gap} not positive at t = {t}")));
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> &ForcingProfile {
        &self.lower
    }

    pub fn upper(&self) -> &ForcingProfile {
        &self.upper
    }

    pub fn tangency(&self) -> Option<&Tangency> {
        self.tangency.as_ref()
    }

    /// Common period of the pair (the longer of the two).
    pub fn period(&self) -> f64 {
        self.lower.period().max(self.upper.period())
    }

    pub fn gap(&self, t: f64) -> Result<f64> {
        Ok(self.upper.eval(t, 0)? - self.lower.eval(t, 0)?)
    }

    fn scan_interval(&self) -> (f64, f64) {
        match (self.lower.is_periodic(), self.upper.is_periodic()) {
            (true, true) => {
                if self.upper.period() >= self.lower.period() {
                    self.upper.scan_interval()
                } else {
                    self.lower.scan_interval()
                }
            }
            (false, true) => self.lower.scan_interval(),
            (true, false) => self.upper.scan_interval(),
            (false, false) => {
                let (a, b) = (self.lower.scan_interval(), self.upper.scan_interval());
                (a.0.max(b.0), a.1.min(b.1))
            }
        }
    }

    /// `sup_{t1,t2} |f2(t2) − f1(t1)|`, the bound a length scale must exceed.
    pub fn sup_separation(&self) -> f64 {
        let (l_min, l_max) = self.lower.range();
        let (u_min, u_max) = self.upper.range();
        (u_max - l_min).abs().max((u_min - l_max).abs())
    }

    /// Predicted per-round-trip velocity gain at the contact,
    /// `2·(f1^{(k)}(t*) − f2^{(k)}(t*))`, taken from the left.
    pub fn contact_gain(&self) -> Option<f64> {
        let tan = self.tangency?;
        let k = usize::from(tan.order);
        let d = self.lower.eval_left(tan.t_star, k).ok()? - self.upper.eval_left(tan.t_star, k).ok()?;
        Some(2.0 * d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(a: f64) -> ForcingProfile {
        ForcingProfile::sinusoid(1.0, a, 0.0, 0.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let zero = ForcingProfile::constant(1.0, 0.0).unwrap();
        assert_eq!(zero.eval(0.3, 1).unwrap(), 0.0);
        assert!((sine(0.5).eval(0.0, 1).unwrap() - PI).abs() < 1e-14);
        let quad = ForcingProfile::polynomial(1.0, vec![0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert!((quad.eval(-0.25, 0).unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn eval_errors() {
        let p = sine(0.5).with_max_order(2);
        assert_eq!(p.eval(0.0, 3), Err(Error::OrderUnsupported { order: 3, max: 2 }));
        let quad = ForcingProfile::polynomial(1.0, vec![0.0, 0.0, 1.0], (-1.0, 0.0)).unwrap();
        assert!(matches!(quad.eval(0.5, 0), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn class_c_examples() {
        let (t0, k) = class_c_test(&sine(0.5), 2.0, 3).unwrap();
        assert_eq!(k, 1);
        let expected = (1.0 / PI).acos() / TAU;
        assert!((t0 - expected).abs() < 1e-10, "{t0} vs {expected}");
        assert!((t0 - 0.198442).abs() < 1e-6);
        assert_eq!(class_c_test(&sine(0.1), 2.0, 5), None);
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        assert_eq!(class_c_test(&flat, 2.0, 10), None);
    }

    #[test]
    fn class_c_picks_smallest_k() {
        // sup ḟ = π. With g = 3 the K = 1 target 1.5 is reachable.
        let (_, k) = class_c_test(&sine(0.5), 3.0, 4).unwrap();
        assert_eq!(k, 1);
        // g = 8 puts every target at 4K > π.
        assert_eq!(class_c_test(&sine(0.5), 8.0, 4), None);
        // A period-2 profile with sup ḟ = π/2 and g = 2 has targets 2K, all above π/2.
        let slow = ForcingProfile::sinusoid(2.0, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(class_c_test(&slow, 2.0, 4), None);
        assert_eq!(class_c_test(&slow, 1.0, 4).map(|(_, k)| k), Some(1));
    }

    #[test]
    fn critical_scale_examples() {
        let c = critical_scale(&sine(0.5), 2.0).unwrap();
        assert!((c - (1.0 / PI).sqrt()).abs() < 1e-12);
        assert!((c - 0.56419).abs() < 1e-5);
        let c1 = critical_scale(&sine(1.0), 2.0).unwrap();
        assert!((c1 - 0.39894).abs() < 1e-5);
        let c2 = critical_scale(&sine(1.0), 4.0).unwrap();
        assert!((c2 / c1 - 2f64.sqrt()).abs() < 1e-12);
        let flat = ForcingProfile::constant(1.0, 0.0).unwrap();
        assert!(matches!(critical_scale(&flat, 2.0), Err(Error::DegenerateProfile { .. })));
    }

    #[test]
    fn harmonic_sup_velocity_matches_grid() {
        let p = ForcingProfile::harmonics(
            1.0,
            0.0,
            vec![
                Harmonic { multiple: 1, amplitude: 0.3, phase: 0.0 },
                Harmonic { multiple: 3, amplitude: 0.05, phase: 1.0 },
            ],
        )
        .unwrap();
        let brute = (0..200_000)
            .map(|i| p.eval(i as f64 / 200_000.0, 1).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((p.sup_velocity() - brute).abs() < 1e-6);
    }

    #[test]
    fn plate_pair_requires_positive_gap() {
        let lower = sine(0.5);
        let upper = ForcingProfile::constant(1.0, 0.4).unwrap();
        assert!(matches!(PlatePair::new(lower, upper, None), Err(Error::InvalidPlates(_))));
        let upper = ForcingProfile::constant(1.0, 1.0).unwrap();
        let pair = PlatePair::new(sine(0.5), upper, None).unwrap();
        assert!((pair.sup_separation() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn tangency_verification() {
        let lower = ForcingProfile::constant(1.0, 0.0).unwrap();
        let linear = ForcingProfile::polynomial(1.0, vec![0.0, -1.0], (-2.0, 1.0)).unwrap();
        let tan = Tangency { t_star: 0.0, order: 1, eps: 1.0 };
        let pair = PlatePair::new(lower.clone(), linear.clone(), Some(tan)).unwrap();
        assert_eq!(pair.contact_gain(), Some(2.0));
        // Order 2 is wrong here: the first derivatives differ.
        let bad = Tangency { order: 2, ..tan };
        assert!(PlatePair::new(lower.clone(), linear, Some(bad)).is_err());
        let quad = ForcingProfile::polynomial(1.0, vec![0.0, 0.0, 1.0], (-2.0, 1.0)).unwrap();
        let pair = PlatePair::new(lower, quad, Some(bad)).unwrap();
        assert_eq!(pair.contact_gain(), Some(-4.0));
    }

    #[test]
    fn rescaled_profile_period_and_derivative() {
        let p = sine(0.5);
        let q = p.rescaled(2.0).unwrap();
        assert_eq!(q.period(), 0.5);
        let t = 0.123;
        let expect = 2.0 * p.eval(2.0 * t, 1).unwrap();
        assert!((q.eval(t, 1).unwrap() - expect).abs() < 1e-12);
        let poly = ForcingProfile::polynomial(1.0, vec![1.0, 2.0, 3.0], (-1.0, 1.0)).unwrap();
        let pq = poly.rescaled(0.5).unwrap();
        assert!((pq.eval(1.5, 0).unwrap() - poly.eval(0.75, 0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn arc_train_left_and_right_limits() {
        let arcs = vec![Arc { start: 0.0, duration: 3.0, z0: 0.0, v0: 3.0, g: 2.0 }];
        let p = ForcingProfile::new(3.0, ProfileKind::ParabolicArcs { origin: 0.25, arcs }).unwrap();
        assert!((p.eval(0.25, 1).unwrap() - 3.0).abs() < 1e-12);
        assert!((p.eval_left(3.25, 1).unwrap() + 3.0).abs() < 1e-12);
        assert!((p.eval(1.75, 0).unwrap() - 2.25).abs() < 1e-12);
        assert_eq!(p.next_breakpoint(1.0), Some(3.25));
        assert_eq!(p.next_breakpoint(3.25), Some(6.25));
    }

    #[test]
    fn arc_joint_survives_rounding() {
        let t0 = 0.1 + 0.2;
        let arcs = vec![Arc { start: 0.0, duration: 3.0, z0: 0.0, v0: 3.0, g: 2.0 }];
        let p = ForcingProfile::new(3.0, ProfileKind::ParabolicArcs { origin: t0, arcs }).unwrap();
        for t in [t0 + 3.0, f64::from_bits((t0 + 3.0).to_bits() + 1), f64::from_bits((t0 + 3.0).to_bits() - 1)] {
            assert!((p.eval_left(t, 1).unwrap() + 3.0).abs() < 1e-9);
            assert!((p.eval(t, 1).unwrap() - 3.0).abs() < 1e-9);
        }
    }
}
