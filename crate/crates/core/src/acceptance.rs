//! The release checks: each criterion runs a fixed experiment, compares it
//! against pinned tolerances and time limits, and reports pass or fail.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bouncing::{
    build_resonant, restricted_case2_as_fermi_ulam, two_ball_simulate, BallState, Resonance, ResonantSpec,
    TwoBallSetup,
};
use crate::diagnostics::{envelope, envelope_of, harmonic_iterate, TauKind, Verdict};
use crate::error::Result;
use crate::fermi_ulam::{map_a, orbit, poincare_cartan_integral, singular_run, LoopCurve, PhasePoint, SingularOptions};
use crate::forcing::{ForcingProfile, PlatePair, Tangency};
use crate::harness::{parse_grid, simulate, sweep, write_sweep_csv};
use crate::record::{Body, EventKind, StopRule, TrajectoryRecord};
use crate::scenario::ScenarioConfig;
use crate::solver::{ball_ball_collide, RootSolveSettings};

pub const RESONANT_TOL: f64 = 1e-8;
pub const LOOP_INVARIANCE_TOL: f64 = 1e-6;
pub const SINGULAR_INCREMENT_TOL: f64 = 1e-8;
pub const GROWTH_FIT_TOL: f64 = 0.1;
pub const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.2} s)",
            self.status.as_str(),
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceOptions {
    /// Time tolerance of the event-driven engines.
    pub t_tol: f64,
    pub seed: u64,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self { t_tol: RootSolveSettings::default().t_tol, seed: 20240607 }
    }
}

impl AcceptanceOptions {
    fn settings(&self) -> RootSolveSettings {
        RootSolveSettings { t_tol: self.t_tol, ..RootSolveSettings::default() }
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    /// Wall-clock limit, where the criterion has one.
    pub limit: Option<Duration>,
    pub needs_oracle: bool,
    check: fn(&AcceptanceOptions) -> Result<(bool, String)>,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "resonant acceleration", limit: Some(Duration::from_secs(1)), needs_oracle: false, check: resonant_acceleration },
    Criterion { id: 2, name: "periodic orbit", limit: Some(Duration::from_secs(1)), needs_oracle: false, check: periodic_orbit },
    Criterion { id: 3, name: "loop integral invariance", limit: Some(Duration::from_secs(10)), needs_oracle: false, check: loop_invariance },
    Criterion { id: 4, name: "singular acceleration k=1", limit: Some(Duration::from_secs(5)), needs_oracle: false, check: singular_linear },
    Criterion { id: 5, name: "singular acceleration k=2", limit: Some(Duration::from_secs(5)), needs_oracle: false, check: singular_quadratic },
    Criterion { id: 6, name: "harmonic recurrence", limit: Some(Duration::from_secs(5)), needs_oracle: false, check: harmonic_recurrence },
    Criterion { id: 7, name: "boundedness evidence", limit: Some(Duration::from_secs(300)), needs_oracle: false, check: boundedness },
    Criterion { id: 8, name: "collision-law conservation", limit: None, needs_oracle: false, check: conservation },
    Criterion { id: 9, name: "oracle equivalence", limit: None, needs_oracle: true, check: oracle_equivalence },
    Criterion { id: 10, name: "restricted case 2 equivalence", limit: Some(Duration::from_secs(30)), needs_oracle: false, check: restricted_equivalence },
    Criterion { id: 11, name: "determinism", limit: None, needs_oracle: false, check: determinism },
];

pub fn run_criterion(c: &Criterion, options: &AcceptanceOptions) -> CriterionResult {
    let start = Instant::now();
    if c.needs_oracle && !cfg!(feature = "oracle") {
        return CriterionResult {
            id: c.id,
            name: c.name,
            status: Status::Skipped,
            detail: "oracle not built into this binary".into(),
            elapsed: start.elapsed(),
        };
    }
    let outcome = (c.check)(options);
    let elapsed = start.elapsed();
    let (mut status, mut detail) = match outcome {
        Ok((true, d)) => (Status::Pass, d),
        Ok((false, d)) => (Status::Fail, d),
        Err(e) => (Status::Fail, format!("error: {e}")),
    };
    if let Some(limit) = c.limit {
        if elapsed > limit && status == Status::Pass {
            status = Status::Fail;
            detail = format!("{detail}; exceeded {} s limit", limit.as_secs_f64());
        }
    }
    CriterionResult { id: c.id, name: c.name, status, detail, elapsed }
}

pub fn run_all(options: &AcceptanceOptions) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c, options)).collect()
}

/// Plate of the resonant criteria: `0.5·sin(2πt)`, `T = 1`.
pub fn resonant_plate() -> ForcingProfile {
    ForcingProfile::sinusoid(1.0, 0.5, 0.0, 0.0).expect("valid sinusoid")
}

fn resonant_pattern(variant: Resonance, hops: usize, options: &AcceptanceOptions) -> Result<(bool, String)> {
    let (g, period) = (2.0, 1.0);
    let plate = resonant_plate();
    let spec = ResonantSpec::locate(variant, 3, &plate, g)?;
    let run = build_resonant(spec, &plate, g, hops, &options.settings())?;
    let mut worst: f64 = 0.0;
    for (n, hop) in run.hops.iter().enumerate() {
        let (v, dt) = match variant {
            Resonance::Gamma1 => (3.0, 3.0),
            Resonance::Gamma2 => (3.0 + period * g * (n + 1) as f64, 3.0 + 2.0 * n as f64),
        };
        worst = worst.max((hop.v_out - v).abs()).max((hop.duration - dt).abs());
    }
    let ok = run.hops.len() == hops && worst <= RESONANT_TOL;
    Ok((
        ok,
        format!(
            "t0 = {:.6}, {} hops, max deviation {worst:.1e} (tol {RESONANT_TOL:.0e}); free run holds {} hops",
            spec.t0,
            run.hops.len(),
            run.free_run_hops
        ),
    ))
}

fn resonant_acceleration(options: &AcceptanceOptions) -> Result<(bool, String)> {
    resonant_pattern(Resonance::Gamma2, 100, options)
}

fn periodic_orbit(options: &AcceptanceOptions) -> Result<(bool, String)> {
    resonant_pattern(Resonance::Gamma1, 1000, options)
}

/// Smooth plates `0.1·sin(2πt)` and `1 + 0.1·sin(2πt + 1)` under `g = 2`.
pub fn smooth_pair(amplitude: f64) -> PlatePair {
    PlatePair::new(
        ForcingProfile::sinusoid(1.0, amplitude, 0.0, 0.0).expect("valid sinusoid"),
        ForcingProfile::sinusoid(1.0, amplitude, 1.0, 1.0).expect("valid sinusoid"),
        None,
    )
    .expect("plates apart")
}

fn loop_invariance(options: &AcceptanceOptions) -> Result<(bool, String)> {
    let plates = smooth_pair(0.1);
    let g = 2.0;
    let mean_v = 100.0 * 1.0 / plates.period();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let modes: Vec<(f64, f64)> = (1..=3).map(|_| (rng.random_range(0.0..0.05), rng.random_range(0.0..std::f64::consts::TAU))).collect();
        let t0 = rng.random_range(0.0..1.0);
        let curve = LoopCurve::graph(plates.period(), t0, 1024, |t| {
            let s = t - t0;
            mean_v
                * (1.0
                    + modes
                        .iter()
                        .enumerate()
                        .map(|(k, (a, phi))| a * (std::f64::consts::TAU * (k + 1) as f64 * s + phi).cos())
                        .sum::<f64>())
        })?;
        let before = poincare_cartan_integral(&curve, &plates, g)?;
        let after = poincare_cartan_integral(&curve.mapped(&plates, g, &options.settings())?, &plates, g)?;
        worst = worst.max((before - after).abs() / before.abs());
    }
    Ok((worst < LOOP_INVARIANCE_TOL, format!("10 loops, worst relative change {worst:.2e} (tol {LOOP_INVARIANCE_TOL:.0e})")))
}

/// `f₁ ≡ 0`, `f₂ = −t` near the contact at `t* = 0`.
pub fn linear_contact() -> PlatePair {
    PlatePair::new(
        ForcingProfile::constant(1.0, 0.0).expect("constant"),
        ForcingProfile::polynomial(1.0, vec![0.0, -1.0], (-2.0, 1.0)).expect("line"),
        Some(Tangency { t_star: 0.0, order: 1, eps: 1.5 }),
    )
    .expect("touching plates")
}

/// `f₁ ≡ 0`, `f₂ = t²` near the contact at `t* = 0`.
pub fn quadratic_contact() -> PlatePair {
    PlatePair::new(
        ForcingProfile::constant(1.0, 0.0).expect("constant"),
        ForcingProfile::polynomial(1.0, vec![0.0, 0.0, 1.0], (-2.0, 1.0)).expect("parabola"),
        Some(Tangency { t_star: 0.0, order: 2, eps: 1.5 }),
    )
    .expect("touching plates")
}

fn singular_linear(options: &AcceptanceOptions) -> Result<(bool, String)> {
    let opts = SingularOptions { stop: StopRule::time(-1e-6), ..SingularOptions::default() };
    let run = singular_run(&linear_contact(), 0.0, PhasePoint::new(-1.0, 10.0), &opts, &options.settings())?;
    let worst = run.increments().iter().map(|d| (d - 2.0).abs()).fold(0.0, f64::max);
    let before: usize = run.points.iter().skip(1).filter(|p| p.t < -1e-6).count()
        + run.mids.iter().filter(|m| m.t < -1e-6).count();
    let ok = worst <= SINGULAR_INCREMENT_TOL && before > 1000;
    Ok((
        ok,
        format!(
            "{before} collisions before t = -1e-6 (stopped by {:?} at t = {:.3e}), max increment error {worst:.1e}",
            run.stopped_by,
            run.points.last().map_or(f64::NAN, |p| p.t)
        ),
    ))
}

fn singular_quadratic(options: &AcceptanceOptions) -> Result<(bool, String)> {
    let opts = SingularOptions { stop: StopRule::events(200), fit_window: 200, ..SingularOptions::default() };
    let run = singular_run(&quadratic_contact(), 0.0, PhasePoint::new(-0.5, 20.0), &opts, &options.settings())?;
    let increasing = run.points.windows(2).all(|w| w[1].v > w[0].v);
    let ok = (run.fit.slope - 1.0).abs() <= GROWTH_FIT_TOL && increasing && run.fit.events_used >= 200;
    Ok((
        ok,
        format!(
            "fitted/predicted slope {:.4} over {} events, strictly increasing: {increasing}",
            run.fit.slope, run.fit.events_used
        ),
    ))
}

fn harmonic_recurrence(_: &AcceptanceOptions) -> Result<(bool, String)> {
    let n = 1_000_000;
    let run = harmonic_iterate(&TauKind::Square, -0.1, n, 10.0)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, s) in run.sequence.iter().enumerate().skip(10_001) {
        let x = k as f64 * -s;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let total = *run.partial_sums.last().unwrap_or(&0.0);
    let ok = lo >= 0.8 && hi <= 1.2 && total > 10.0 && run.diverged;
    Ok((ok, format!("n·(-s_n) in [{lo:.4}, {hi:.4}] for n > 1e4, partial sum {total:.3}")))
}

fn boundedness(options: &AcceptanceOptions) -> Result<(bool, String)> {
    let plates = smooth_pair(0.05);
    let g = 2.0;
    let settings = options.settings();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<PhasePoint> =
        (0..32).map(|_| PhasePoint::new(rng.random_range(0.0..1.0), rng.random_range(20.0..40.0))).collect();
    let verdicts: Vec<Result<(Verdict, f64)>> = starts
        .par_iter()
        .map(|&start| {
            let mut p = start;
            let mut speeds = Vec::with_capacity(1_000_000);
            for _ in 0..1_000_000 {
                p = map_a(p, &plates, g, &settings)?.next;
                speeds.push(p.v);
            }
            let report = envelope_of(&speeds, 1000, options.seed)?;
            Ok((report.verdict, report.second_half_sup / report.first_half_sup))
        })
        .collect();
    let mut bounded = 0;
    let mut worst_ratio: f64 = 0.0;
    for v in verdicts {
        let (verdict, ratio) = v?;
        bounded += usize::from(verdict == Verdict::BoundedEvidence);
        worst_ratio = worst_ratio.max(ratio);
    }
    Ok((bounded == 32, format!("{bounded}/32 runs bounded over 1e6 iterations, worst sup ratio {worst_ratio:.4}")))
}

fn conservation(options: &AcceptanceOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (mut worst_p, mut worst_e) = (0.0f64, 0.0f64);
    let mut exchanges_exact = true;
    for _ in 0..10_000 {
        let m1 = rng.random_range(0.0..10.0);
        let m2 = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..10.0) };
        let (v1, v2) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let (a, b) = ball_ball_collide(m1, v1, m2, v2);
        let scale_p = m1 * v1.abs() + m2 * v2.abs();
        let scale_e = m1 * v1 * v1 + m2 * v2 * v2;
        worst_p = worst_p.max((m1 * a + m2 * b - m1 * v1 - m2 * v2).abs() / scale_p);
        worst_e = worst_e.max((m1 * a * a + m2 * b * b - scale_e).abs() / scale_e);
        let (c, d) = ball_ball_collide(m1, v1, m1, v2);
        exchanges_exact &= c == v2 && d == v1;
    }
    let ok = worst_p <= CONSERVATION_TOL && worst_e <= CONSERVATION_TOL && exchanges_exact;
    Ok((
        ok,
        format!("1e4 tuples: momentum {worst_p:.1e}, energy {worst_e:.1e} relative; equal masses exchange exactly: {exchanges_exact}"),
    ))
}

/// Compares two records event by event; returns the largest time gap or a
/// description of the first mismatch.
pub fn compare_events(a: &[crate::record::CollisionEvent], b: &[crate::record::CollisionEvent]) -> std::result::Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("{} vs {} events", a.len(), b.len()));
    }
    let mut worst: f64 = 0.0;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let bodies = |e: &crate::record::CollisionEvent| e.impacts.iter().map(|i| i.body).collect::<Vec<_>>();
        if x.kind != y.kind || bodies(x) != bodies(y) {
            return Err(format!("event {i}: {} vs {}", x.kind.as_str(), y.kind.as_str()));
        }
        worst = worst.max((x.time - y.time).abs());
    }
    Ok(worst)
}

#[cfg(feature = "oracle")]
pub mod random_scenarios {
    //! Randomized smooth scenarios run through both the event-driven engines
    //! and the fixed-step oracle.

    use super::*;
    use crate::bouncing::{bounces_record, one_ball_run};
    use crate::oracle::{self, OracleSettings};
    use crate::record::RecordMeta;
    use crate::solver::FlightState;

    #[derive(Debug, Clone)]
    pub enum RandomScenario {
        OneBall { plate: ForcingProfile, g: f64, start: PhasePoint },
        FermiUlam { plates: PlatePair, g: f64, start: PhasePoint },
        TwoBall { plate: ForcingProfile, g: f64, setup: TwoBallSetup },
    }

    pub const HORIZON: f64 = 3.0;

    fn sine(rng: &mut ChaCha8Rng, lo: f64, hi: f64, offset: f64) -> ForcingProfile {
        let a = rng.random_range(lo..hi);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        ForcingProfile::sinusoid(1.0, a, phase, offset).expect("valid sinusoid")
    }

    pub fn draw(rng: &mut ChaCha8Rng, index: usize) -> RandomScenario {
        match index % 3 {
            0 => RandomScenario::OneBall {
                plate: sine(rng, 0.005, 0.05, 0.0),
                g: rng.random_range(1.0..3.0),
                start: PhasePoint::new(rng.random_range(0.0..1.0), rng.random_range(1.0..3.0)),
            },
            1 => RandomScenario::FermiUlam {
                plates: PlatePair::new(sine(rng, 0.005, 0.05, 0.0), sine(rng, 0.005, 0.05, 1.0), None).expect("apart"),
                g: rng.random_range(0.0..2.0),
                start: PhasePoint::new(rng.random_range(0.0..1.0), rng.random_range(4.0..8.0)),
            },
            _ => {
                let plate = sine(rng, 0.005, 0.03, 0.0);
                let t0 = rng.random_range(0.0..1.0);
                let floor = plate.eval(t0, 0).expect("sinusoid");
                let z_lo = floor + rng.random_range(0.1..0.5);
                let z_hi = z_lo + rng.random_range(0.3..1.0);
                let (lo_label, hi_label) = if rng.random_bool(0.5) { (Body::P1, Body::P2) } else { (Body::P2, Body::P1) };
                let setup = TwoBallSetup {
                    t0,
                    balls: [
                        BallState { label: lo_label, mass: rng.random_range(0.5..2.0), z: z_lo, v: rng.random_range(-1.0..3.0) },
                        BallState { label: hi_label, mass: rng.random_range(0.5..2.0), z: z_hi, v: rng.random_range(-1.0..3.0) },
                    ],
                };
                RandomScenario::TwoBall { plate, g: 2.0, setup }
            }
        }
    }

    fn meta(g: f64) -> RecordMeta {
        RecordMeta { model: "random".into(), period: 1.0, g }
    }

    fn clip(mut r: TrajectoryRecord, horizon: f64) -> TrajectoryRecord {
        r.events.retain(|e| e.time <= horizon);
        r
    }

    /// Engine and oracle records of one scenario up to its horizon.
    pub fn both(s: &RandomScenario, settings: &RootSolveSettings) -> Result<(TrajectoryRecord, TrajectoryRecord)> {
        let os = OracleSettings::for_period(1.0, settings.t_tol);
        Ok(match s {
            RandomScenario::OneBall { plate, g, start } => {
                let horizon = start.t + HORIZON;
                let flight = FlightState { t: start.t, z: plate.eval(start.t, 0)?, v: start.v, g: *g };
                let bounces = one_ball_run(flight, plate, &StopRule::time(horizon), settings)?;
                (
                    clip(bounces_record(&bounces, meta(*g)), horizon),
                    oracle::one_ball(plate, flight, horizon, meta(*g), &os)?,
                )
            }
            RandomScenario::FermiUlam { plates, g, start } => {
                let horizon = start.t + HORIZON;
                let o = orbit(plates, *g, *start, &StopRule::time(horizon), settings)?;
                (
                    clip(o.to_record(plates, meta(*g))?, horizon),
                    oracle::fermi_ulam(plates, *g, *start, horizon, meta(*g), &os)?,
                )
            }
            RandomScenario::TwoBall { plate, g, setup } => {
                let horizon = setup.t0 + HORIZON;
                let run = two_ball_simulate(*setup, plate, *g, &StopRule::time(horizon), settings)?;
                (clip(run.record, horizon), oracle::two_ball(setup, plate, *g, horizon, meta(*g), &os)?)
            }
        })
    }
}

#[cfg(feature = "oracle")]
fn oracle_equivalence(options: &AcceptanceOptions) -> Result<(bool, String)> {
    use random_scenarios::{both, draw};
    let settings = options.settings();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let scenarios: Vec<_> = (0..100).map(|i| draw(&mut rng, i)).collect();
    let results: Vec<std::result::Result<(f64, usize), String>> = scenarios
        .par_iter()
        .map(|s| {
            let (engine, oracle) = both(s, &settings).map_err(|e| e.to_string())?;
            compare_events(&engine.events, &oracle.events).map(|d| (d, engine.len()))
        })
        .collect();
    let tol = 5.0 * options.t_tol;
    let mut worst: f64 = 0.0;
    let mut events = 0;
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((d, n)) => {
                worst = worst.max(d);
                events += n;
                if d > tol {
                    failures.push(format!("#{i}: time gap {d:.1e}"));
                }
            }
            Err(e) => failures.push(format!("#{i}: {e}")),
        }
    }
    let detail = format!(
        "100 scenarios, {events} events, worst time gap {worst:.1e} (tol {tol:.0e}){}",
        if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
    );
    Ok((failures.is_empty(), detail))
}

#[cfg(not(feature = "oracle"))]
fn oracle_equivalence(_: &AcceptanceOptions) -> Result<(bool, String)> {
    Ok((false, "oracle not built".into()))
}

/// Plate on which the `γ₁` orbit is stable: `0.02·sin(2πt)`.
pub fn restricted_plate() -> ForcingProfile {
    ForcingProfile::sinusoid(1.0, 0.02, 0.0, 0.0).expect("valid sinusoid")
}

fn restricted_equivalence(options: &AcceptanceOptions) -> Result<(bool, String)> {
    let settings = options.settings();
    let (g, period) = (2.0, 1.0);
    let plate = restricted_plate();
    let spec = ResonantSpec::locate(Resonance::Gamma1, 3, &plate, g)?;
    let p2_orbit = build_resonant(spec, &plate, g, 4, &settings)?;
    let pair = restricted_case2_as_fermi_ulam(&p2_orbit.record, &plate, g)?;

    // P₂ relaunched from its first plate hit, P₁ launched from the plate
    // shortly after, below P₂.
    let launch = spec.launch(1, period, g);
    let t0 = launch.t + 0.1;
    let p2_z = plate.eval(launch.t, 0)? + launch.v * 0.1 - 0.5 * g * 0.01;
    let p1 = PhasePoint::new(t0, 10.0);
    let setup = TwoBallSetup {
        t0,
        balls: [
            BallState { label: Body::P1, mass: 0.0, z: plate.eval(t0, 0)?, v: p1.v },
            BallState { label: Body::P2, mass: 1.0, z: p2_z, v: launch.v - g * 0.1 },
        ],
    };
    let run = two_ball_simulate(setup, &plate, g, &StopRule::events(60), &settings)?;
    let mut two_ball: Vec<(EventKind, f64)> = run
        .record
        .events_of(Body::P1)
        .map(|e| (if e.kind == EventKind::BallBall { EventKind::UpperPlateHit } else { e.kind }, e.time))
        .collect();
    two_ball.truncate(20);
    let fermi = orbit(&pair, g, p1, &StopRule::events(10), &settings)?.to_record(&pair, run.record.meta.clone())?;
    let fermi: Vec<(EventKind, f64)> = fermi.events.iter().map(|e| (e.kind, e.time)).collect();
    let tol = 10.0 * options.t_tol;
    let kinds_agree = two_ball.len() == 20 && fermi.len() == 20 && two_ball.iter().zip(&fermi).all(|(a, b)| a.0 == b.0);
    let gap = two_ball.iter().zip(&fermi).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max);

    // Starts sampled in the window before the contact all accelerate.
    let tan = *pair.tangency().expect("orbit touches the plate");
    let mut grown = 0;
    let mut cells = 0;
    for i in 1..=4 {
        for j in 0..4 {
            let start = PhasePoint::new(tan.t_star - tan.eps * i as f64 / 5.0, 10.0 + 2.5 * j as f64);
            let opts = SingularOptions { stop: StopRule::events(1000), ..SingularOptions::default() };
            let run = singular_run(&pair, g, start, &opts, &settings)?;
            let record = run.to_record(&pair, p2_orbit.record.meta.clone())?;
            cells += 1;
            if envelope(&record, 16, options.seed)?.verdict == Verdict::GrowthEvidence {
                grown += 1;
            }
        }
    }
    let ok = kinds_agree && gap <= tol && grown == cells;
    Ok((
        ok,
        format!(
            "20 events, kinds agree: {kinds_agree}, worst time gap {gap:.1e} (tol {tol:.0e}); {grown}/{cells} sampled starts show growth"
        ),
    ))
}

/// The resonant acceleration scenario as a configuration file.
pub const RESONANT_CONFIG: &str = r#"model = "one_ball"
g = 2.0
seed = 7

[plate]
kind = "sinusoid"
amplitude = 0.5

[resonant]
variant = "gamma2"
m2_int = 3
hops = 100
"#;

/// Same plate, free launches swept over `(t0, v0)`.
pub const RESONANT_SWEEP_CONFIG: &str = r#"model = "one_ball"
g = 2.0
seed = 7

[plate]
kind = "sinusoid"
amplitude = 0.5

[[initial]]
t = 0.0
v = 3.0

[stop]
n_events = 64
"#;

/// Output bytes of the resonant scenario and a sweep over its plate.
pub fn resonant_outputs(threads: usize) -> Result<Vec<Vec<u8>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let config = ScenarioConfig::from_toml(RESONANT_CONFIG)?;
        let sim = simulate(&config)?;
        let sweep_config = ScenarioConfig::from_toml(RESONANT_SWEEP_CONFIG)?;
        let axes = parse_grid("t0=0:0.9:4,v0=2:6:4")?;
        let rows = sweep(&sweep_config, &axes, Some(threads))?;
        let mut sweep_csv = Vec::new();
        write_sweep_csv(&axes, &rows, &mut sweep_csv)?;
        Ok(vec![sim.events_csv()?, sim.summary.to_json().into_bytes(), sweep_csv])
    })
}

fn determinism(_: &AcceptanceOptions) -> Result<(bool, String)> {
    let one = resonant_outputs(1)?;
    let eight = resonant_outputs(8)?;
    let same = one == eight;
    let bytes: usize = one.iter().map(Vec::len).sum();
    Ok((same, format!("events.csv, summary.json, sweep.csv at 1 and 8 threads: {bytes} bytes, identical: {same}")))
}
