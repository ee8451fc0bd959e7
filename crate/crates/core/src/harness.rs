//! Experiment commands behind the CLI: running a scenario, parameter sweeps,
//! phase portraits, and the flat-file exports they produce.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bouncing::{bounces_record, build_resonant, one_ball_run, two_ball_simulate, BallState};
use crate::diagnostics::{envelope, phase_portrait, Coordinates, PortraitRow};
use crate::error::{Error, Result};
use crate::fermi_ulam::{orbit, singular_run, PhasePoint, SingularOptions};
use crate::record::{Body, Outcome, StopReason, TrajectoryRecord};
use crate::scenario::{Physics, Scenario, ScenarioConfig};
use crate::solver::FlightState;

pub const SCHEMA_VERSION: u32 = 1;

pub const EVENTS_HEADER: [&str; 8] = ["event_index", "kind", "time", "body", "v_pre", "v_post", "plate_velocity", "z"];

/// Environment variable that sets the worker count of sweeps.
pub const THREADS_ENV: &str = "BOUNCE_LAB_THREADS";

/// Model-specific numbers reported next to a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extras {
    None,
    Resonant { max_deviation: f64, free_run_hops: usize, hop_jacobian_trace: f64 },
    Singular {
        fit_slope: f64,
        fit_events: usize,
        contact_gain: f64,
        lower_derivative_below_upper: bool,
        min_flight_factor: f64,
        monotone: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub record: TrajectoryRecord,
    pub stopped_by: StopReason,
    pub extras: Extras,
}

fn ball_start(plate_z: f64, p: PhasePoint, g: f64) -> FlightState {
    FlightState { t: p.t, z: plate_z, v: p.v, g }
}

/// Runs every initial condition of the scenario with its engine.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<Trajectory>> {
    let meta = scenario.meta();
    let (g, stop, settings) = (scenario.g, scenario.stop, &scenario.settings);
    match &scenario.physics {
        Physics::FermiUlam { plates, starts } => starts
            .iter()
            .map(|&p| {
                let o = orbit(plates, g, p, &stop, settings)?;
                Ok(Trajectory { record: o.to_record(plates, meta.clone())?, stopped_by: o.stopped_by, extras: Extras::None })
            })
            .collect(),
        Physics::FermiUlamSingular { plates, starts, min_speed } => starts
            .iter()
            .map(|&p| {
                let options = SingularOptions { stop, min_speed: *min_speed, ..SingularOptions::default() };
                let run = singular_run(plates, g, p, &options, settings)?;
                Ok(Trajectory {
                    record: run.to_record(plates, meta.clone())?,
                    stopped_by: run.stopped_by,
                    extras: Extras::Singular {
                        fit_slope: run.fit.slope,
                        fit_events: run.fit.events_used,
                        contact_gain: run.contact_gain,
                        lower_derivative_below_upper: run.lower_derivative_below_upper,
                        min_flight_factor: run.min_flight_factor,
                        monotone: run.monotone,
                    },
                })
            })
            .collect(),
        Physics::OneBall { plate, resonant: Some((spec, hops)), .. } => {
            let run = build_resonant(*spec, plate, g, *hops, settings)?;
            let mut record = run.record;
            record.meta = meta;
            Ok(vec![Trajectory {
                record,
                stopped_by: StopReason::EventLimit,
                extras: Extras::Resonant {
                    max_deviation: run.max_deviation,
                    free_run_hops: run.free_run_hops,
                    hop_jacobian_trace: run.hop_jacobian_trace,
                },
            }])
        }
        Physics::OneBall { plate, starts, resonant: None } => starts
            .iter()
            .map(|&p| {
                let bounces = one_ball_run(ball_start(plate.eval(p.t, 0)?, p, g), plate, &stop, settings)?;
                let speed = bounces.last().map_or(0.0, |b| b.v_out.abs());
                let time = bounces.last().map_or(p.t, |b| b.t);
                let stopped_by = stop.reached(bounces.len(), time, speed).unwrap_or(StopReason::EventLimit);
                Ok(Trajectory { record: bounces_record(&bounces, meta.clone()), stopped_by, extras: Extras::None })
            })
            .collect(),
        Physics::TwoBall { plate, setup } => {
            let run = two_ball_simulate(*setup, plate, g, &stop, settings)?;
            let mut record = run.record;
            record.meta = meta;
            Ok(vec![Trajectory { record, stopped_by: run.stopped_by, extras: Extras::None }])
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes all events, one row per participating body. Floats use the
/// shortest representation that round-trips.
pub fn write_events_csv<W: Write>(records: &[&TrajectoryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("writing events: {e}"));
    w.write_record(EVENTS_HEADER).map_err(io)?;
    let mut index = 0usize;
    for record in records {
        for e in &record.events {
            for imp in &e.impacts {
                w.write_record([
                    index.to_string(),
                    e.kind.as_str().to_string(),
                    e.time.to_string(),
                    imp.body.as_str().to_string(),
                    imp.v_pre.to_string(),
                    opt(imp.v_post),
                    opt(e.plate_velocity),
                    e.z.to_string(),
                ])
                .map_err(io)?;
            }
            index += 1;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("writing events: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub id: usize,
    pub first_event: usize,
    pub n_events: usize,
    pub stopped_by: StopReason,
    pub outcome: Outcome,
    pub final_time: Option<f64>,
    /// Post-collision velocity of each body at its last event.
    pub final_velocities: Vec<(Body, f64)>,
    pub final_speed: Option<f64>,
    pub extras: Extras,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub model: String,
    pub period: f64,
    pub g: f64,
    pub seed: u64,
    pub trajectories: Vec<TrajectorySummary>,
    pub config: ScenarioConfig,
}

impl Summary {
    pub fn new(config: &ScenarioConfig, scenario: &Scenario, runs: &[Trajectory]) -> Self {
        let mut first_event = 0;
        let trajectories = runs
            .iter()
            .enumerate()
            .map(|(id, run)| {
                let r = &run.record;
                let mut finals: Vec<(Body, f64)> = Vec::new();
                for e in r.events.iter().rev() {
                    for imp in &e.impacts {
                        if let Some(v) = imp.v_post {
                            if !finals.iter().any(|(b, _)| *b == imp.body) {
                                finals.push((imp.body, v));
                            }
                        }
                    }
                }
                finals.sort_by_key(|(b, _)| b.as_str());
                let s = TrajectorySummary {
                    id,
                    first_event,
                    n_events: r.len(),
                    stopped_by: run.stopped_by,
                    outcome: r.outcome,
                    final_time: r.last_time(),
                    final_speed: r.speeds().last().copied(),
                    final_velocities: finals,
                    extras: run.extras.clone(),
                };
                first_event += r.len();
                s
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            model: scenario.model.as_str().into(),
            period: scenario.period(),
            g: scenario.g,
            seed: scenario.seed,
            trajectories,
            config: config.clone(),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.trajectories.iter().any(|t| t.outcome.is_singular())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Result of `simulate`: the trajectories and their summary.
pub struct Simulation {
    pub runs: Vec<Trajectory>,
    pub summary: Summary,
}

pub fn simulate(config: &ScenarioConfig) -> Result<Simulation> {
    let scenario = config.build()?;
    let runs = run_scenario(&scenario)?;
    let summary = Summary::new(config, &scenario, &runs);
    Ok(Simulation { runs, summary })
}

impl Simulation {
    pub fn events_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        let records: Vec<&TrajectoryRecord> = self.runs.iter().map(|r| &r.record).collect();
        write_events_csv(&records, &mut buf)?;
        Ok(buf)
    }
}

/// One swept parameter: `count` evenly spaced values from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    T0,
    V0,
    G,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::T0 => "t0",
            AxisName::V0 => "v0",
            AxisName::G => "g",
        }
    }
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }
}

/// Parses `name=lo:hi:count[,name=lo:hi:count...]` over `t0`, `v0`, `g`.
/// An empty spec is an empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<Axis>> {
    let bad = |m: String| Error::Config(format!("grid: {m}"));
    let mut axes: Vec<Axis> = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part.split_once('=').ok_or_else(|| bad(format!("expected name=lo:hi:count, got {part:?}")))?;
        let name = match name.trim() {
            "t0" => AxisName::T0,
            "v0" => AxisName::V0,
            "g" => AxisName::G,
            other => return Err(bad(format!("unknown axis {other:?}; use t0, v0 or g"))),
        };
        let fields: Vec<&str> = range.split(':').map(str::trim).collect();
        let [lo, hi, count] = fields[..] else {
            return Err(bad(format!("expected lo:hi:count for {}", name.as_str())));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count = count.parse::<usize>().map_err(|_| bad(format!("not a count: {count:?}")))?;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(bad(format!("bounds of {} must be finite", name.as_str())));
        }
        if axes.iter().any(|a| a.name == name) {
            return Err(bad(format!("axis {} given twice", name.as_str())));
        }
        axes.push(Axis { name, lo, hi, count });
    }
    Ok(axes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cell: usize,
    pub values: Vec<f64>,
    pub verdict: Option<&'static str>,
    pub n_events: usize,
    pub final_speed: Option<f64>,
    pub trend_slope: Option<f64>,
    pub outcome: Option<&'static str>,
    pub error: Option<String>,
}

fn cell_scenario(base: &Scenario, axes: &[Axis], values: &[f64]) -> Result<Scenario> {
    let mut s = base.clone();
    let pick = |name: AxisName| axes.iter().zip(values).find(|(a, _)| a.name == name).map(|(_, v)| *v);
    if let Some(g) = pick(AxisName::G) {
        s.g = g;
    }
    let (t0, v0) = (pick(AxisName::T0), pick(AxisName::V0));
    let retarget = |starts: &mut Vec<PhasePoint>| -> Result<()> {
        let base = *starts.first().ok_or_else(|| Error::Config("sweep needs an [[initial]] entry".into()))?;
        *starts = vec![PhasePoint::new(t0.unwrap_or(base.t), v0.unwrap_or(base.v))];
        Ok(())
    };
    match &mut s.physics {
        Physics::FermiUlam { starts, .. } | Physics::FermiUlamSingular { starts, .. } => retarget(starts)?,
        Physics::OneBall { starts, resonant, .. } => {
            if resonant.is_some() && (t0.is_some() || v0.is_some()) {
                return Err(Error::Config("resonant scenarios fix t0 and v0; sweep g instead".into()));
            }
            if resonant.is_none() {
                retarget(starts)?;
            }
        }
        Physics::TwoBall { setup, .. } => {
            if let Some(t) = t0 {
                setup.t0 = t;
            }
            if let Some(v) = v0 {
                let p2: &mut BallState =
                    setup.balls.iter_mut().find(|b| b.label == Body::P2).expect("validated p2");
                p2.v = v;
            }
        }
    }
    Ok(s)
}

fn outcome_str(o: &Outcome) -> &'static str {
    match o {
        Outcome::Completed => "completed",
        Outcome::TripleCollision { .. } => "triple_collision",
        Outcome::ZeroMassSingularity { .. } => "zero_mass_singularity",
        Outcome::ContactReached { .. } => "contact_reached",
    }
}

fn run_cell(base: &Scenario, axes: &[Axis], cell: usize, values: Vec<f64>) -> SweepRow {
    let mut row = SweepRow {
        cell,
        values,
        verdict: None,
        n_events: 0,
        final_speed: None,
        trend_slope: None,
        outcome: None,
        error: None,
    };
    let result = cell_scenario(base, axes, &row.values).and_then(|s| {
        let runs = run_scenario(&s)?;
        let run = runs.into_iter().next().ok_or_else(|| Error::Config("no trajectory".into()))?;
        Ok((s, run))
    });
    match result {
        Ok((s, run)) => {
            row.n_events = run.record.len();
            row.final_speed = run.record.speeds().last().copied();
            row.outcome = Some(outcome_str(&run.record.outcome));
            match envelope(&run.record, s.window, s.seed) {
                Ok(env) => {
                    row.verdict = Some(env.verdict.as_str());
                    row.trend_slope = Some(env.trend_slope);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Worker count from `BOUNCE_LAB_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// Runs one simulation per grid cell. Rows come back in cell order whatever
/// the thread count; a failing cell records its error and the sweep goes on.
pub fn sweep(config: &ScenarioConfig, axes: &[Axis], threads: Option<usize>) -> Result<Vec<SweepRow>> {
    let base = config.build()?;
    let total: usize = if axes.is_empty() { 0 } else { axes.iter().map(|a| a.count).product() };
    let cells: Vec<(usize, Vec<f64>)> = (0..total)
        .map(|cell| {
            let mut rest = cell;
            let mut idx = vec![0; axes.len()];
            for (k, a) in axes.iter().enumerate().rev() {
                idx[k] = rest % a.count;
                rest /= a.count;
            }
            (cell, axes.iter().zip(&idx).map(|(a, &i)| a.value(i)).collect())
        })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| cells.into_par_iter().map(|(cell, values)| run_cell(&base, axes, cell, values)).collect()))
}

pub fn write_sweep_csv<W: Write>(axes: &[Axis], rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("writing sweep: {e}"));
    let mut header = vec!["cell".to_string()];
    header.extend(axes.iter().map(|a| a.name.as_str().to_string()));
    header.extend(["verdict", "n_events", "final_speed", "trend_slope", "outcome", "error"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut line = vec![r.cell.to_string()];
        line.extend(r.values.iter().map(f64::to_string));
        line.push(r.verdict.unwrap_or("").into());
        line.push(r.n_events.to_string());
        line.push(opt(r.final_speed));
        line.push(opt(r.trend_slope));
        line.push(r.outcome.unwrap_or("").into());
        line.push(r.error.clone().unwrap_or_default());
        w.write_record(&line).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing sweep: {e}")))
}

/// Section points of every trajectory in `(t mod T, v)` or `(t mod T, y)`.
pub fn portrait(config: &ScenarioConfig, ty: bool) -> Result<Vec<PortraitRow>> {
    let scenario = config.build()?;
    let coords = if ty {
        let l = scenario.l.ok_or_else(|| Error::Config("ty coordinates need `l`".into()))?;
        match scenario.plates() {
            Some(plates) => Coordinates::ty(l, plates).map_err(|e| Error::Config(format!("`l`: {e}")))?,
            None => Coordinates::Ty { l },
        }
    } else {
        Coordinates::Tv
    };
    let records: Vec<TrajectoryRecord> = run_scenario(&scenario)?.into_iter().map(|t| t.record).collect();
    phase_portrait(&records, coords)
}

pub fn write_portrait_csv<W: Write>(rows: &[PortraitRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("writing portrait: {e}"));
    w.write_record(["trajectory_id", "event_index", "t_mod", "value"]).map_err(io)?;
    for r in rows {
        w.write_record([r.trajectory_id.to_string(), r.event_index.to_string(), r.t_mod.to_string(), r.value.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing portrait: {e}")))
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
hops = 20
"#;

    #[test]
    fn resonant_summary_reports_final_speed() {
        let sim = simulate(&ScenarioConfig::from_toml(GAMMA2).unwrap()).unwrap();
        let t = &sim.summary.trajectories[0];
        assert_eq!(t.n_events, 20);
        assert!((t.final_speed.unwrap() - (3.0 + 2.0 * 20.0)).abs() < 1e-8);
        assert!(!sim.summary.is_singular());
        let json = sim.summary.to_json();
        assert!(json.contains("\"schema_version\": 1"));
    }

    #[test]
    fn events_csv_has_fixed_columns() {
        let sim = simulate(&ScenarioConfig::from_toml(GAMMA2).unwrap()).unwrap();
        let text = String::from_utf8(sim.events_csv().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("event_index,kind,time,body,v_pre,v_post,plate_velocity,z"));
        assert_eq!(lines.count(), 20);
    }

    #[test]
    fn grid_parsing() {
        let axes = parse_grid("t0=-0.1:-0.01:4, v0=10:20:3").unwrap();
        assert_eq!(axes.len(), 2);
        assert_eq!(axes[1].value(2), 20.0);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("x=0:1:2").is_err());
        assert!(parse_grid("t0=0:1").is_err());
        assert!(parse_grid("t0=0:1:2,t0=0:1:2").is_err());
    }

    #[test]
    fn empty_grid_is_empty_sweep() {
        let cfg = ScenarioConfig::from_toml(GAMMA2).unwrap();
        assert!(sweep(&cfg, &[], Some(1)).unwrap().is_empty());
    }

    #[test]
    fn cell_errors_do_not_abort() {
        let cfg = ScenarioConfig::from_toml(GAMMA2).unwrap();
        let rows = sweep(&cfg, &parse_grid("v0=1:2:2").unwrap(), Some(2)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_some()));
    }
}
