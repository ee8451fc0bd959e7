//! Scenario files, a simulation, and a parallel sweep, all in memory.

use bounce_lab::harness::{parse_grid, simulate, sweep, write_sweep_csv};
use bounce_lab::scenario::ScenarioConfig;

const SINGULAR: &str = r#"
model = "fermi_ulam_singular"
g = 0.0

[lower]
kind = "constant"
value = 0.0

[upper]
kind = "polynomial"
coefficients = [0.0, -1.0]
window = [-2.0, 1.0]

[tangency]
t_star = 0.0
order = 1
eps = 1.5

[[initial]]
t = -1.0
v = 10.0

[stop]
v_threshold = 1000.0
"#;

fn main() -> bounce_lab::Result<()> {
    let config = ScenarioConfig::from_toml(SINGULAR)?;
    let sim = simulate(&config)?;
    let t = &sim.summary.trajectories[0];
    println!("{} events, stopped by {:?} at t = {:?}", t.n_events, t.stopped_by, t.final_time);

    let axes = parse_grid("t0=-1.2:-0.2:3,v0=5:20:3")?;
    let rows = sweep(&config, &axes, None)?;
    let mut out = Vec::new();
    write_sweep_csv(&axes, &rows, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
