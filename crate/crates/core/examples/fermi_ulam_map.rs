//! Iterating the Fermi-Ulam collision map and checking its loop invariant.

use bounce_lab::fermi_ulam::{map_a, orbit, poincare_cartan_integral, LoopCurve, PhasePoint};
use bounce_lab::forcing::{ForcingProfile, PlatePair};
use bounce_lab::record::{RecordMeta, StopRule};
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let g = 2.0;
    let plates = PlatePair::new(
        ForcingProfile::sinusoid(1.0, 0.1, 0.0, 0.0)?,
        ForcingProfile::sinusoid(1.0, 0.1, 1.0, 1.0)?,
        None,
    )?;

    let step = map_a(PhasePoint::new(0.2, 6.0), &plates, g, &settings)?;
    println!("(0.2, 6) -> upper hit at t = {:.6}, back at ({:.6}, {:.6})", step.mid.t, step.next.t, step.next.v);

    let run = orbit(&plates, g, PhasePoint::new(0.2, 6.0), &StopRule::events(2000), &settings)?;
    let speeds: Vec<f64> = run.points.iter().map(|p| p.v).collect();
    let (lo, hi) = speeds.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    println!("2000 iterations: speed stays in [{lo:.4}, {hi:.4}]");
    let record = run.to_record(&plates, RecordMeta { model: "fermi_ulam".into(), period: 1.0, g })?;
    println!("record holds {} collisions", record.len());

    let curve = LoopCurve::graph(1.0, 0.0, 1024, |t| 100.0 * (1.0 + 0.03 * (std::f64::consts::TAU * t).cos()))?;
    let before = poincare_cartan_integral(&curve, &plates, g)?;
    let after = poincare_cartan_integral(&curve.mapped(&plates, g, &settings)?, &plates, g)?;
    println!("loop integral {before:.10} -> {after:.10} (relative change {:.1e})", (after - before).abs() / before);
    Ok(())
}
