//! A massless ball under a periodic heavy ball is a Fermi-Ulam system.

use bounce_lab::bouncing::{build_resonant, restricted_case2_as_fermi_ulam, Resonance, ResonantSpec};
use bounce_lab::diagnostics::envelope;
use bounce_lab::fermi_ulam::{singular_run, PhasePoint, SingularOptions};
use bounce_lab::forcing::ForcingProfile;
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let plate = ForcingProfile::sinusoid(1.0, 0.02, 0.0, 0.0)?;
    let g = 2.0;
    let spec = ResonantSpec::locate(Resonance::Gamma1, 3, &plate, g)?;
    let heavy = build_resonant(spec, &plate, g, 4, &settings)?;
    let pair = restricted_case2_as_fermi_ulam(&heavy.record, &plate, g)?;
    let tangency = *pair.tangency().expect("the heavy ball lands on the plate");
    println!(
        "upper plate period {}, contact at t* = {:.6} of order {}, gain {:.4}",
        pair.period(),
        tangency.t_star,
        tangency.order,
        pair.contact_gain().unwrap_or(f64::NAN)
    );

    let start = PhasePoint::new(tangency.t_star - 0.5, 12.0);
    let run = singular_run(&pair, g, start, &SingularOptions::default(), &settings)?;
    let record = run.to_record(&pair, heavy.record.meta.clone())?;
    let report = envelope(&record, 16, 0)?;
    println!(
        "{} collisions, final speed {:.2}, verdict {}",
        run.collisions(),
        run.points.last().map_or(0.0, |p| p.v),
        report.verdict.as_str()
    );
    Ok(())
}
