//! Velocity envelopes, the harmonic recurrence and phase portraits.

use bounce_lab::bouncing::{build_resonant, Resonance, ResonantSpec};
use bounce_lab::diagnostics::{envelope, harmonic_iterate, phase_portrait, Coordinates, TauKind};
use bounce_lab::forcing::ForcingProfile;
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let plate = ForcingProfile::sinusoid(1.0, 0.5, 0.0, 0.0)?;
    for variant in [Resonance::Gamma1, Resonance::Gamma2] {
        let spec = ResonantSpec::locate(variant, 3, &plate, 2.0)?;
        let run = build_resonant(spec, &plate, 2.0, 200, &settings)?;
        let report = envelope(&run.record, 20, 1)?;
        println!("{variant:?}: {} with slope {:.4} per event", report.verdict.as_str(), report.trend_slope);
        let rows = phase_portrait(std::slice::from_ref(&run.record), Coordinates::Tv)?;
        println!("  portrait: first rows {:?}", &rows[..2]);
    }

    let it = harmonic_iterate(&TauKind::Square, -0.1, 100_000, 8.0)?;
    let n = it.sequence.len() - 1;
    println!(
        "s <- s + s^2 from -0.1: n·(-s_n) = {:.5} at n = {n}, partial sum {:.3}, growth exponent {:.3}, diverged {}",
        n as f64 * -it.sequence[n],
        it.partial_sums[n],
        it.growth_exponent,
        it.diverged
    );
    Ok(())
}
