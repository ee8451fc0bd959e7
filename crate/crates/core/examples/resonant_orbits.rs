//! The periodic and the accelerating resonant orbits of one ball.

use bounce_lab::bouncing::{build_resonant, Resonance, ResonantSpec};
use bounce_lab::forcing::ForcingProfile;
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let plate = ForcingProfile::sinusoid(1.0, 0.5, 0.0, 0.0)?;
    let g = 2.0;
    for variant in [Resonance::Gamma1, Resonance::Gamma2] {
        let spec = ResonantSpec::locate(variant, 3, &plate, g)?;
        let run = build_resonant(spec, &plate, g, 10, &settings)?;
        println!("{variant:?}: launch t0 = {:.6}, v0 = {}", spec.t0, spec.v0(1.0, g));
        for hop in run.hops.iter().take(4) {
            println!("  hop {}: duration {:.9}, leaves at {:.9}", hop.hop, hop.duration, hop.v_out);
        }
        println!(
            "  max deviation {:.1e}, hop Jacobian trace {:.3}, free run holds {} hops",
            run.max_deviation, run.hop_jacobian_trace, run.free_run_hops
        );
    }
    Ok(())
}
