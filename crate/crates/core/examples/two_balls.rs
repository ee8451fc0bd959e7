//! Two balls above one plate: velocity exchange and the massless limits.

use bounce_lab::bouncing::{
    case1_mechanism_check, equal_mass_equivalence_check, two_ball_simulate, BallState, TwoBallSetup,
};
use bounce_lab::forcing::ForcingProfile;
use bounce_lab::record::{Body, EventKind, StopRule};
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let plate = ForcingProfile::sinusoid(1.0, 0.02, 0.0, 0.0)?;
    let g = 2.0;
    let setup = TwoBallSetup {
        t0: 0.0,
        balls: [
            BallState { label: Body::P1, mass: 1.0, z: 0.3, v: 2.0 },
            BallState { label: Body::P2, mass: 1.0, z: 1.0, v: 0.5 },
        ],
    };
    let run = two_ball_simulate(setup, &plate, g, &StopRule::events(50), &settings)?;
    let exchanges = run.record.events.iter().filter(|e| e.kind == EventKind::BallBall).count();
    println!("equal masses: {} events, {exchanges} ball-ball", run.record.len());
    let report = equal_mass_equivalence_check(&run, &settings)?;
    println!("  relabelled single-ball runs agree to {:.1e}", report.max_deviation());

    let light = TwoBallSetup {
        t0: 0.0,
        balls: [
            BallState { label: Body::P1, mass: 0.0, z: 1.5, v: 0.0 },
            BallState { label: Body::P2, mass: 1.0, z: 0.3, v: 2.0 },
        ],
    };
    let run = two_ball_simulate(light, &plate, g, &StopRule::time(30.0), &settings)?;
    let mechanism = case1_mechanism_check(&run.record, 2.0, 2.0);
    println!(
        "massless ball above: {} events, outcome {:?}, mechanism checked {} times with {} violations",
        run.record.len(),
        run.record.outcome,
        mechanism.checked,
        mechanism.violations
    );
    Ok(())
}
