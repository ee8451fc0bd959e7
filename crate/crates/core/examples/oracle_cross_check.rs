//! The fixed-step oracle against the event-driven engines.

use bounce_lab::bouncing::{two_ball_simulate, BallState, TwoBallSetup};
use bounce_lab::forcing::ForcingProfile;
use bounce_lab::oracle::{self, OracleSettings};
use bounce_lab::record::{Body, RecordMeta, StopRule};
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let plate = ForcingProfile::sinusoid(1.0, 0.02, 0.3, 0.0)?;
    let g = 2.0;
    let setup = TwoBallSetup {
        t0: 0.0,
        balls: [
            BallState { label: Body::P1, mass: 1.0, z: 0.2, v: 1.5 },
            BallState { label: Body::P2, mass: 0.7, z: 0.9, v: -0.5 },
        ],
    };
    let horizon = 3.0;
    let engine = two_ball_simulate(setup, &plate, g, &StopRule::time(horizon), &settings)?;
    let meta = RecordMeta { model: "two_ball".into(), period: 1.0, g };
    let reference = oracle::two_ball(&setup, &plate, g, horizon, meta, &OracleSettings::for_period(1.0, settings.t_tol))?;
    for (a, b) in engine.record.events.iter().zip(&reference.events) {
        println!("{:>10}  engine {:.12}  oracle {:.12}  gap {:.1e}", a.kind.as_str(), a.time, b.time, (a.time - b.time).abs());
    }
    Ok(())
}
