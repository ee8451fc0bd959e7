//! Event location and the two collision laws.

use bounce_lab::forcing::ForcingProfile;
use bounce_lab::solver::{
    ball_ball_collide, first_impact, next_plate_hit, reflect_off_plate, Direction, FlightState, RootSolveSettings,
    Surface,
};

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    let floor = ForcingProfile::constant(1.0, 0.0)?;
    let ceiling = ForcingProfile::constant(1.0, 1.0)?;

    let flight = FlightState { t: 0.0, z: 0.0, v: 3.0, g: 2.0 };
    let impact = first_impact(
        &flight,
        &[Surface::new(&ceiling, Direction::FromBelow), Surface::new(&floor, Direction::FromAbove)],
        &settings,
    )?;
    println!("first impact on surface {} at t = {:.12} (exact {:.12})", impact.surface, impact.hit.t, (3.0 - 5f64.sqrt()) / 2.0);

    let plate = ForcingProfile::sinusoid(1.0, 0.01, 0.0, 0.0)?;
    let hop = FlightState { t: 0.1, z: plate.eval(0.1, 0)?, v: 1.0, g: 2.0 };
    let hit = next_plate_hit(&hop, &plate, Direction::FromAbove, &settings)?;
    let v_in = hop.velocity(hit.t);
    println!(
        "oscillating plate: lands at t = {:.9} with v = {:.6}, leaves with v = {:.6}",
        hit.t,
        v_in,
        reflect_off_plate(v_in, hit.plate_velocity)
    );

    for (m1, m2) in [(1.0, 1.0), (2.0, 1.0), (0.0, 1.0)] {
        let (a, b) = ball_ball_collide(m1, 3.0, m2, -1.0);
        println!("masses ({m1}, {m2}), velocities (3, -1) -> ({a}, {b})");
    }
    Ok(())
}
