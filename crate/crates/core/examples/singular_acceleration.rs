//! Acceleration of a ball squeezed between plates that touch.

use bounce_lab::fermi_ulam::{singular_run, PhasePoint, SingularOptions};
use bounce_lab::forcing::{ForcingProfile, PlatePair, Tangency};
use bounce_lab::record::StopRule;
use bounce_lab::solver::RootSolveSettings;

fn main() -> bounce_lab::Result<()> {
    let settings = RootSolveSettings::default();
    for (order, upper, start) in [
        (1u8, vec![0.0, -1.0], PhasePoint::new(-1.0, 10.0)),
        (2u8, vec![0.0, 0.0, 1.0], PhasePoint::new(-0.5, 20.0)),
    ] {
        let plates = PlatePair::new(
            ForcingProfile::constant(1.0, 0.0)?,
            ForcingProfile::polynomial(1.0, upper, (-2.0, 1.0))?,
            Some(Tangency { t_star: 0.0, order, eps: 1.5 }),
        )?;
        let options = SingularOptions { stop: StopRule::events(500), ..SingularOptions::default() };
        let run = singular_run(&plates, 0.0, start, &options, &settings)?;
        let last = run.points.last().expect("start point");
        println!(
            "contact order {order}: {} collisions, v {:.3} -> {:.3}, t = {:.3e}, gain {}, fitted/predicted {:.4}, monotone {}",
            run.collisions(),
            start.v,
            last.v,
            last.t,
            run.contact_gain,
            run.fit.slope,
            run.monotone
        );
    }
    Ok(())
}
