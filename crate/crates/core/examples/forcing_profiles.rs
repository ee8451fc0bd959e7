//! Plate laws, the resonance test and plate pairs.

use bounce_lab::forcing::{class_c_test, critical_scale, ForcingProfile, Harmonic, PlatePair};

fn main() -> bounce_lab::Result<()> {
    let g = 2.0;
    let sine = ForcingProfile::sinusoid(1.0, 0.5, 0.0, 0.0)?;
    println!("0.5·sin(2πt): sup velocity {:.4}, range {:?}", sine.sup_velocity(), sine.range());
    match class_c_test(&sine, g, 4) {
        Some((t0, k)) => println!("resonant launch for K = {k} at t0 = {t0:.6}"),
        None => println!("no resonant launch time"),
    }
    println!("smallest amplitude scale admitting K = 1: {:.4}", critical_scale(&sine, g)?);

    let wavy = ForcingProfile::harmonics(
        1.0,
        0.0,
        vec![
            Harmonic { multiple: 1, amplitude: 0.115, phase: 0.0 },
            Harmonic { multiple: 2, amplitude: 0.035, phase: -std::f64::consts::FRAC_PI_2 },
        ],
    )?;
    for t in [0.0, 0.25, 0.5] {
        println!("f({t}) = {:+.5}, f'({t}) = {:+.5}", wavy.eval(t, 0)?, wavy.eval(t, 1)?);
    }

    let pair = PlatePair::new(
        ForcingProfile::sinusoid(1.0, 0.1, 0.0, 0.0)?,
        ForcingProfile::sinusoid(1.0, 0.1, 1.0, 1.0)?,
        None,
    )?;
    println!("plate pair: period {}, sup separation {:.4}", pair.period(), pair.sup_separation());
    Ok(())
}
