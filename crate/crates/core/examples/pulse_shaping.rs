//! Builds an adiabatic ramp of the two-photon drive from the leakage
//! sensitivity of the |11> state, a Gaussian X envelope, and a two-channel
//! schedule printed in its text form.

use mathieu::pulse::{
    compose_schedule, gaussian_envelope, make_adiabatic_waveform, profile_leakage, ChannelSpec, RampOptions,
    Segment, Window,
};
use mathieu::composite::BareLabel;
use mathieu::presets;

fn main() -> mathieu::Result<()> {
    let system = presets::transmon_pair(6);
    let drive = presets::pair_drive(0.0);
    let grid: Vec<f64> = (0..=30).map(|i| 0.0015 * i as f64).collect();
    let target: BareLabel = "11".parse()?;
    let profile = profile_leakage(&system, &drive, &grid, &target)?;
    for (e, (s, g)) in grid.iter().zip(profile.sensitivity.iter().zip(&profile.gap)).step_by(5) {
        println!("eps {e:.4} GHz: S = {s:.3}/GHz, gap = {g:.3} GHz");
    }

    let ramp = make_adiabatic_waveform(&profile, 0.3, Window::SineSquared, 0.02, 0.035, 2.0, &RampOptions::default())?;
    println!("ramp 0.020 -> 0.035 GHz: {:.2} ns, {} samples", ramp.duration, ramp.samples.len());

    // Up, then the same ramp reversed: the channel must return to idle.
    let mut round_trip = ramp.samples.clone();
    round_trip.extend(ramp.samples.iter().rev().skip(1));

    let x = gaussian_envelope(10.0, 50.0, std::f64::consts::PI, 0.0, 2.0)?;
    println!("Gaussian pi pulse: area {:.6} rad over {:.1} ns", x.area(), x.duration());

    let schedule = compose_schedule(
        &[
            Segment {
                channel: ChannelSpec::mathieu("mathieu", 1, drive.omega_d, 0.02),
                waveform: round_trip.clone(),
                start: 0.0,
            },
            Segment {
                channel: ChannelSpec::xy("xy0", 0, 5.2),
                waveform: x.samples,
                start: 2.0 * ramp.sampled_duration(),
            },
        ],
        2.0,
    )?;
    let text = schedule.to_text();
    println!("schedule: {:.1} ns on {} channels", schedule.total_duration(), schedule.channels.len());
    for line in text.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
