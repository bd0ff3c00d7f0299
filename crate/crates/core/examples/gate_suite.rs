//! Calibrates the idle point of the reference pair and simulates the four
//! reference gates, printing fidelity, purity and leakage.

use mathieu::gates::{run_suite, GateOptions};
use mathieu::presets::{pair_drive, transmon_pair};

fn main() -> mathieu::Result<()> {
    let system = transmon_pair(6);
    let drive = pair_drive(0.0);
    let suite = run_suite(&system, &drive, &GateOptions::default())?;
    let cal = &suite.calibration;
    println!("idle amplitude      {:.6} GHz", cal.epsilon_zero);
    println!("carriers            {:.6} / {:.6} GHz", cal.carriers[0], cal.carriers[1]);
    println!("amplitude factors   {:.5} / {:.5}", cal.amplitude_scale[0], cal.amplitude_scale[1]);
    println!("CZ plateau          {:.6} GHz, hold {:.1} ns", suite.cz_plateau, suite.cz_hold);
    println!("{:<4} {:>10} {:>12} {:>12} {:>12} {:>9}", "gate", "F_chi", "1-Tr(chi^2)", "leakage", "duration", "phase");
    for g in &suite.gates {
        println!(
            "{:<4} {:>10.7} {:>12.3e} {:>12.3e} {:>12.1} {:>9.5}",
            g.name,
            g.metrics.fidelity,
            g.metrics.unitarity_deficit(),
            g.metrics.leakage,
            g.map.duration,
            g.conditional_phase()
        );
    }
    Ok(())
}
