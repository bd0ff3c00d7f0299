//! ZZ coupling of the reference transmon pair as the two-photon drive
//! amplitude grows, with the perturbative prediction alongside.

use mathieu::analytic::{epsilon_zero, jzz_sw, SwParams};
use mathieu::presets;
use mathieu::spectral::{zz_sweep, CouplingLabels};

fn main() -> mathieu::Result<()> {
    let system = presets::transmon_pair(6);
    let drive = presets::pair_drive(0.0);
    let grid: Vec<f64> = (0..=20).map(|i| 0.005 * i as f64).collect();
    let sweep = zz_sweep(&system, &drive, &grid, &CouplingLabels::pair())?;
    let sw = SwParams::from_pair(&system, &drive)?;

    println!("{:>8} {:>12} {:>12}  flags", "eps/GHz", "numeric/MHz", "formula/MHz");
    for s in &sweep.samples {
        let formula = jzz_sw(&sw.with_epsilon(s.epsilon))?;
        println!(
            "{:>8.3} {:>12.4} {:>12.4}  {}",
            s.epsilon,
            1e3 * s.j_zz,
            1e3 * formula,
            s.flags.describe()
        );
    }
    println!("sign changes: {}", sweep.sign_changes);
    if let Some(root) = sweep.root {
        println!("zero-ZZ amplitude: {root:.6} GHz (formula {:.6} GHz)", epsilon_zero(&sw)?);
    }
    Ok(())
}
