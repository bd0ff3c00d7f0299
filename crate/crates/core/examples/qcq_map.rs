//! Exchange and ZZ couplings of a qubit-coupler-qubit circuit with a
//! two-photon drive on the coupler, plus the analytic regime of each drive
//! frequency.

use mathieu::analytic::qcq_regime;
use mathieu::presets;
use mathieu::spectral::{exchange_variation, qcq_map};

fn main() -> mathieu::Result<()> {
    let spec = presets::qcq(presets::QCQ_POINT_A);
    let system = spec.system()?;
    let eps: Vec<f64> = (0..=8).map(|i| 0.02 * i as f64).collect();
    let wds = [5.28, 5.30, 5.32];
    let points = qcq_map(&system, spec.drive(0.0, 0.0).mode, &wds, &eps)?;

    for &wd in &wds {
        let r = qcq_regime(spec.omega_c, wd, spec.omega_q1, spec.omega_q2, spec.alpha_c)?;
        println!("omega_d = {wd:.2} GHz: case {}, eps_c = {:?}", r.case, r.epsilon_c);
        for p in points.iter().filter(|p| p.omega_d == wd) {
            println!(
                "  eps {:.2}  J_zz {:>8.3} MHz  J_xx {:>8.3} MHz  anisotropy {:>7.3}",
                p.epsilon,
                1e3 * p.j_zz,
                1e3 * p.j_xx,
                p.anisotropy()
            );
        }
    }
    println!("relative J_xx variation: {:.2}%", 100.0 * exchange_variation(&points));
    Ok(())
}
