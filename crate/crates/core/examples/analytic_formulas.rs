//! Closed-form predictions: dressed levels of a driven transmon, the ZZ
//! coupling of the pair, its zero, and the coupler drive regimes.

use mathieu::analytic::{driven_levels, epsilon_zero, jzz_sw, qcq_regime, SwParams};
use mathieu::presets;

fn main() -> mathieu::Result<()> {
    let sw = SwParams::from_pair(&presets::transmon_pair(6), &presets::pair_drive(0.0))?;
    println!("pair: {sw:?}");
    println!("validity warnings: {:?}", sw.validity().warnings());
    for eps in [0.0, 0.01, 0.02, 0.03] {
        let l = driven_levels(sw.alpha2, sw.delta_d, eps)?;
        println!(
            "eps {eps:.2}: J_zz {:>7.3} MHz  levels {:.4} {:.4} {:.4} {:.4} GHz",
            1e3 * jzz_sw(&sw.with_epsilon(eps))?,
            l.e0,
            l.e1,
            l.e2,
            l.e3
        );
    }
    println!("zero-ZZ amplitude: {:.6} GHz", epsilon_zero(&sw)?);

    let q = presets::qcq(presets::QCQ_POINT_B);
    for wd in [4.9, 5.0, 5.2] {
        let r = qcq_regime(q.omega_c, wd, q.omega_q1, q.omega_q2, q.alpha_c)?;
        println!("coupler at {:.2} GHz, drive {wd:.2} GHz: case {}, eps_c {:?}", q.omega_c, r.case, r.epsilon_c);
    }
    Ok(())
}
