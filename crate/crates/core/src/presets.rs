//! Reference device parameters.

use crate::composite::{Coupling, ModeSpec, SystemSpec};
use crate::models::{DriveSpec, QcqSpec};

/// Two-photon drive frequency for the directly coupled pair, GHz.
pub const PAIR_OMEGA_D: f64 = 10.60;

/// Directly coupled transmon pair with `dim` levels per mode.
pub fn transmon_pair(dim: usize) -> SystemSpec {
    SystemSpec::new(
        vec![
            ModeSpec::new("q1", dim, 5.20, 0.25).expect("valid mode"),
            ModeSpec::new("q2", dim, 5.75, 0.25).expect("valid mode"),
        ],
        vec![Coupling::new(0, 1, 0.03)],
    )
    .expect("valid system")
}

/// Two-photon drive on the second qubit of [`transmon_pair`].
pub fn pair_drive(epsilon: f64) -> DriveSpec {
    DriveSpec::new(1, epsilon, PAIR_OMEGA_D)
}

/// Coupler frequency of the positive-ZZ working point, GHz.
pub const QCQ_POINT_A: f64 = 4.55;
/// Coupler frequency of the negative-ZZ working point, GHz.
pub const QCQ_POINT_B: f64 = 4.67;

/// Resonant qubit-coupler-qubit circuit at coupler frequency `omega_c`.
pub fn qcq(omega_c: f64) -> QcqSpec {
    QcqSpec {
        omega_q1: 4.2,
        omega_q2: 4.2,
        omega_c,
        alpha_q: 0.2,
        alpha_c: 0.8,
        g1c: 0.08,
        g2c: 0.08,
        g12: 0.01,
        dim_q: 6,
        dim_c: 6,
    }
}

/// Same circuit with the truncation used for chain segments.
pub fn qcq_chain_truncation(omega_c: f64) -> QcqSpec {
    QcqSpec {
        dim_q: 3,
        dim_c: 5,
        ..qcq(omega_c)
    }
}
