//! Hamiltonians of coupled transmons under a two-photon drive.
//!
//! Lab frame:
//! `H = sum_k [w_k n_k - (a_k/2) a_k^dag^2 a_k^2] + sum_{ij} g_ij (a_i^dag a_j + h.c.)`.
//!
//! In the frame rotating at half the drive frequency every mode frequency is
//! replaced by its detuning `w_k - w_d/2` and the driven mode picks up the
//! static squeezing term `(eps/2)(a^2 e^{i phi} + a^dag^2 e^{-i phi})`.

use crate::composite::{Basis, Monomial, Operator, OperatorSum, SystemSpec};
use crate::{angular, Error, Result, C64};

/// Smallest truncation accepted for a mode that carries a two-photon drive.
pub const MIN_DRIVEN_DIM: usize = 5;

/// A two-photon drive of amplitude `epsilon` (GHz) at `omega_d` (GHz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub mode: usize,
    pub epsilon: f64,
    pub omega_d: f64,
    /// Drive phase in radians.
    pub phi: f64,
}

impl DriveSpec {
    pub fn new(mode: usize, epsilon: f64, omega_d: f64) -> Self {
        DriveSpec {
            mode,
            epsilon,
            omega_d,
            phi: 0.0,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        DriveSpec { epsilon, ..self }
    }

    pub fn with_omega_d(self, omega_d: f64) -> Self {
        DriveSpec { omega_d, ..self }
    }

    /// Frequency of the co-rotating frame, `omega_d / 2`.
    pub fn frame(&self) -> f64 {
        0.5 * self.omega_d
    }

    pub fn validate(&self, system: &SystemSpec) -> Result<()> {
        let mode = system.mode(self.mode)?;
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "drive amplitude must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.omega_d.is_finite() && self.omega_d > 0.0) {
            return Err(Error::InvalidInput(format!(
                "drive frequency must be positive, got {}",
                self.omega_d
            )));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidInput("drive phase must be finite".into()));
        }
        if self.epsilon > 0.0 && mode.dim < MIN_DRIVEN_DIM {
            return Err(Error::InvalidInput(format!(
                "driven mode {} needs at least {} levels, has {}",
                mode.label, MIN_DRIVEN_DIM, mode.dim
            )));
        }
        Ok(())
    }
}

/// Static part of the Hamiltonian in a frame rotating at `frame` GHz for all
/// modes. `frame = 0` gives the lab frame.
pub fn static_terms(system: &SystemSpec, frame: f64) -> Result<OperatorSum> {
    let mut h = OperatorSum::new(&system.dims());
    for (k, m) in system.modes().iter().enumerate() {
        h.push_real(angular(m.omega - frame), &[Monomial::new(k, 1, 1)])?;
        h.push_real(-0.5 * angular(m.alpha), &[Monomial::new(k, 2, 2)])?;
    }
    for c in system.couplings() {
        h.push_with_adjoint(
            C64::new(angular(c.g), 0.0),
            &[Monomial::new(c.i, 1, 0), Monomial::new(c.j, 0, 1)],
        )?;
    }
    Ok(h)
}

/// `(eps/2)(a^2 e^{i phi} + a^dag^2 e^{-i phi})` on the driven mode.
pub fn drive_terms(system: &SystemSpec, drive: &DriveSpec) -> Result<OperatorSum> {
    drive.validate(system)?;
    let mut h = OperatorSum::new(&system.dims());
    let c = C64::from_polar(0.5 * angular(drive.epsilon), drive.phi);
    h.push_with_adjoint(c, &[Monomial::new(drive.mode, 0, 2)])?;
    Ok(h)
}

/// Unit-amplitude two-photon generator `(1/2)(a^2 e^{i phi} + h.c.)` in
/// angular units per GHz of drive amplitude.
pub fn mathieu_generator(system: &SystemSpec, mode: usize, phi: f64) -> Result<OperatorSum> {
    system.mode(mode)?;
    let mut h = OperatorSum::new(&system.dims());
    h.push_with_adjoint(C64::from_polar(0.5 * angular(1.0), phi), &[Monomial::new(mode, 0, 2)])?;
    Ok(h)
}

/// Lab-frame two-photon coupling `a^2 + a^dag^2`; multiplied by
/// `2 pi eps cos(w_d t + phi)` it reduces to [`drive_terms`] after the
/// rotating-wave approximation.
pub fn lab_drive_generator(system: &SystemSpec, mode: usize) -> Result<OperatorSum> {
    system.mode(mode)?;
    let mut h = OperatorSum::new(&system.dims());
    h.push_with_adjoint(C64::new(1.0, 0.0), &[Monomial::new(mode, 0, 2)])?;
    Ok(h)
}

/// Symbolic rotating-frame Hamiltonian with the drive included.
pub fn rwa_terms(system: &SystemSpec, drive: &DriveSpec) -> Result<OperatorSum> {
    let mut h = static_terms(system, drive.frame())?;
    h.extend(&drive_terms(system, drive)?)?;
    Ok(h)
}

/// Undriven lab-frame Hamiltonian on the full space.
pub fn build_lab_static(system: &SystemSpec) -> Result<Operator> {
    static_terms(system, 0.0)?.materialize(&system.full_basis())
}

/// Rotating-frame Hamiltonian on the full space.
pub fn build_rwa(system: &SystemSpec, drive: &DriveSpec) -> Result<Operator> {
    rwa_terms(system, drive)?.materialize(&system.full_basis())
}

/// Rotating-frame Hamiltonian on a restricted basis.
pub fn build_rwa_on(system: &SystemSpec, drive: &DriveSpec, basis: &Basis) -> Result<Operator> {
    rwa_terms(system, drive)?.materialize(basis)
}

/// Parameters of a qubit-coupler-qubit circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqSpec {
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub omega_c: f64,
    pub alpha_q: f64,
    pub alpha_c: f64,
    pub g1c: f64,
    pub g2c: f64,
    pub g12: f64,
    pub dim_q: usize,
    pub dim_c: usize,
}

impl QcqSpec {
    /// Mode order is qubit 1, coupler, qubit 2.
    pub fn system(&self) -> Result<SystemSpec> {
        use crate::composite::{Coupling, ModeSpec};
        let modes = vec![
            ModeSpec::new("q1", self.dim_q, self.omega_q1, self.alpha_q)?,
            ModeSpec::new("c", self.dim_c, self.omega_c, self.alpha_c)?,
            ModeSpec::new("q2", self.dim_q, self.omega_q2, self.alpha_q)?,
        ];
        let couplings = vec![
            Coupling::new(0, 1, self.g1c),
            Coupling::new(1, 2, self.g2c),
            Coupling::new(0, 2, self.g12),
        ];
        let s = SystemSpec::new(modes, couplings)?;
        if (self.omega_q1 - self.omega_q2).abs() > 1e-12 {
            log::warn!(
                "qubits are not resonant ({} vs {} GHz); exchange extraction assumes degeneracy",
                self.omega_q1,
                self.omega_q2
            );
        }
        Ok(s)
    }

    /// Whether both qubits share a frequency.
    pub fn resonant(&self) -> bool {
        (self.omega_q1 - self.omega_q2).abs() <= 1e-12
    }

    /// Two-photon drive on the coupler.
    pub fn drive(&self, epsilon: f64, omega_d: f64) -> DriveSpec {
        DriveSpec::new(1, epsilon, omega_d)
    }
}

/// Builds a QCQ circuit with the coupler driven and returns its system and
/// rotating-frame Hamiltonian.
pub fn build_qcq(spec: &QcqSpec, epsilon: f64, omega_d: f64) -> Result<(SystemSpec, Operator)> {
    let system = spec.system()?;
    let h = build_rwa(&system, &spec.drive(epsilon, omega_d))?;
    Ok((system, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{destroy, number, Coupling, ModeSpec};

    fn pair() -> SystemSpec {
        SystemSpec::new(
            vec![
                ModeSpec::new("q1", 4, 5.2, 0.25).unwrap(),
                ModeSpec::new("q2", 6, 5.75, 0.25).unwrap(),
            ],
            vec![Coupling::new(0, 1, 0.03)],
        )
        .unwrap()
    }

    #[test]
    fn lab_frame_diagonal() {
        let s = pair();
        let h = build_lab_static(&s).unwrap().to_dense();
        let b = s.full_basis();
        let i = b.index_of(&[2, 3]).unwrap();
        let expected = angular(2.0 * 5.2 - 0.25 + 3.0 * 5.75 - 0.25 * 3.0);
        assert!((h[(i, i)].re - expected).abs() < 1e-12);
    }

    #[test]
    fn rwa_matches_explicit_construction() {
        let s = pair();
        let d = DriveSpec {
            mode: 1,
            epsilon: 0.07,
            omega_d: 10.6,
            phi: 0.4,
        };
        let h = build_rwa(&s, &d).unwrap().to_dense();
        let a1 = destroy(&s, 0).unwrap().to_dense();
        let a2 = destroy(&s, 1).unwrap().to_dense();
        let n1 = number(&s, 0).unwrap().to_dense();
        let n2 = number(&s, 1).unwrap().to_dense();
        let r = |x: f64| C64::new(angular(x), 0.0);
        let mut e = &n1 * r(5.2 - 5.3) + &n2 * r(5.75 - 5.3);
        e -= a1.adjoint() * a1.adjoint() * &a1 * &a1 * r(0.125);
        e -= a2.adjoint() * a2.adjoint() * &a2 * &a2 * r(0.125);
        e += (a1.adjoint() * &a2 + a2.adjoint() * &a1) * r(0.03);
        let sq = &a2 * &a2 * C64::from_polar(1.0, 0.4);
        e += (&sq + sq.adjoint()) * r(0.035);
        assert!((h - e).norm() < 1e-12);
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let s = pair();
        let d = DriveSpec {
            mode: 1,
            epsilon: 0.2,
            omega_d: 10.6,
            phi: 1.3,
        };
        assert!(build_rwa(&s, &d).unwrap().is_hermitian());
        assert!(build_lab_static(&s).unwrap().is_hermitian());
    }

    #[test]
    fn drive_validation() {
        let s = pair();
        assert!(build_rwa(&s, &DriveSpec::new(0, 0.1, 10.6)).is_err());
        assert!(build_rwa(&s, &DriveSpec::new(0, 0.0, 10.6)).is_ok());
        assert!(build_rwa(&s, &DriveSpec::new(1, -0.1, 10.6)).is_err());
        assert!(build_rwa(&s, &DriveSpec::new(2, 0.1, 10.6)).is_err());
        assert!(build_rwa(&s, &DriveSpec::new(1, 0.1, 0.0)).is_err());
    }

    #[test]
    fn qcq_layout() {
        let spec = crate::presets::qcq(4.55);
        let (sys, h) = build_qcq(&spec, 0.1, 5.3).unwrap();
        assert_eq!(sys.n_modes(), 3);
        assert_eq!(h.dim(), spec.dim_q * spec.dim_q * spec.dim_c);
        assert!(h.is_hermitian());
    }
}
