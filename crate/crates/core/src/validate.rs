//! Quick numerical self-checks of the library's invariants, run by the
//! `validate` command.

use crate::analytic::driven_levels;
use crate::chain::ChainConfig;
use crate::composite::{create, destroy, number, BareLabel, ModeSpec, SystemSpec};
use crate::evolve::{
    chi_from_map, lab_drive_term, propagate, simulate_gate, GateSetup, PropagationOptions, TimeTerm, VirtualZ,
};
use crate::models::{build_rwa, mathieu_generator, static_terms, DriveSpec};
use crate::pulse::{compose_schedule, gaussian_envelope, ChannelSpec, Segment};
use crate::spectral::{driven_spectrum, zz_sweep, CouplingLabels};
use crate::{presets, DMatrix, Result, C64};
use serde::Serialize;
use std::sync::Arc;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Measured quantity; compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Largest Hermiticity defect of the pair, unit and chain Hamiltonians.
pub fn hermiticity() -> Result<Check> {
    let pair = build_rwa(&presets::transmon_pair(6), &presets::pair_drive(0.08))?;
    let unit = presets::qcq(presets::QCQ_POINT_B);
    let unit = build_rwa(&unit.system()?, &unit.drive(0.15, 5.0))?;
    let chain = ChainConfig {
        n_qubits: 3,
        ..ChainConfig::five_qubit(presets::QCQ_POINT_B).with_drive(0.12, 5.5)
    };
    let chain = chain.hamiltonian(&chain.basis()?)?;
    let worst = [pair, unit, chain]
        .iter()
        .map(|h| h.hermitian_deviation())
        .fold(0.0, f64::max);
    Ok(Check::at_most("hamiltonian hermiticity", worst, 1e-12))
}

/// Operators on different modes commute and `[a, a^dag] = 1` below the
/// truncation edge.
pub fn embedded_commutation() -> Result<Check> {
    let system = SystemSpec::new(
        vec![
            ModeSpec::new("a", 3, 5.0, 0.2)?,
            ModeSpec::new("b", 4, 5.5, 0.3)?,
            ModeSpec::new("c", 2, 6.0, 0.1)?,
        ],
        vec![],
    )?;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            for (x, y) in [
                (destroy(&system, i)?, create(&system, j)?),
                (number(&system, i)?, destroy(&system, j)?),
                (destroy(&system, i)?, destroy(&system, j)?),
            ] {
                worst = worst.max(x.commutator(&y)?.max_abs());
            }
        }
    }
    let basis = system.full_basis();
    for k in 0..3 {
        let c = destroy(&system, k)?.commutator(&create(&system, k)?)?.to_dense();
        let top = system.modes()[k].dim as u8 - 1;
        for s in 0..basis.len() {
            if basis.occupations(s)[k] < top {
                worst = worst.max((c[(s, s)] - C64::new(1.0, 0.0)).norm());
            }
        }
    }
    Ok(Check::at_most("embedded operator commutation", worst, 1e-14))
}

fn pair_superposition(system: &SystemSpec) -> Result<DMatrix<C64>> {
    let basis = system.full_basis();
    let mut psi = DMatrix::zeros(basis.len(), 1);
    for l in ["00", "01", "10", "11"] {
        let i = system.bare_index(&l.parse::<BareLabel>()?)?;
        psi[(i, 0)] = C64::new(0.5, 0.0);
    }
    Ok(psi)
}

/// Norm drift of a driven pair under a time-dependent two-photon ramp.
pub fn norm_drift() -> Result<Check> {
    let system = presets::transmon_pair(6);
    let drive = presets::pair_drive(0.02);
    let h0 = build_rwa(&system, &drive)?;
    let gen = mathieu_generator(&system, 1, 0.0)?.to_dense(&system.full_basis())?;
    let term = TimeTerm::new(
        gen,
        Arc::new(|t: f64| C64::new(0.03 * (std::f64::consts::PI * t / 40.0).sin().powi(2), 0.0)),
        false,
    );
    let psi = pair_superposition(&system)?;
    let grid: Vec<f64> = (0..=8).map(|i| 5.0 * i as f64).collect();
    let tr = propagate(&h0, &[term], &psi, &grid, &PropagationOptions::default())?;
    Ok(Check::at_most("norm drift", tr.max_norm_drift, 1e-8))
}

/// Largest difference of the four computational-state populations after
/// 20 ns between the lab-frame cosine drive and the rotating-frame model, at
/// drive amplitude `epsilon` (GHz) on the reference pair.
pub fn rwa_lab_deviation(epsilon: f64) -> Result<f64> {
    let system = presets::transmon_pair(6);
    let drive = presets::pair_drive(epsilon);
    let psi = pair_superposition(&system)?;
    let times = [0.0, 20.0];
    let opts = PropagationOptions::default();
    let rwa = propagate(&build_rwa(&system, &drive)?, &[], &psi, &times, &opts)?;
    let lab_static = static_terms(&system, 0.0)?.materialize(&system.full_basis())?;
    let lab = propagate(&lab_static, &[lab_drive_term(&system, &drive)?], &psi, &times, &opts)?;
    let mut worst: f64 = 0.0;
    for l in ["00", "01", "10", "11"] {
        let i = system.bare_index(&l.parse::<BareLabel>()?)?;
        worst = worst.max((rwa.last()[(i, 0)].norm_sqr() - lab.last()[(i, 0)].norm_sqr()).abs());
    }
    Ok(worst)
}

/// Rotating-frame validity at the idle amplitude of the reference pair.
/// Near the `|1> <-> |3>` two-photon resonance of the driven qubit the
/// counter-rotating drive term interferes linearly with the resonant
/// amplitude, so the deviation grows quickly above a few tens of MHz.
pub fn rwa_vs_lab() -> Result<Check> {
    Ok(Check::at_most(
        "rotating-frame vs lab populations",
        rwa_lab_deviation(RWA_CHECK_EPSILON)?,
        1e-3,
    ))
}

/// Drive amplitude (GHz) of the rotating-frame check.
pub const RWA_CHECK_EPSILON: f64 = 0.02;

/// Smallest eigenvalue of the process matrix of an uncalibrated pulse.
pub fn chi_positivity() -> Result<Check> {
    let system = presets::transmon_pair(5);
    let drive = DriveSpec::new(1, 0.02, presets::PAIR_OMEGA_D);
    let env = gaussian_envelope(6.0, 30.0, 2.5, 0.0, 2.0)?;
    let schedule = compose_schedule(
        &[Segment {
            channel: ChannelSpec::xy("xy1", 0, 5.19),
            waveform: env.samples,
            start: 0.0,
        }],
        2.0,
    )?;
    let setup = GateSetup {
        system,
        drive,
        qubits: [0, 1],
        virtual_z: VirtualZ::None,
        propagation: PropagationOptions::default(),
    };
    let chi = chi_from_map(&simulate_gate(&setup, &schedule)?.map);
    let purity = (&chi.chi * &chi.chi).trace().re;
    let tr = chi.trace();
    let mut value = (-chi.min_eigenvalue()).max(0.0);
    if purity > tr * tr + 1e-9 || tr > 1.0 + 1e-9 {
        value = f64::INFINITY;
    }
    Ok(Check::at_most("process matrix positivity", value, 1e-10))
}

/// Rendering the same sweep twice gives identical bytes.
pub fn determinism() -> Result<Check> {
    let system = presets::transmon_pair(5);
    let drive = presets::pair_drive(0.0);
    let grid: Vec<f64> = (0..=10).map(|i| 0.005 * i as f64).collect();
    let render = || -> Result<String> {
        let s = zz_sweep(&system, &drive, &grid, &CouplingLabels::pair())?;
        let mut csv = crate::io::Csv::new(&["epsilon", "jzz"]);
        for p in &s.samples {
            csv.numbers(&[p.epsilon, p.j_zz]);
        }
        Ok(csv.render())
    };
    let same = render()? == render()?;
    Ok(Check::at_most("sweep output determinism", if same { 0.0 } else { 1.0 }, 0.0))
}

/// Worst deviation of the perturbative driven levels from exact
/// diagonalization, in units of `3 eps^2 / alpha`.
pub fn driven_level_accuracy() -> Result<Check> {
    let (alpha, omega, omega_d) = (0.25, 5.75, presets::PAIR_OMEGA_D);
    let system = SystemSpec::new(vec![ModeSpec::new("q", 10, omega, alpha)?], vec![])?;
    let delta_d = omega_d - 2.0 * omega + 5.0 * alpha;
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let eps = 0.01 * k as f64;
        let levels = driven_levels(alpha, delta_d, eps)?;
        let err = level_error(&system, omega_d, eps, &levels)?;
        worst = worst.max(err / (3.0 * eps * eps / alpha));
    }
    Ok(Check::at_most("driven levels within 3 eps^2/alpha", worst, 1.0))
}

/// Largest `|E_numeric - E_formula|` over the four lowest dressed levels,
/// GHz.
pub fn level_error(system: &SystemSpec, omega_d: f64, eps: f64, levels: &crate::analytic::DressedQubitLevels) -> Result<f64> {
    let labels: Vec<BareLabel> = ["0", "1", "2", "4"].iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let spec = driven_spectrum(system, &DriveSpec::new(0, eps, omega_d), &labels)?;
    let e = |i: usize| spec.energy(&labels[i]).map(crate::ordinary);
    let (a, b) = (e(2)?, e(3)?);
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    Ok([
        (e(0)? - levels.e0).abs(),
        (e(1)? - levels.e1).abs(),
        (lo - levels.e2).abs(),
        (hi - levels.e3).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

/// Runs every check.
pub fn run_all() -> Result<Vec<Check>> {
    Ok(vec![
        hermiticity()?,
        embedded_commutation()?,
        norm_drift()?,
        rwa_vs_lab()?,
        chi_positivity()?,
        determinism()?,
        driven_level_accuracy()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        for c in [hermiticity().unwrap(), embedded_commutation().unwrap(), determinism().unwrap(), driven_level_accuracy().unwrap()] {
            assert!(c.passed, "{c:?}");
        }
    }
}
