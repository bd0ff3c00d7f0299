//! Closed-form perturbative predictions: dressed levels of a two-photon
//! driven transmon, the resulting ZZ coupling of a directly coupled pair, the
//! amplitude that cancels it, and the parametric regimes of a driven coupler.
//!
//! Every quantity here is in ordinary GHz.

use crate::composite::SystemSpec;
use crate::models::DriveSpec;
use crate::{Error, Result};
use std::fmt;

/// Denominators smaller than this are treated as vanishing.
const POLE_TOL: f64 = 1e-12;

/// Parameters of the Schrieffer-Wolff treatment of a directly coupled pair
/// with the second qubit driven near its `|2> <-> |4>` two-photon resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwParams {
    pub g: f64,
    /// `omega_2 - omega_1`.
    pub delta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `omega_d - 2 omega_2 + 5 alpha_2`.
    pub delta_d: f64,
    pub epsilon: f64,
}

/// Which assumptions of the perturbative treatment hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validity {
    /// `Delta - alpha_2 > 0`.
    pub dispersive: bool,
    /// `delta_d > Delta - alpha_2`.
    pub drive_above: bool,
    /// `delta_d < 2 alpha_2`.
    pub small_detuning: bool,
}

impl Validity {
    pub fn ok(&self) -> bool {
        self.dispersive && self.drive_above && self.small_detuning
    }

    pub fn warnings(&self) -> Vec<&'static str> {
        let mut w = Vec::new();
        if !self.dispersive {
            w.push("Delta - alpha2 <= 0");
        }
        if !self.drive_above {
            w.push("delta_d <= Delta - alpha2");
        }
        if !self.small_detuning {
            w.push("delta_d >= 2 alpha2");
        }
        w
    }
}

impl SwParams {
    /// Reads the parameters from a two-mode system driven on mode 1.
    pub fn from_pair(system: &SystemSpec, drive: &DriveSpec) -> Result<Self> {
        if system.n_modes() != 2 || drive.mode != 1 {
            return Err(Error::InvalidInput(
                "perturbative formulas need two modes with the drive on the second".into(),
            ));
        }
        let (q1, q2) = (&system.modes()[0], &system.modes()[1]);
        let g = system
            .couplings()
            .iter()
            .map(|c| c.g)
            .sum::<f64>();
        Ok(SwParams {
            g,
            delta: q2.omega - q1.omega,
            alpha1: q1.alpha,
            alpha2: q2.alpha,
            delta_d: drive.omega_d - 2.0 * q2.omega + 5.0 * q2.alpha,
            epsilon: drive.epsilon,
        })
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        SwParams { epsilon, ..self }
    }

    pub fn validity(&self) -> Validity {
        let da = self.delta - self.alpha2;
        Validity {
            dispersive: da > 0.0,
            drive_above: self.delta_d > da,
            small_detuning: self.delta_d < 2.0 * self.alpha2,
        }
    }

    fn check_finite(&self) -> Result<()> {
        let all = [self.g, self.delta, self.alpha1, self.alpha2, self.delta_d, self.epsilon];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("non-finite perturbative parameter".into()))
        }
    }
}

/// Energies (GHz, rotating frame) of the lowest dressed levels of the driven
/// transmon and the composition of the two hybridized levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedQubitLevels {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// Half splitting of the `|2>`, `|4>` doublet.
    pub r: f64,
    /// Amplitude of `|4>` in `|E2>` (equal to that of `|2>` in `|E3>`).
    pub major: f64,
    /// Amplitude of `|2>` in `|E2>` (equal to minus that of `|4>` in `|E3>`).
    pub minor: f64,
}

/// Dressed levels of a single transmon driven near its `|2> <-> |4>`
/// two-photon resonance.
pub fn driven_levels(alpha2: f64, delta_d: f64, epsilon: f64) -> Result<DressedQubitLevels> {
    if ![alpha2, delta_d, epsilon].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite level parameter".into()));
    }
    let r = (0.25 * delta_d * delta_d + 3.0 * epsilon * epsilon).sqrt();
    let centre = 4.0 * alpha2 - 1.5 * delta_d;
    let pole = centre * centre - r * r;
    if pole.abs() < POLE_TOL {
        return Err(Error::InvalidInput(format!(
            "ground-level shift diverges: (4 alpha2 - 3 delta_d / 2)^2 = r^2 = {:.6e}",
            r * r
        )));
    }
    let e0 = -epsilon * epsilon * (2.0 * alpha2 - delta_d) / pole;
    let d1 = 4.0 * alpha2 - 2.0 * delta_d;
    if d1.abs() < POLE_TOL {
        return Err(Error::InvalidInput("first-level shift diverges: 4 alpha2 = 2 delta_d".into()));
    }
    let e1 = 2.5 * alpha2 - 0.5 * delta_d - 3.0 * epsilon * epsilon / d1;
    let (major, minor) = if r == 0.0 {
        (1.0, 0.0)
    } else {
        let x = delta_d / (2.0 * r);
        ((0.5 * (1.0 + x)).max(0.0).sqrt(), (0.5 * (1.0 - x)).max(0.0).sqrt())
    };
    Ok(DressedQubitLevels {
        e0,
        e1,
        e2: centre - r,
        e3: centre + r,
        r,
        major,
        minor,
    })
}

/// Perturbative ZZ coupling in GHz:
/// `2g^2/(D + a1) - 2g^2/[(D - a2) + 3 e^2/(dd - D + a2)] + 3 e^2/(4 a2 - 2 dd)`.
/// Outside the validity regime a warning is logged and the value returned.
pub fn jzz_sw(p: &SwParams) -> Result<f64> {
    p.check_finite()?;
    let v = p.validity();
    if !v.ok() {
        log::warn!("perturbative ZZ outside its validity regime: {}", v.warnings().join(", "));
    }
    let named = |x: f64, name: &str| {
        if x.abs() < POLE_TOL {
            Err(Error::InvalidInput(format!("vanishing denominator {name}")))
        } else {
            Ok(x)
        }
    };
    let g2 = p.g * p.g;
    let e2 = p.epsilon * p.epsilon;
    let d_plus = named(p.delta + p.alpha1, "Delta + alpha1")?;
    let shifted = if e2 == 0.0 {
        0.0
    } else {
        3.0 * e2 / named(p.delta_d - p.delta + p.alpha2, "delta_d - Delta + alpha2")?
    };
    let d_minus = named(p.delta - p.alpha2 + shifted, "(Delta - alpha2) + 3 eps^2/(delta_d - Delta + alpha2)")?;
    let d_drive = named(4.0 * p.alpha2 - 2.0 * p.delta_d, "4 alpha2 - 2 delta_d")?;
    Ok(2.0 * g2 / d_plus - 2.0 * g2 / d_minus + 3.0 * e2 / d_drive)
}

/// Amplitude (GHz) at which [`jzz_sw`] is approximately zero. The drive
/// amplitude stored in `p` is ignored.
pub fn epsilon_zero(p: &SwParams) -> Result<f64> {
    p.check_finite()?;
    let da = p.delta - p.alpha2;
    let dp = p.delta + p.alpha1;
    let dd = p.delta_d - p.delta + p.alpha2;
    let dr = 4.0 * p.alpha2 - 2.0 * p.delta_d;
    for (x, name) in [(da, "Delta - alpha2"), (dp, "Delta + alpha1"), (dd, "delta_d - Delta + alpha2"), (dr, "4 alpha2 - 2 delta_d")] {
        if x.abs() < POLE_TOL {
            return Err(Error::InvalidInput(format!("vanishing denominator {name}")));
        }
    }
    if p.g == 0.0 {
        return Err(Error::InvalidInput("zero coupling: no static ZZ to cancel".into()));
    }
    let num = 1.0 / da - 1.0 / dp;
    let den = 3.0 * (1.0 / (2.0 * p.g * p.g * dr) + 1.0 / (da * da * dd));
    let rad = num / den;
    if rad < 0.0 || !rad.is_finite() {
        let reason = if num < 0.0 {
            "requires Delta - alpha2 < Delta + alpha1 with Delta - alpha2 > 0"
        } else {
            "requires 1/(2 g^2 (4 alpha2 - 2 delta_d)) + 1/((Delta - alpha2)^2 (delta_d - Delta + alpha2)) > 0"
        };
        return Err(Error::InvalidInput(format!("negative radicand: {reason}")));
    }
    Ok(rad.sqrt())
}

/// Parametric regime of a driven coupler between resonant qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeCase {
    /// Negative static ZZ, drive above threshold: monotonic approach to zero.
    Case1a,
    /// Negative static ZZ, drive below threshold: sign reversal at `eps_c`.
    Case1b,
    /// Positive static ZZ, drive below threshold: monotonic approach to zero.
    Case2a,
    /// Positive static ZZ, drive above threshold: sign reversal at `eps_c`.
    Case2b,
}

impl fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeCase::Case1a => "1a",
            RegimeCase::Case1b => "1b",
            RegimeCase::Case2a => "2a",
            RegimeCase::Case2b => "2b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub case: RegimeCase,
    /// Sign of the undriven ZZ coupling, `+1` or `-1`.
    pub static_sign: i8,
    /// Critical amplitude (GHz) for the reversal cases.
    pub epsilon_c: Option<f64>,
    /// An inequality holds with equality (within 1e-9 GHz).
    pub on_boundary: bool,
}

/// Classifies a coupler drive configuration. Frequencies in GHz.
pub fn qcq_regime(omega_c: f64, omega_d: f64, omega1: f64, omega2: f64, alpha_c: f64) -> Result<Regime> {
    if ![omega_c, omega_d, omega1, omega2, alpha_c].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite regime parameter".into()));
    }
    if (omega1 - omega2).abs() > 1e-9 {
        log::warn!("regime classification assumes resonant qubits ({omega1} vs {omega2} GHz)");
    }
    const EDGE: f64 = 1e-9;
    let static_gap = 2.0 * omega_c - alpha_c - omega1 - omega2;
    let threshold = 4.0 * omega_c - omega1 - omega2 - 6.0 * alpha_c;
    let drive_gap = threshold - omega_d;
    let on_boundary = static_gap.abs() <= 2.0 * EDGE || drive_gap.abs() <= EDGE;
    let negative_static = static_gap > 0.0;
    let case = match (negative_static, omega_d > threshold) {
        (true, true) => RegimeCase::Case1a,
        (true, false) => RegimeCase::Case1b,
        (false, false) => RegimeCase::Case2a,
        (false, true) => RegimeCase::Case2b,
    };
    let radicand = static_gap * drive_gap / 3.0;
    let epsilon_c = match case {
        RegimeCase::Case1b | RegimeCase::Case2b if radicand > 0.0 => Some(radicand.sqrt()),
        _ => None,
    };
    Ok(Regime {
        case,
        static_sign: if negative_static { -1 } else { 1 },
        epsilon_c,
        on_boundary,
    })
}
