//! Calibrated single- and two-qubit gates on a directly coupled pair driven
//! by a two-photon drive: idle point at zero `J_zz`, Gaussian microwave
//! rotations, and an adiabatic controlled-phase ramp.

use crate::composite::{BareLabel, Monomial, OperatorSum, SystemSpec};
use crate::evolve::{
    chi_from_map, gate_metrics, ideal, simulate_gate, GateMap, GateMetrics, GateSetup, ProcessMatrix,
    PropagationOptions, VirtualZ,
};
use crate::models::DriveSpec;
use crate::pulse::{
    compose_schedule, gaussian_envelope, make_adiabatic_waveform, profile_leakage, AdiabaticRamp, ChannelSpec,
    LeakageProfile, PulseSchedule, RampOptions, Segment, Window,
};
use crate::spectral::{bisect, jzz_at, CouplingLabels};
use crate::{ordinary, DMatrix, Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tunable parameters of the gate suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateOptions {
    /// Samples per ns on every channel.
    pub sample_rate: f64,
    /// Gaussian width of single-qubit pulses, ns.
    pub sigma: f64,
    /// Window length of single-qubit pulses, ns.
    pub xy_duration: f64,
    /// Bracket searched for the zero-`J_zz` idle amplitude, GHz.
    pub idle_bracket: [f64; 2],
    /// Initial plateau amplitude of the controlled-phase ramp, GHz.
    pub cz_plateau: f64,
    /// Scale of the adiabatic rate.
    pub ramp_k: f64,
    pub ramp_window: Window,
    /// Amplitude grid of the leakage profile, GHz.
    pub profile_points: usize,
    /// Tolerance on the conditional phase, rad.
    pub phase_tol: f64,
    pub max_phase_iterations: usize,
    /// Rounds of amplitude and carrier refinement of the `pi` pulses; zero
    /// keeps the values derived from the dressed spectrum.
    pub tune_rounds: usize,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            sample_rate: 2.0,
            sigma: 20.0,
            xy_duration: 100.0,
            idle_bracket: [0.005, 0.06],
            cz_plateau: 0.035,
            ramp_k: 0.3,
            ramp_window: Window::SineSquared,
            profile_points: 41,
            phase_tol: 1e-3,
            max_phase_iterations: 20,
            tune_rounds: 3,
        }
    }
}

/// Idle-point quantities derived from the dressed spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Drive amplitude with vanishing `J_zz`, GHz.
    pub epsilon_zero: f64,
    /// Lab-frame carriers of the two qubits, GHz.
    pub carriers: [f64; 2],
    /// `|<1~|a^dag|0~>|` for each qubit.
    pub matrix_elements: [f64; 2],
    /// Extra amplitude factor of each qubit's `pi` pulse found by simulation.
    pub amplitude_scale: [f64; 2],
}

/// Finds the idle amplitude and the single-qubit drive parameters.
pub fn calibrate(system: &SystemSpec, drive: &DriveSpec, opts: &GateOptions) -> Result<Calibration> {
    let labels = CouplingLabels::pair();
    let [a, b] = opts.idle_bracket;
    let fa = jzz_at(system, drive, &labels, a)?;
    let fb = jzz_at(system, drive, &labels, b)?;
    if fa * fb > 0.0 {
        return Err(Error::NoRoot);
    }
    let eps0 = bisect(|e| jzz_at(system, drive, &labels, e), a, b, 1e-10)?;
    let setup = idle_setup(system, drive.with_epsilon(eps0), VirtualZ::None);
    let dressed = setup.dressed_basis()?;
    let mut carriers = [0.0; 2];
    let mut elements = [0.0; 2];
    for q in 0..2 {
        let excited = if q == 0 { 2 } else { 1 };
        carriers[q] = ordinary(dressed.energies[excited] - dressed.energies[0]) + drive.frame();
        let mut raise = OperatorSum::new(&system.dims());
        raise.push_real(1.0, &[Monomial::new(q, 1, 0)])?;
        let raise = raise.materialize(&system.full_basis())?;
        let moved = raise.apply(&dressed.vectors.column(0).into_owned());
        elements[q] = dressed.vectors.column(excited).dotc(&moved).norm();
    }
    Ok(Calibration {
        epsilon_zero: eps0,
        carriers,
        matrix_elements: elements,
        amplitude_scale: [1.0, 1.0],
    })
}

fn idle_setup(system: &SystemSpec, drive: DriveSpec, virtual_z: VirtualZ) -> GateSetup {
    GateSetup {
        system: system.clone(),
        drive,
        qubits: [0, 1],
        virtual_z,
        propagation: PropagationOptions::default(),
    }
}

fn mathieu_channel(drive: &DriveSpec, cal: &Calibration) -> ChannelSpec {
    let mut spec = ChannelSpec::mathieu("mathieu", drive.mode, drive.omega_d, cal.epsilon_zero);
    if let crate::pulse::ChannelKind::Mathieu { phi, .. } = &mut spec.kind {
        *phi = drive.phi;
    }
    spec
}

fn xy_channel(q: usize, cal: &Calibration) -> ChannelSpec {
    ChannelSpec::xy(&format!("xy{}", q + 1), q, cal.carriers[q])
}

/// Gaussian `pi` rotation about `x` on qubit `q` (0 or 1) starting at `start` ns.
pub fn x_segment(q: usize, cal: &Calibration, opts: &GateOptions, start: f64) -> Result<Segment> {
    let env = gaussian_envelope(opts.sigma, opts.xy_duration, PI, 0.0, opts.sample_rate)?;
    Ok(Segment {
        channel: xy_channel(q, cal),
        waveform: env.samples.iter().map(|v| v * cal.amplitude_scale[q] / cal.matrix_elements[q]).collect(),
        start,
    })
}

/// Schedule of a `pi` pulse on each listed qubit, played simultaneously.
pub fn x_schedule(qubits: &[usize], cal: &Calibration, opts: &GateOptions) -> Result<PulseSchedule> {
    let segments = qubits
        .iter()
        .map(|&q| x_segment(q, cal, opts, 0.0))
        .collect::<Result<Vec<_>>>()?;
    compose_schedule(&segments, opts.sample_rate)
}

fn x_fidelity(system: &SystemSpec, drive: &DriveSpec, cal: &Calibration, q: usize, opts: &GateOptions) -> Result<f64> {
    let target = if q == 0 { ideal::xi() } else { ideal::ix() };
    let setup = idle_setup(system, drive.with_epsilon(cal.epsilon_zero), VirtualZ::Match(target.clone()));
    let map = simulate_gate(&setup, &x_schedule(&[q], cal, opts)?)?;
    Ok(gate_metrics(&chi_from_map(&map.map), &chi_from_map(&target))?.fidelity)
}

/// Vertex of the parabola through `(x - h, lo), (x, mid), (x + h, hi)`,
/// limited to two steps from `x`.
fn parabola_peak(x: f64, h: f64, lo: f64, mid: f64, hi: f64) -> f64 {
    let curv = hi - 2.0 * mid + lo;
    if curv >= 0.0 {
        return if hi > lo { x + 2.0 * h } else { x - 2.0 * h };
    }
    x - h * ((hi - lo) / (2.0 * curv)).clamp(-2.0, 2.0)
}

/// Tunes the amplitude factor and carrier of each qubit's `pi` pulse by
/// alternating one-dimensional parabolic searches on the simulated fidelity.
/// The Rabi rate of one qubit depends on the state of the other through the
/// dressing, and the pulse Stark-shifts its own transition; both effects are
/// absorbed here.
pub fn tune_single_qubit(system: &SystemSpec, drive: &DriveSpec, cal: &Calibration, opts: &GateOptions) -> Result<Calibration> {
    let tuned: Vec<(f64, f64)> = (0..2)
        .into_par_iter()
        .map(|q| {
            let mut c = cal.clone();
            let f = |c: &Calibration| x_fidelity(system, drive, c, q, opts);
            let (mut hs, mut hd) = (0.01, 5e-4);
            for _ in 0..opts.tune_rounds {
                let probe = |base: &Calibration, set: &dyn Fn(&mut Calibration, f64), x: f64, h: f64| -> Result<f64> {
                    let mut vals = [0.0; 3];
                    for (k, v) in vals.iter_mut().enumerate() {
                        let mut t = base.clone();
                        set(&mut t, x + (k as f64 - 1.0) * h);
                        *v = f(&t)?;
                    }
                    Ok(parabola_peak(x, h, vals[0], vals[1], vals[2]))
                };
                c.amplitude_scale[q] = probe(&c, &|t, v| t.amplitude_scale[q] = v, c.amplitude_scale[q], hs)?;
                c.carriers[q] = probe(&c, &|t, v| t.carriers[q] = v, c.carriers[q], hd)?;
                hs *= 0.5;
                hd *= 0.5;
            }
            Ok((c.amplitude_scale[q], c.carriers[q]))
        })
        .collect::<Result<_>>()?;
    let mut out = cal.clone();
    for (q, (s, d)) in tuned.into_iter().enumerate() {
        out.amplitude_scale[q] = s;
        out.carriers[q] = d;
    }
    Ok(out)
}

/// Leakage profile of `|11>` between the idle point and beyond the plateau.
pub fn cz_profile(system: &SystemSpec, drive: &DriveSpec, cal: &Calibration, opts: &GateOptions) -> Result<LeakageProfile> {
    let top = 1.5 * opts.cz_plateau.max(cal.epsilon_zero);
    let lo = 0.5 * cal.epsilon_zero;
    let n = opts.profile_points.max(2);
    let grid: Vec<f64> = (0..n).map(|i| lo + (top - lo) * i as f64 / (n - 1) as f64).collect();
    profile_leakage(system, drive, &grid, &BareLabel::new(vec![1, 1]))
}

/// Controlled-phase waveform: ramp up, hold, mirrored ramp down.
#[derive(Debug, Clone, PartialEq)]
pub struct CzWaveform {
    pub plateau: f64,
    pub ramp: AdiabaticRamp,
    pub hold_samples: usize,
    pub samples: Vec<f64>,
    /// `int J_zz dt` predicted from the static couplings, cycles.
    pub predicted_phase: f64,
}

struct JzzTable {
    eps: Vec<f64>,
    jzz: Vec<f64>,
}

impl JzzTable {
    fn new(system: &SystemSpec, drive: &DriveSpec, grid: &[f64]) -> Result<Self> {
        let labels = CouplingLabels::pair();
        let jzz = grid
            .par_iter()
            .map(|&e| jzz_at(system, drive, &labels, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(JzzTable { eps: grid.to_vec(), jzz })
    }

    fn at(&self, e: f64) -> f64 {
        let g = &self.eps;
        if e <= g[0] {
            return self.jzz[0];
        }
        if e >= g[g.len() - 1] {
            return self.jzz[g.len() - 1];
        }
        let i = g.partition_point(|&x| x <= e) - 1;
        let w = (e - g[i]) / (g[i + 1] - g[i]);
        self.jzz[i] + w * (self.jzz[i + 1] - self.jzz[i])
    }

    fn integral(&self, samples: &[f64], rate: f64) -> f64 {
        if samples.len() < 2 {
            return 0.0;
        }
        let f: Vec<f64> = samples.iter().map(|&e| self.at(e)).collect();
        (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1])) / rate
    }
}

fn cz_waveform(
    profile: &LeakageProfile,
    table: &JzzTable,
    cal: &Calibration,
    plateau: f64,
    hold_samples: Option<usize>,
    opts: &GateOptions,
) -> Result<CzWaveform> {
    let ramp = make_adiabatic_waveform(
        profile,
        opts.ramp_k,
        opts.ramp_window,
        cal.epsilon_zero,
        plateau,
        opts.sample_rate,
        &RampOptions::default(),
    )?;
    let ramp_phase = 2.0 * table.integral(&ramp.samples, opts.sample_rate);
    let j_hold = table.at(plateau);
    let hold = match hold_samples {
        Some(h) => h,
        None => {
            let remaining = 0.5 - ramp_phase.abs();
            if remaining < 0.0 {
                return Err(Error::Unreachable(format!(
                    "ramps to {plateau} GHz already exceed half a cycle of conditional phase"
                )));
            }
            if j_hold == 0.0 || j_hold.signum() != ramp_phase.signum() && ramp_phase != 0.0 {
                return Err(Error::Unreachable(format!("no conditional phase accumulates at {plateau} GHz")));
            }
            (remaining / j_hold.abs() * opts.sample_rate).round() as usize
        }
    };
    let mut samples = ramp.samples.clone();
    samples.extend(std::iter::repeat_n(plateau, hold));
    samples.extend(ramp.samples.iter().rev().skip(1));
    let predicted = table.integral(&samples, opts.sample_rate);
    Ok(CzWaveform {
        plateau,
        ramp,
        hold_samples: hold,
        samples,
        predicted_phase: predicted,
    })
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Result of the controlled-phase calibration.
#[derive(Debug, Clone)]
pub struct CzCalibration {
    pub waveform: CzWaveform,
    pub schedule: PulseSchedule,
    pub map: GateMap,
    pub phase_error: f64,
    pub iterations: usize,
}

/// Builds the controlled-phase ramp and tunes its plateau so the simulated
/// conditional phase equals `pi`.
pub fn calibrate_cz(system: &SystemSpec, drive: &DriveSpec, cal: &Calibration, opts: &GateOptions) -> Result<CzCalibration> {
    let profile = cz_profile(system, drive, cal, opts)?;
    let table = JzzTable::new(system, drive, &profile.eps_grid)?;
    let nominal = cz_waveform(&profile, &table, cal, opts.cz_plateau, None, opts)?;
    let hold = nominal.hold_samples;
    let setup = idle_setup(system, drive.with_epsilon(cal.epsilon_zero), VirtualZ::Match(ideal::cz()));
    let channel = mathieu_channel(drive, cal);
    let run = |plateau: f64| -> Result<(CzWaveform, PulseSchedule, GateMap, f64)> {
        let w = cz_waveform(&profile, &table, cal, plateau, Some(hold), opts)?;
        let schedule = compose_schedule(
            &[Segment {
                channel: channel.clone(),
                waveform: w.samples.clone(),
                start: 0.0,
            }],
            opts.sample_rate,
        )?;
        let map = simulate_gate(&setup, &schedule)?;
        let err = wrap(map.conditional_phase() - PI);
        Ok((w, schedule, map, err))
    };
    let mut x0 = opts.cz_plateau;
    let mut r0 = run(x0)?;
    let mut x1 = x0 * (1.0 + 0.02);
    let mut r1 = run(x1)?;
    let mut iterations = 2;
    while r1.3.abs() > opts.phase_tol {
        if iterations >= opts.max_phase_iterations {
            return Err(Error::NoConvergence {
                iterations,
                converged: 0,
                requested: 1,
            });
        }
        let slope = (r1.3 - r0.3) / (x1 - x0);
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::Unreachable("conditional phase does not respond to the plateau".into()));
        }
        let step = (-r1.3 / slope).clamp(-0.2 * x1, 0.2 * x1);
        let x2 = x1 + step;
        if x2 <= cal.epsilon_zero || x2 >= *profile.eps_grid.last().unwrap() {
            return Err(Error::Unreachable(format!("plateau left the profiled range at {x2} GHz")));
        }
        x0 = x1;
        r0 = r1;
        x1 = x2;
        r1 = run(x1)?;
        iterations += 1;
    }
    let (waveform, schedule, map, phase_error) = r1;
    Ok(CzCalibration {
        waveform,
        schedule,
        map,
        phase_error,
        iterations,
    })
}

/// Outcome of one gate of the suite.
#[derive(Debug, Clone)]
pub struct GateResult {
    pub name: String,
    pub chi: ProcessMatrix,
    pub ideal_chi: ProcessMatrix,
    pub metrics: GateMetrics,
    pub map: GateMap,
    pub schedule: PulseSchedule,
}

impl GateResult {
    pub fn conditional_phase(&self) -> f64 {
        self.map.conditional_phase()
    }
}

/// Calibration and the four simulated gates `XI, IX, XX, CZ`.
#[derive(Debug, Clone)]
pub struct GateSuite {
    pub calibration: Calibration,
    pub gates: Vec<GateResult>,
    pub cz_plateau: f64,
    pub cz_hold: f64,
}

impl GateSuite {
    pub fn gate(&self, name: &str) -> Option<&GateResult> {
        self.gates.iter().find(|g| g.name == name)
    }
}

fn finish(name: &str, target: DMatrix<C64>, map: GateMap, schedule: PulseSchedule) -> Result<GateResult> {
    let chi = chi_from_map(&map.map);
    let ideal_chi = chi_from_map(&target);
    let metrics = gate_metrics(&chi, &ideal_chi)?;
    Ok(GateResult {
        name: name.into(),
        chi,
        ideal_chi,
        metrics,
        map,
        schedule,
    })
}

/// Calibrates the idle point and runs the four reference gates.
pub fn run_suite(system: &SystemSpec, drive: &DriveSpec, opts: &GateOptions) -> Result<GateSuite> {
    if system.n_modes() != 2 {
        return Err(Error::InvalidInput("the gate suite needs exactly two modes".into()));
    }
    drive.validate(system)?;
    let mut cal = calibrate(system, drive, opts)?;
    if opts.tune_rounds > 0 {
        cal = tune_single_qubit(system, drive, &cal, opts)?;
    }
    let idle = drive.with_epsilon(cal.epsilon_zero);
    let single: Vec<(&str, Vec<usize>, DMatrix<C64>)> = vec![
        ("XI", vec![0], ideal::xi()),
        ("IX", vec![1], ideal::ix()),
        ("XX", vec![0, 1], ideal::xx()),
    ];
    let mut gates = single
        .into_par_iter()
        .map(|(name, qubits, target)| {
            let schedule = x_schedule(&qubits, &cal, opts)?;
            let setup = idle_setup(system, idle, VirtualZ::Match(target.clone()));
            let map = simulate_gate(&setup, &schedule)?;
            finish(name, target, map, schedule)
        })
        .collect::<Result<Vec<_>>>()?;
    let cz = calibrate_cz(system, drive, &cal, opts)?;
    let hold = cz.waveform.hold_samples as f64 / opts.sample_rate;
    let plateau = cz.waveform.plateau;
    gates.push(finish("CZ", ideal::cz(), cz.map, cz.schedule)?);
    Ok(GateSuite {
        calibration: cal,
        gates,
        cz_plateau: plateau,
        cz_hold: hold,
    })
}
