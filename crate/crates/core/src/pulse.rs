//! Control waveforms: adiabatic two-photon drive ramps shaped by a leakage
//! sensitivity profile, Gaussian microwave envelopes, and multi-channel
//! schedules with a plain-text serialization.

use crate::composite::{BareLabel, Monomial, OperatorSum, SystemSpec};
use crate::models::DriveSpec;
use crate::spectral::{assign_dressed, eigensystem};
use crate::{ordinary, Error, Result, C64};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Leakage sensitivity of a dressed target state along a drive-amplitude grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageProfile {
    /// Amplitudes in GHz, strictly increasing.
    pub eps_grid: Vec<f64>,
    /// `S = sum_k |<k|H_leak|target>| / |E_k - E_target|` in 1/GHz.
    pub sensitivity: Vec<f64>,
    /// Smallest `|E_k - E_target|` over leakage states, GHz.
    pub gap: Vec<f64>,
    pub target_label: BareLabel,
}

impl LeakageProfile {
    /// Builds a profile from precomputed values after checking its invariants.
    pub fn new(eps_grid: Vec<f64>, sensitivity: Vec<f64>, gap: Vec<f64>, target_label: BareLabel) -> Result<Self> {
        if eps_grid.is_empty() || eps_grid.len() != sensitivity.len() || eps_grid.len() != gap.len() {
            return Err(Error::InvalidInput("profile arrays must be non-empty and equally long".into()));
        }
        if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("profile grid must be strictly increasing".into()));
        }
        if sensitivity.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidInput("sensitivity must be non-negative".into()));
        }
        if let Some(i) = gap.iter().position(|g| !(*g > 0.0)) {
            return Err(Error::ZeroGap(format!("{target_label} at eps = {}", eps_grid[i])));
        }
        Ok(LeakageProfile {
            eps_grid,
            sensitivity,
            gap,
            target_label,
        })
    }

    /// Allowed rate `gap / S` at grid sample `i` (GHz^2); infinite when `S = 0`.
    fn rate_at(&self, i: usize) -> f64 {
        if self.sensitivity[i] == 0.0 {
            f64::INFINITY
        } else {
            self.gap[i] / self.sensitivity[i]
        }
    }
}

/// All bare labels with every occupation in `{0, 1}`.
pub fn qubit_labels(n_modes: usize) -> Vec<BareLabel> {
    (0..(1usize << n_modes))
        .map(|bits| BareLabel::new((0..n_modes).rev().map(|k| ((bits >> k) & 1) as u8).collect()))
        .collect()
}

/// Leakage profile with the computational subspace taken as every state with
/// occupations in `{0, 1}`.
pub fn profile_leakage(system: &SystemSpec, drive: &DriveSpec, eps_grid: &[f64], target: &BareLabel) -> Result<LeakageProfile> {
    profile_leakage_with(system, drive, eps_grid, target, &qubit_labels(system.n_modes()))
}

/// Leakage profile relative to an explicit computational subspace.
pub fn profile_leakage_with(
    system: &SystemSpec,
    drive: &DriveSpec,
    eps_grid: &[f64],
    target: &BareLabel,
    computational: &[BareLabel],
) -> Result<LeakageProfile> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidInput("empty amplitude grid".into()));
    }
    let mut labels = computational.to_vec();
    if !labels.contains(target) {
        labels.push(target.clone());
    }
    let basis = system.full_basis();
    let mut leak = OperatorSum::new(&system.dims());
    leak.push_with_adjoint(C64::new(1.0, 0.0), &[Monomial::new(drive.mode, 0, 2)])?;
    let leak = leak.materialize(&basis)?;
    let rows: Vec<(f64, f64)> = eps_grid
        .par_iter()
        .map(|&e| {
            let h = crate::models::build_rwa(system, &drive.with_epsilon(e))?;
            let spec = assign_dressed(eigensystem(&h)?, basis.clone(), &labels)?;
            let t = spec.state(target)?;
            if t.overlap < 0.5 {
                return Err(Error::TrackingLost {
                    label: target.to_string(),
                    overlap: t.overlap,
                });
            }
            let mut inside = vec![false; spec.energies.len()];
            for s in &spec.assigned {
                if computational.contains(&s.label) || s.label == *target {
                    inside[s.index] = true;
                }
            }
            let psi_t = spec.vectors.column(t.index).into_owned();
            let h_psi = leak.apply(&psi_t);
            let mut s_sum = 0.0;
            let mut gap = f64::INFINITY;
            for k in (0..spec.energies.len()).filter(|&k| !inside[k]) {
                let de = ordinary(spec.energies[k] - t.energy).abs();
                gap = gap.min(de);
                let elem = spec.vectors.column(k).dotc(&h_psi).norm();
                if de == 0.0 {
                    if elem > 0.0 {
                        return Err(Error::ZeroGap(format!("{target} at eps = {e}")));
                    }
                    continue;
                }
                s_sum += elem / de;
            }
            Ok((s_sum, gap))
        })
        .collect::<Result<_>>()?;
    let (sensitivity, gap): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let mut grid = eps_grid.to_vec();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    grid = order.iter().map(|&i| eps_grid[i]).collect();
    LeakageProfile::new(
        grid,
        order.iter().map(|&i| sensitivity[i]).collect(),
        order.iter().map(|&i| gap[i]).collect(),
        target.clone(),
    )
}

/// Time window multiplying the adiabatic rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    SineSquared,
    Flat,
}

impl Window {
    pub fn value(&self, tau: f64) -> f64 {
        match self {
            Window::SineSquared => {
                let s = (std::f64::consts::PI * tau).sin();
                s * s
            }
            Window::Flat => 1.0,
        }
    }

    /// Largest value of the window.
    pub fn peak(&self) -> f64 {
        1.0
    }
}

/// Limits of the ramp construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampOptions {
    /// Upper bound on `|d eps / dt|` in GHz/ns, used where `S` vanishes.
    pub max_slew: f64,
    pub max_iterations: usize,
    /// Convergence tolerance of the total duration, ns.
    pub duration_tol: f64,
}

impl Default for RampOptions {
    fn default() -> Self {
        RampOptions {
            max_slew: 0.01,
            max_iterations: 50,
            duration_tol: 1e-3,
        }
    }
}

/// A sampled adiabatic ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticRamp {
    /// Amplitudes (GHz) at `t_i = i / sample_rate`.
    pub samples: Vec<f64>,
    /// Duration (ns) of the continuous solution.
    pub duration: f64,
    pub sample_rate: f64,
    pub iterations: usize,
}

impl AdiabaticRamp {
    /// Duration covered by the samples, `(len - 1) / sample_rate`.
    pub fn sampled_duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate
    }
}

/// Piecewise-linear allowed rate `R(eps) = min(gap/S, max_slew/k)`, held
/// constant beyond the grid ends.
struct RateCurve<'a> {
    profile: &'a LeakageProfile,
    cap: f64,
}

impl RateCurve<'_> {
    fn at(&self, e: f64) -> f64 {
        let g = &self.profile.eps_grid;
        let r = |i: usize| self.profile.rate_at(i).min(self.cap);
        if g.len() == 1 || e <= g[0] {
            return r(0);
        }
        if e >= g[g.len() - 1] {
            return r(g.len() - 1);
        }
        let i = g.partition_point(|&x| x <= e) - 1;
        let (a, b) = (r(i), r(i + 1));
        let w = (e - g[i]) / (g[i + 1] - g[i]);
        a + w * (b - a)
    }

    /// `int_a^b de / R(e)` by composite Simpson on each grid cell.
    fn inverse_integral(&self, a: f64, b: f64) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut knots = vec![lo];
        knots.extend(self.profile.eps_grid.iter().copied().filter(|&x| x > lo && x < hi));
        knots.push(hi);
        let mut total = 0.0;
        for w in knots.windows(2) {
            let n = 32;
            let h = (w[1] - w[0]) / n as f64;
            if h == 0.0 {
                continue;
            }
            let f = |x: f64| 1.0 / self.at(x);
            let mut s = f(w[0]) + f(w[1]);
            for j in 1..n {
                s += f(w[0] + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            total += s * h / 3.0;
        }
        sign * total
    }
}

/// Integrates `d eps/d tau = sign k T R(eps) f(tau)` over `tau in [0, 1]`
/// with classical RK4 on `m` steps.
fn integrate_ramp(curve: &RateCurve, window: Window, k: f64, t: f64, e0: f64, sign: f64, m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let rhs = |tau: f64, e: f64| sign * k * t * curve.at(e) * window.value(tau);
    let mut out = Vec::with_capacity(m + 1);
    let mut e = e0;
    out.push(e);
    for i in 0..m {
        let tau = i as f64 * h;
        let k1 = rhs(tau, e);
        let k2 = rhs(tau + 0.5 * h, e + 0.5 * h * k1);
        let k3 = rhs(tau + 0.5 * h, e + 0.5 * h * k2);
        let k4 = rhs(tau + h, e + h * k3);
        e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(e);
    }
    out
}

/// Synthesizes a monotone ramp from `eps_start` to `eps_end` (GHz) whose
/// speed follows `k * gap/S * f(tau)`. The total duration `T` is found by a
/// fixed-point iteration on the integrated ramp.
pub fn make_adiabatic_waveform(
    profile: &LeakageProfile,
    k: f64,
    window: Window,
    eps_start: f64,
    eps_end: f64,
    sample_rate: f64,
    opts: &RampOptions,
) -> Result<AdiabaticRamp> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("ramp scale k must be positive, got {k}")));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::InvalidInput("sample rate must be positive".into()));
    }
    let (lo, hi) = (profile.eps_grid[0], *profile.eps_grid.last().unwrap());
    for e in [eps_start, eps_end] {
        if !(e >= lo - 1e-12 && e <= hi + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "ramp endpoint {e} outside the profile grid [{lo}, {hi}]"
            )));
        }
    }
    if eps_start == eps_end {
        return Ok(AdiabaticRamp {
            samples: vec![eps_start],
            duration: 0.0,
            sample_rate,
            iterations: 0,
        });
    }
    let cap = opts.max_slew / k;
    let curve = RateCurve { profile, cap };
    if (0..profile.eps_grid.len()).any(|i| !curve.at(profile.eps_grid[i]).is_finite()) {
        return Err(Error::InvalidInput(
            "unbounded ramp rate: sensitivity vanishes and no finite slew cap is set".into(),
        ));
    }
    let sign = (eps_end - eps_start).signum();
    let g_total = curve.inverse_integral(eps_start, eps_end).abs();
    // Exact for a perfect integrator: T = G / (k * int_0^1 f).
    let f_mean = match window {
        Window::Flat => 1.0,
        Window::SineSquared => 0.5,
    };
    let mut t = g_total / (k * f_mean);
    let m = 4000;
    let mut path = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iterations {
        iterations = it;
        path = integrate_ramp(&curve, window, k, t, eps_start, sign, m);
        let reached = curve.inverse_integral(eps_start, *path.last().unwrap()).abs();
        if reached <= 0.0 {
            return Err(Error::InvalidInput("ramp made no progress".into()));
        }
        let next = t * g_total / reached;
        let delta = (next - t).abs();
        t = next;
        if delta < opts.duration_tol {
            path = integrate_ramp(&curve, window, k, t, eps_start, sign, m);
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Unreachable(format!(
            "ramp duration did not converge within {} iterations",
            opts.max_iterations
        )));
    }
    let n = ((t * sample_rate).ceil() as usize).max(1);
    let (emin, emax) = (eps_start.min(eps_end), eps_start.max(eps_end));
    let mut samples = Vec::with_capacity(n + 1);
    let mut last = eps_start;
    for i in 0..=n {
        let x = i as f64 / n as f64 * m as f64;
        let j = (x.floor() as usize).min(m - 1);
        let w = x - j as f64;
        let mut v = path[j] + w * (path[j + 1] - path[j]);
        v = v.clamp(emin, emax);
        // Keep the sampled ramp monotone.
        v = if sign > 0.0 { v.max(last) } else { v.min(last) };
        last = v;
        samples.push(v);
    }
    samples[0] = eps_start;
    samples[n] = eps_end;
    Ok(AdiabaticRamp {
        samples,
        duration: t,
        sample_rate,
        iterations,
    })
}

/// A sampled microwave envelope in angular units (rad/ns).
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub samples: Vec<f64>,
    /// Carrier offset from the channel frequency, GHz.
    pub detuning: f64,
    pub sample_rate: f64,
}

impl Envelope {
    /// Trapezoidal area of the envelope, i.e. the rotation angle it produces
    /// on a resonant two-level system.
    pub fn area(&self) -> f64 {
        trapezoid(&self.samples, 1.0 / self.sample_rate)
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len().max(1) - 1) as f64 / self.sample_rate
    }
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    dt * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[y.len() - 1]))
}

/// Truncated, baseline-subtracted Gaussian of width `sigma` (ns) centred in
/// a window of `duration` (ns), scaled to rotate by `target_angle` radians.
pub fn gaussian_envelope(sigma: f64, duration: f64, target_angle: f64, detuning: f64, sample_rate: f64) -> Result<Envelope> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput("sigma must be positive".into()));
    }
    if duration < 4.0 * sigma {
        return Err(Error::InvalidInput(format!(
            "envelope duration {duration} ns shorter than 4 sigma = {} ns",
            4.0 * sigma
        )));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::InvalidInput("sample rate must be positive".into()));
    }
    let n = (duration * sample_rate).round() as usize;
    let n = n.max(2);
    let centre = 0.5 * n as f64 / sample_rate;
    let base = (-(centre * centre) / (2.0 * sigma * sigma)).exp();
    let shape: Vec<f64> = (0..=n)
        .map(|i| {
            let t = i as f64 / sample_rate - centre;
            (-(t * t) / (2.0 * sigma * sigma)).exp() - base
        })
        .collect();
    let area = trapezoid(&shape, 1.0 / sample_rate);
    let scale = if target_angle == 0.0 { 0.0 } else { target_angle / area };
    let mut samples: Vec<f64> = shape.iter().map(|v| v * scale).collect();
    samples[0] = 0.0;
    samples[n] = 0.0;
    Ok(Envelope {
        samples,
        detuning,
        sample_rate,
    })
}

/// Physical role of a control channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    /// Two-photon drive amplitude (GHz) on `mode` at `omega_d` GHz.
    Mathieu { mode: usize, omega_d: f64, phi: f64 },
    /// Microwave envelope (rad/ns) on `mode` with a lab-frame carrier in GHz.
    Xy { mode: usize, carrier: f64 },
}

impl ChannelKind {
    pub fn mode(&self) -> usize {
        match self {
            ChannelKind::Mathieu { mode, .. } | ChannelKind::Xy { mode, .. } => *mode,
        }
    }
}

/// Channel declaration shared by segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub name: String,
    pub kind: ChannelKind,
    /// Value held outside segments.
    pub idle: f64,
}

impl ChannelSpec {
    pub fn mathieu(name: &str, mode: usize, omega_d: f64, idle: f64) -> Self {
        ChannelSpec {
            name: name.into(),
            kind: ChannelKind::Mathieu { mode, omega_d, phi: 0.0 },
            idle,
        }
    }

    pub fn xy(name: &str, mode: usize, carrier: f64) -> Self {
        ChannelSpec {
            name: name.into(),
            kind: ChannelKind::Xy { mode, carrier },
            idle: 0.0,
        }
    }
}

/// A waveform placed on a channel at `start` ns.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub channel: ChannelSpec,
    pub waveform: Vec<f64>,
    pub start: f64,
}

/// A sampled channel of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub spec: ChannelSpec,
    pub samples: Vec<f64>,
}

/// Multi-channel waveform on a common time base `t_i = i / sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub sample_rate: f64,
    pub channels: Vec<Channel>,
    intervals: usize,
}

impl PulseSchedule {
    pub fn empty(sample_rate: f64) -> Self {
        PulseSchedule {
            sample_rate,
            channels: Vec::new(),
            intervals: 0,
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.intervals as f64 / self.sample_rate
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        self.intervals == 0
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.spec.name == name)
    }

    /// Serializes to the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "mathieu-schedule 1").unwrap();
        writeln!(s, "sample_rate {:?}", self.sample_rate).unwrap();
        writeln!(s, "samples {}", self.len()).unwrap();
        for c in &self.channels {
            match c.spec.kind {
                ChannelKind::Mathieu { mode, omega_d, phi } => writeln!(
                    s,
                    "channel {} mathieu {} {:?} {:?} {:?}",
                    c.spec.name, mode, omega_d, phi, c.spec.idle
                ),
                ChannelKind::Xy { mode, carrier } => {
                    writeln!(s, "channel {} xy {} {:?} {:?}", c.spec.name, mode, carrier, c.spec.idle)
                }
            }
            .unwrap();
        }
        writeln!(s, "data").unwrap();
        for i in 0..self.len() {
            for c in &self.channels {
                writeln!(s, "{} {} {:?}", i, c.spec.name, c.samples[i]).unwrap();
            }
        }
        s
    }

    /// Parses the output of [`PulseSchedule::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse(format!("schedule line {}: {msg}", line + 1));
        let num = |tok: Option<&str>, line: usize| -> Result<f64> {
            tok.ok_or_else(|| perr(line, "missing number"))?
                .parse::<f64>()
                .map_err(|_| perr(line, "invalid number"))
        };
        let int = |tok: Option<&str>, line: usize| -> Result<usize> {
            tok.ok_or_else(|| perr(line, "missing integer"))?
                .parse::<usize>()
                .map_err(|_| perr(line, "invalid integer"))
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "mathieu-schedule 1")) => {}
            _ => return Err(perr(0, "missing header")),
        }
        let mut rate = None;
        let mut n = None;
        let mut specs: Vec<ChannelSpec> = Vec::new();
        for (ln, line) in lines.by_ref() {
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("sample_rate") => rate = Some(num(tok.next(), ln)?),
                Some("samples") => n = Some(int(tok.next(), ln)?),
                Some("channel") => {
                    let name = tok.next().ok_or_else(|| perr(ln, "missing channel name"))?.to_string();
                    let kind = tok.next();
                    let mode = int(tok.next(), ln)?;
                    let spec = match kind {
                        Some("mathieu") => {
                            let omega_d = num(tok.next(), ln)?;
                            let phi = num(tok.next(), ln)?;
                            let idle = num(tok.next(), ln)?;
                            ChannelSpec {
                                name,
                                kind: ChannelKind::Mathieu { mode, omega_d, phi },
                                idle,
                            }
                        }
                        Some("xy") => {
                            let carrier = num(tok.next(), ln)?;
                            let idle = num(tok.next(), ln)?;
                            ChannelSpec {
                                name,
                                kind: ChannelKind::Xy { mode, carrier },
                                idle,
                            }
                        }
                        _ => return Err(perr(ln, "unknown channel kind")),
                    };
                    if specs.iter().any(|s| s.name == spec.name) {
                        return Err(perr(ln, "duplicate channel"));
                    }
                    specs.push(spec);
                }
                Some("data") => break,
                Some(_) => return Err(perr(ln, "unexpected directive")),
                None => continue,
            }
        }
        let rate = rate.ok_or_else(|| Error::Parse("schedule without sample_rate".into()))?;
        let n = n.ok_or_else(|| Error::Parse("schedule without sample count".into()))?;
        if n == 0 {
            return Err(Error::Parse("schedule must hold at least one sample".into()));
        }
        let mut channels: Vec<Channel> = specs
            .into_iter()
            .map(|spec| Channel {
                samples: vec![f64::NAN; n],
                spec,
            })
            .collect();
        for (ln, line) in lines {
            let mut tok = line.split_whitespace();
            let Some(first) = tok.next() else { continue };
            let i = first.parse::<usize>().map_err(|_| perr(ln, "invalid sample index"))?;
            let name = tok.next().ok_or_else(|| perr(ln, "missing channel"))?;
            let v = num(tok.next(), ln)?;
            let ch = channels
                .iter_mut()
                .find(|c| c.spec.name == name)
                .ok_or_else(|| perr(ln, "undeclared channel"))?;
            *ch.samples.get_mut(i).ok_or_else(|| perr(ln, "sample index out of range"))? = v;
        }
        if channels.iter().any(|c| c.samples.iter().any(|v| v.is_nan())) {
            return Err(Error::Parse("schedule has missing samples".into()));
        }
        Ok(PulseSchedule {
            sample_rate: rate,
            channels,
            intervals: n - 1,
        })
    }
}

/// Merges segments onto a common time base. Channels keep their idle value
/// outside segments; segments on one channel may touch but not overlap.
pub fn compose_schedule(segments: &[Segment], sample_rate: f64) -> Result<PulseSchedule> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::InvalidInput("sample rate must be positive".into()));
    }
    let mut placed: Vec<(usize, usize, &Segment)> = Vec::new();
    for seg in segments {
        if seg.channel.name.is_empty() || seg.channel.name.contains(char::is_whitespace) {
            return Err(Error::Schedule(format!("invalid channel name {:?}", seg.channel.name)));
        }
        if seg.waveform.is_empty() {
            return Err(Error::Schedule(format!("empty waveform on {}", seg.channel.name)));
        }
        let tol = 1e-9 * seg.channel.idle.abs().max(1.0);
        let (first, last) = (seg.waveform[0], *seg.waveform.last().unwrap());
        if (first - seg.channel.idle).abs() > tol || (last - seg.channel.idle).abs() > tol {
            return Err(Error::Schedule(format!(
                "waveform on {} must start and end at the idle value {}",
                seg.channel.name, seg.channel.idle
            )));
        }
        let pos = seg.start * sample_rate;
        if !(seg.start >= 0.0) || (pos - pos.round()).abs() > 1e-6 {
            return Err(Error::Schedule(format!(
                "segment start {} ns is not on the sample grid",
                seg.start
            )));
        }
        let s = pos.round() as usize;
        placed.push((s, s + seg.waveform.len() - 1, seg));
    }
    let mut specs: Vec<ChannelSpec> = Vec::new();
    for (_, _, seg) in &placed {
        match specs.iter().find(|c| c.name == seg.channel.name) {
            Some(c) if *c != seg.channel => {
                return Err(Error::Schedule(format!(
                    "channel {} declared with conflicting settings",
                    seg.channel.name
                )))
            }
            Some(_) => {}
            None => specs.push(seg.channel.clone()),
        }
    }
    for (i, a) in placed.iter().enumerate() {
        for b in &placed[i + 1..] {
            if a.2.channel.name == b.2.channel.name && a.0 < b.1 && b.0 < a.1 {
                return Err(Error::Schedule(format!("overlapping segments on {}", a.2.channel.name)));
            }
        }
    }
    let intervals = placed.iter().map(|p| p.1).max().unwrap_or(0);
    let mut channels: Vec<Channel> = specs
        .into_iter()
        .map(|spec| Channel {
            samples: vec![spec.idle; intervals + 1],
            spec,
        })
        .collect();
    for (s, _, seg) in &placed {
        let ch = channels.iter_mut().find(|c| c.spec.name == seg.channel.name).unwrap();
        ch.samples[*s..*s + seg.waveform.len()].copy_from_slice(&seg.waveform);
    }
    Ok(PulseSchedule {
        sample_rate,
        channels,
        intervals,
    })
}
