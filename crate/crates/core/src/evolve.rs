//! Time-dependent Schrödinger propagation, gate simulation and process
//! tomography in the two-qubit Pauli basis.

use crate::composite::{BareLabel, Matrix, Monomial, Operator, OperatorSum, SystemSpec};
use crate::krylov::{KrylovOptions, KrylovPropagator};
use crate::linalg::{expm_apply, hermitian_eigen};
use crate::models::{mathieu_generator, static_terms, DriveSpec};
use crate::pulse::{ChannelKind, PulseSchedule};
use crate::spectral::assign_dressed;
use crate::{angular, DMatrix, DVector, Error, Result, C64};
use rayon::prelude::*;
use std::sync::Arc;

/// Coefficient of a time-dependent term, a function of time in ns.
pub type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// `c(t) A`, plus `conj(c(t)) A^dag` when `with_adjoint` is set, so that the
/// total Hamiltonian stays Hermitian.
#[derive(Clone)]
pub struct TimeTerm {
    pub op: DMatrix<C64>,
    pub coeff: Coefficient,
    pub with_adjoint: bool,
}

impl TimeTerm {
    pub fn new(op: DMatrix<C64>, coeff: Coefficient, with_adjoint: bool) -> Self {
        TimeTerm { op, coeff, with_adjoint }
    }

    fn add_into(&self, h: &mut DMatrix<C64>, t: f64) {
        let c = (self.coeff)(t);
        if c == C64::new(0.0, 0.0) {
            return;
        }
        if self.with_adjoint {
            let n = h.nrows();
            for j in 0..n {
                for i in 0..n {
                    let a = self.op[(i, j)];
                    let b = self.op[(j, i)].conj();
                    h[(i, j)] += c * a + c.conj() * b;
                }
            }
        } else {
            h.zip_apply(&self.op, |x, a| *x += c * a);
        }
    }
}

/// Uniformly sampled signal with monotone C1 cubic interpolation
/// (Fritsch-Butland slopes), constant outside the sampled range. The
/// interpolant never overshoots the samples, so a stretch of equal samples
/// stays exactly flat.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    rate: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, rate: f64) -> Self {
        assert!(!samples.is_empty(), "a signal needs at least one sample");
        SampledSignal { samples, rate }
    }

    /// Slope per sample interval at node `k`; the end nodes see a flat
    /// continuation.
    fn slope(&self, k: usize) -> f64 {
        let n = self.samples.len();
        let left = if k == 0 { 0.0 } else { self.samples[k] - self.samples[k - 1] };
        let right = if k + 1 >= n { 0.0 } else { self.samples[k + 1] - self.samples[k] };
        if left * right <= 0.0 {
            0.0
        } else {
            2.0 * left * right / (left + right)
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let x = t * self.rate;
        if x <= 0.0 || n == 1 {
            return self.samples[0];
        }
        if x >= (n - 1) as f64 {
            return self.samples[n - 1];
        }
        let i = x.floor() as usize;
        let u = x - i as f64;
        let (p1, p2) = (self.samples[i], self.samples[i + 1]);
        let (d1, d2) = (self.slope(i), self.slope(i + 1));
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p1 + (u3 - 2.0 * u2 + u) * d1 + (-2.0 * u3 + 3.0 * u2) * p2 + (u3 - u2) * d2
    }
}

/// Settings of [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Local error bound per accepted step.
    pub local_tol: f64,
    /// Largest step, ns.
    pub max_step: f64,
    /// Smallest step before giving up, ns.
    pub min_step: f64,
    /// Norm drift that aborts a run.
    pub abort_drift: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            local_tol: 1e-10,
            max_step: 1.0,
            min_step: 1e-9,
            abort_drift: 1e-6,
        }
    }
}

/// States at the requested times; each entry holds one column per initial
/// state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<C64>>,
    pub steps: usize,
    /// Largest `| ||psi|| - 1 |` seen at the output times.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &DMatrix<C64> {
        self.states.last().expect("non-empty trajectory")
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Fourth-order commutator-free Magnus step with two exponentials.
fn cf4_step(h_at: &dyn Fn(f64) -> DMatrix<C64>, psi: &DMatrix<C64>, t: f64, h: f64) -> DMatrix<C64> {
    let a1 = (3.0 - 2.0 * SQRT3) / 12.0;
    let a2 = (3.0 + 2.0 * SQRT3) / 12.0;
    let h1 = h_at(t + (0.5 - SQRT3 / 6.0) * h);
    let h2 = h_at(t + (0.5 + SQRT3 / 6.0) * h);
    let first = &h1 * C64::new(a2, 0.0) + &h2 * C64::new(a1, 0.0);
    let second = h1 * C64::new(a1, 0.0) + h2 * C64::new(a2, 0.0);
    let mid = expm_apply(&first, psi, h);
    expm_apply(&second, &mid, h)
}

fn max_norm_drift(block: &DMatrix<C64>) -> f64 {
    block
        .column_iter()
        .map(|c| (c.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Propagates the columns of `psi0` under `H(t) = H_static + sum_k terms_k(t)`
/// and records them at `t_grid` (ns, non-decreasing, starting at the initial
/// time). Time-independent problems are solved exactly by diagonalization or
/// Krylov exponentiation; otherwise an adaptive fourth-order
/// commutator-free Magnus integrator with step doubling is used.
pub fn propagate(
    h_static: &Operator,
    terms: &[TimeTerm],
    psi0: &DMatrix<C64>,
    t_grid: &[f64],
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let n = h_static.dim();
    if psi0.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.nrows(),
        });
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("time grid must be finite and non-decreasing".into()));
    }
    if max_norm_drift(psi0) > 1e-8 {
        return Err(Error::InvalidInput("initial states must be normalized".into()));
    }
    if !h_static.is_hermitian() {
        return Err(Error::NonHermitian {
            deviation: h_static.hermitian_deviation(),
        });
    }
    for term in terms {
        if term.op.nrows() != n || term.op.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: term.op.nrows(),
            });
        }
    }
    if terms.is_empty() {
        return propagate_static(h_static, psi0, t_grid, opts);
    }
    let h0 = match h_static.matrix() {
        Matrix::Dense(m) => m.clone(),
        Matrix::Sparse(_) => {
            return Err(Error::InvalidInput(
                "time-dependent propagation needs a dense Hamiltonian".into(),
            ))
        }
    };
    let h_at = |t: f64| {
        let mut h = h0.clone();
        for term in terms {
            term.add_into(&mut h, t);
        }
        h
    };
    let mut psi = psi0.clone();
    let mut t = t_grid[0];
    let mut step = opts.max_step.min(0.01);
    let mut states = vec![psi.clone()];
    let mut steps = 0;
    let mut drift_seen: f64 = max_norm_drift(&psi);
    for &target in &t_grid[1..] {
        while t < target {
            let remaining = target - t;
            let h = step.min(remaining).min(opts.max_step);
            let full = cf4_step(&h_at, &psi, t, h);
            let half = cf4_step(&h_at, &psi, t, 0.5 * h);
            let two = cf4_step(&h_at, &half, t + 0.5 * h, 0.5 * h);
            let err = (&full - &two)
                .column_iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max)
                / 15.0;
            if err <= opts.local_tol {
                psi = two;
                t = if h == remaining { target } else { t + h };
                steps += 1;
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (opts.local_tol / err).powf(0.2)).clamp(0.2, 4.0) };
                // Steps clipped by the grid keep the previous proposal.
                if h <= step {
                    step = step.max(h * grow);
                } else {
                    step = h * grow;
                }
            } else {
                step = h * (0.9 * (opts.local_tol / err).powf(0.2)).clamp(0.1, 0.9);
                if step < opts.min_step {
                    return Err(Error::StepUnderflow { t, step });
                }
            }
        }
        let drift = max_norm_drift(&psi);
        drift_seen = drift_seen.max(drift);
        if drift > opts.abort_drift {
            return Err(Error::NormDrift { t, drift });
        }
        states.push(psi.clone());
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        steps,
        max_norm_drift: drift_seen,
    })
}

fn propagate_static(h: &Operator, psi0: &DMatrix<C64>, t_grid: &[f64], opts: &PropagationOptions) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(t_grid.len());
    let mut drift_seen: f64 = 0.0;
    let t0 = t_grid[0];
    match h.matrix() {
        Matrix::Dense(m) => {
            let eig = hermitian_eigen(m)?;
            let coeffs = eig.vectors.adjoint() * psi0;
            for &t in t_grid {
                let dt = t - t0;
                let mut c = coeffs.clone();
                for (r, e) in eig.values.iter().enumerate() {
                    let ph = C64::from_polar(1.0, -e * dt);
                    for j in 0..c.ncols() {
                        c[(r, j)] *= ph;
                    }
                }
                let psi = &eig.vectors * c;
                let drift = max_norm_drift(&psi);
                drift_seen = drift_seen.max(drift);
                if drift > opts.abort_drift {
                    return Err(Error::NormDrift { t, drift });
                }
                states.push(psi);
            }
        }
        Matrix::Sparse(m) => {
            let cols: Vec<Vec<DVector<C64>>> = (0..psi0.ncols())
                .into_par_iter()
                .map(|j| {
                    let mut prop = KrylovPropagator::new(m, KrylovOptions::default());
                    let mut psi = psi0.column(j).into_owned();
                    let mut out = vec![psi.clone()];
                    for w in t_grid.windows(2) {
                        psi = prop.apply(&psi, w[1] - w[0])?;
                        out.push(psi.clone());
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            for (i, &t) in t_grid.iter().enumerate() {
                let block = DMatrix::from_fn(psi0.nrows(), psi0.ncols(), |r, c| cols[c][i][r]);
                let drift = max_norm_drift(&block);
                drift_seen = drift_seen.max(drift);
                if drift > opts.abort_drift {
                    return Err(Error::NormDrift { t, drift });
                }
                states.push(block);
            }
        }
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        steps: t_grid.len().saturating_sub(1),
        max_norm_drift: drift_seen,
    })
}

/// Phase corrections applied after a simulated gate.
#[derive(Debug, Clone, PartialEq)]
pub enum VirtualZ {
    None,
    /// Fixed `Z` rotation angles (radians) on qubits 1 and 2.
    Fixed(f64, f64),
    /// Angles chosen to best match the given ideal 4x4 unitary.
    Match(DMatrix<C64>),
}

/// Everything needed to turn a schedule into a computational-subspace map.
#[derive(Debug, Clone)]
pub struct GateSetup {
    pub system: SystemSpec,
    /// Two-photon drive at its idle amplitude; fixes the rotating frame.
    pub drive: DriveSpec,
    /// Mode indices of qubit 1 and qubit 2.
    pub qubits: [usize; 2],
    pub virtual_z: VirtualZ,
    pub propagation: PropagationOptions,
}

/// Dressed computational states at the idle point.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    /// Columns ordered `|00>, |01>, |10>, |11>` (qubit 1 first).
    pub vectors: DMatrix<C64>,
    /// Energies in rad/ns.
    pub energies: [f64; 4],
    pub overlaps: [f64; 4],
}

impl GateSetup {
    /// Bare labels of the computational states.
    pub fn labels(&self) -> Vec<BareLabel> {
        let n = self.system.n_modes();
        [(0u8, 0u8), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(a, b)| {
                let mut occ = vec![0u8; n];
                occ[self.qubits[0]] = a;
                occ[self.qubits[1]] = b;
                BareLabel::new(occ)
            })
            .collect()
    }

    pub fn static_hamiltonian(&self) -> Result<Operator> {
        crate::models::build_rwa(&self.system, &self.drive)
    }

    pub fn dressed_basis(&self) -> Result<DressedBasis> {
        let h = self.static_hamiltonian()?;
        let eig = crate::spectral::eigensystem(&h)?;
        let labels = self.labels();
        let spec = assign_dressed(eig, self.system.full_basis(), &labels)?;
        let n = self.system.dim();
        let mut vectors = DMatrix::zeros(n, 4);
        let mut energies = [0.0; 4];
        let mut overlaps = [0.0; 4];
        for (j, l) in labels.iter().enumerate() {
            let s = spec.state(l)?;
            if s.overlap < 0.5 {
                return Err(Error::TrackingLost {
                    label: l.to_string(),
                    overlap: s.overlap,
                });
            }
            let mut v = spec.vectors.column(s.index).into_owned();
            // Fix the arbitrary eigenvector phase so the bare component is real.
            let row = self.system.full_basis().index_of(l.occupations()).unwrap();
            let ph = v[row] / C64::new(v[row].norm(), 0.0);
            v /= ph;
            vectors.set_column(j, &v);
            energies[j] = s.energy;
            overlaps[j] = s.overlap;
        }
        Ok(DressedBasis {
            vectors,
            energies,
            overlaps,
        })
    }

    /// Time-dependent terms generated by the schedule's channels.
    pub fn schedule_terms(&self, schedule: &PulseSchedule) -> Result<Vec<TimeTerm>> {
        let basis = self.system.full_basis();
        let mut terms = Vec::new();
        for ch in &schedule.channels {
            let signal = SampledSignal::new(ch.samples.clone(), schedule.sample_rate);
            match ch.spec.kind {
                ChannelKind::Mathieu { mode, omega_d, phi } => {
                    if mode != self.drive.mode {
                        return Err(Error::Schedule(format!("channel {} drives mode {mode}, not the configured drive mode", ch.spec.name)));
                    }
                    if (omega_d - self.drive.omega_d).abs() > 1e-12 || (phi - self.drive.phi).abs() > 1e-12 {
                        return Err(Error::Schedule(format!("channel {} does not match the frame drive", ch.spec.name)));
                    }
                    let gen = mathieu_generator(&self.system, mode, phi)?.to_dense(&basis)?;
                    let idle = self.drive.epsilon;
                    terms.push(TimeTerm::new(gen, Arc::new(move |t| C64::new(signal.at(t) - idle, 0.0)), false));
                }
                ChannelKind::Xy { mode, carrier } => {
                    self.system.mode(mode)?;
                    let mut op = OperatorSum::new(&self.system.dims());
                    op.push_real(0.5, &[Monomial::new(mode, 1, 0)])?;
                    let op = op.to_dense(&basis)?;
                    let delta = angular(carrier - self.drive.frame());
                    terms.push(TimeTerm::new(
                        op,
                        Arc::new(move |t| C64::from_polar(signal.at(t), -delta * t)),
                        true,
                    ));
                }
            }
        }
        Ok(terms)
    }
}

/// Computational-subspace map of a simulated gate.
#[derive(Debug, Clone)]
pub struct GateMap {
    /// `M_ij = <i~| U |j~>` in the idle dressed basis, with the idle dressed
    /// phases removed and virtual-Z corrections applied.
    pub map: DMatrix<C64>,
    /// Weight lost from the dressed computational subspace per input state.
    pub leakage: [f64; 4],
    /// Virtual-Z angles applied to qubits 1 and 2.
    pub virtual_z: (f64, f64),
    pub duration: f64,
    pub max_norm_drift: f64,
}

impl GateMap {
    pub fn mean_leakage(&self) -> f64 {
        self.leakage.iter().sum::<f64>() / 4.0
    }

    /// Conditional phase `arg(M_00 M_11 / (M_01 M_10))` in `(-pi, pi]`.
    pub fn conditional_phase(&self) -> f64 {
        let m = &self.map;
        (m[(0, 0)] * m[(3, 3)] / (m[(1, 1)] * m[(2, 2)])).arg()
    }
}

fn z_phases(a: f64, b: f64) -> [C64; 4] {
    [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, b),
        C64::from_polar(1.0, a),
        C64::from_polar(1.0, a + b),
    ]
}

/// Angles `(a, b)` of post-gate `Z` rotations on qubits 1 and 2 maximizing
/// `|Tr(U_ideal^dag Z(a, b) M)|`.
pub fn best_virtual_z(map: &DMatrix<C64>, ideal: &DMatrix<C64>) -> (f64, f64) {
    let w = (map * ideal.adjoint()).diagonal();
    let score = |a: f64, b: f64| {
        let z = z_phases(a, b);
        (0..4).map(|r| z[r] * w[r]).sum::<C64>().norm()
    };
    let tau = std::f64::consts::TAU;
    let n = 96;
    let mut best = (0.0, 0.0, score(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (tau * i as f64 / n as f64, tau * j as f64 / n as f64);
            let s = score(a, b);
            if s > best.2 {
                best = (a, b, s);
            }
        }
    }
    let mut span = tau / n as f64;
    for _ in 0..40 {
        let (a0, b0, _) = best;
        for i in -4..=4 {
            for j in -4..=4 {
                let (a, b) = (a0 + span * i as f64 / 4.0, b0 + span * j as f64 / 4.0);
                let s = score(a, b);
                if s > best.2 {
                    best = (a, b, s);
                }
            }
        }
        span *= 0.5;
    }
    (best.0.rem_euclid(tau), best.1.rem_euclid(tau))
}

/// Propagates the four dressed computational states through `schedule`.
pub fn simulate_gate(setup: &GateSetup, schedule: &PulseSchedule) -> Result<GateMap> {
    let basis = setup.dressed_basis()?;
    let duration = schedule.total_duration();
    let h0 = setup.static_hamiltonian()?;
    let terms = setup.schedule_terms(schedule)?;
    let final_states = if duration == 0.0 {
        basis.vectors.clone()
    } else {
        let cols: Vec<DVector<C64>> = (0..4)
            .into_par_iter()
            .map(|j| {
                let psi = DMatrix::from_column_slice(basis.vectors.nrows(), 1, basis.vectors.column(j).as_slice());
                let tr = propagate(&h0, &terms, &psi, &[0.0, duration], &setup.propagation)?;
                Ok(tr.last().column(0).into_owned())
            })
            .collect::<Result<_>>()?;
        DMatrix::from_columns(&cols)
    };
    let mut drift: f64 = 0.0;
    for c in final_states.column_iter() {
        drift = drift.max((c.norm() - 1.0).abs());
    }
    let mut map = basis.vectors.adjoint() * &final_states;
    for i in 0..4 {
        let ph = C64::from_polar(1.0, basis.energies[i] * duration);
        for j in 0..4 {
            map[(i, j)] *= ph;
        }
    }
    let mut leakage = [0.0; 4];
    for (j, l) in leakage.iter_mut().enumerate() {
        *l = (1.0 - map.column(j).norm_squared()).max(0.0);
    }
    let (a, b) = match &setup.virtual_z {
        VirtualZ::None => (0.0, 0.0),
        VirtualZ::Fixed(a, b) => (*a, *b),
        VirtualZ::Match(ideal) => best_virtual_z(&map, ideal),
    };
    let z = z_phases(a, b);
    for i in 0..4 {
        for j in 0..4 {
            map[(i, j)] *= z[i];
        }
    }
    Ok(GateMap {
        map,
        leakage,
        virtual_z: (a, b),
        duration,
        max_norm_drift: drift,
    })
}

/// Labels of the two-qubit Pauli basis in the fixed order `II, IX, ..., ZZ`.
pub const PAULI_LABELS: [&str; 16] = [
    "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

fn pauli1(k: usize) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// Two-qubit Pauli operator `P_m`, `m = 4 p_1 + p_2`, with qubit 1 as the
/// more significant index.
pub fn pauli(m: usize) -> DMatrix<C64> {
    let (a, b) = (pauli1(m / 4), pauli1(m % 4));
    DMatrix::from_fn(4, 4, |r, c| a[r / 2][c / 2] * b[r % 2][c % 2])
}

/// Process matrix in the two-qubit Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub chi: DMatrix<C64>,
    pub basis_order: [&'static str; 16],
}

impl ProcessMatrix {
    /// Process of a channel given by Kraus operators acting on the
    /// computational subspace.
    pub fn from_kraus(ops: &[DMatrix<C64>]) -> Self {
        let mut chi = DMatrix::zeros(16, 16);
        for k in ops {
            let c = pauli_coefficients(k);
            chi += &c * c.adjoint();
        }
        ProcessMatrix {
            chi,
            basis_order: PAULI_LABELS,
        }
    }

    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.chi + self.chi.adjoint()) * C64::new(0.5, 0.0);
        hermitian_eigen(&herm)
            .map(|e| e.values[0])
            .unwrap_or(f64::NAN)
    }

    pub fn get(&self, row: &str, col: &str) -> Option<C64> {
        let r = self.basis_order.iter().position(|l| *l == row)?;
        let c = self.basis_order.iter().position(|l| *l == col)?;
        Some(self.chi[(r, c)])
    }
}

fn pauli_coefficients(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_fn(16, |k, _| (pauli(k).adjoint() * m).trace() / C64::new(4.0, 0.0))
}

/// Makes the largest-magnitude diagonal element real and positive.
pub fn fix_global_phase(map: &DMatrix<C64>) -> DMatrix<C64> {
    let d = map.diagonal();
    let (mut best, mut mag) = (0, -1.0);
    for (i, v) in d.iter().enumerate() {
        if v.norm() > mag {
            best = i;
            mag = v.norm();
        }
    }
    if mag <= 0.0 {
        return map.clone();
    }
    let ph = d[best] / C64::new(mag, 0.0);
    map / ph
}

/// `chi = c c^dag` with `c_m = Tr(P_m^dag M) / 4`, after fixing the global
/// phase of `M`.
pub fn chi_from_map(map: &DMatrix<C64>) -> ProcessMatrix {
    assert_eq!((map.nrows(), map.ncols()), (4, 4), "two-qubit maps are 4x4");
    ProcessMatrix::from_kraus(&[fix_global_phase(map)])
}

/// Figures of merit of a simulated process against an ideal one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMetrics {
    /// `Tr(chi_ideal chi_sim) / (Tr chi_ideal Tr chi_sim)`, clamped to [0, 1].
    pub fidelity: f64,
    /// `Tr(chi_sim^2)`.
    pub purity: f64,
    /// `1 - Tr(chi_sim)`.
    pub leakage: f64,
}

impl GateMetrics {
    /// `1 - Tr(chi^2)`.
    pub fn unitarity_deficit(&self) -> f64 {
        1.0 - self.purity
    }
}

pub fn gate_metrics(sim: &ProcessMatrix, ideal: &ProcessMatrix) -> Result<GateMetrics> {
    if sim.basis_order != ideal.basis_order {
        return Err(Error::BasisMismatch);
    }
    let ts = sim.trace();
    let ti = ideal.trace();
    let overlap = (&ideal.chi * &sim.chi).trace().re;
    let fidelity = if ts > 0.0 && ti > 0.0 {
        (overlap / (ti * ts)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(GateMetrics {
        fidelity,
        purity: (&sim.chi * &sim.chi).trace().re,
        leakage: 1.0 - ts,
    })
}

/// Common ideal two-qubit gates in the `|q1 q2>` ordering.
pub mod ideal {
    use super::*;

    pub fn identity() -> DMatrix<C64> {
        DMatrix::identity(4, 4)
    }

    /// `X` on qubit 1.
    pub fn xi() -> DMatrix<C64> {
        pauli(4)
    }

    /// `X` on qubit 2.
    pub fn ix() -> DMatrix<C64> {
        pauli(1)
    }

    pub fn xx() -> DMatrix<C64> {
        pauli(5)
    }

    pub fn cz() -> DMatrix<C64> {
        let mut m = DMatrix::identity(4, 4);
        m[(3, 3)] = C64::new(-1.0, 0.0);
        m
    }
}

/// Builds the lab-frame time-dependent term `2 pi eps cos(w_d t + phi)(a^2 + a^dag^2)`.
pub fn lab_drive_term(system: &SystemSpec, drive: &DriveSpec) -> Result<TimeTerm> {
    let op = crate::models::lab_drive_generator(system, drive.mode)?.to_dense(&system.full_basis())?;
    let amp = angular(drive.epsilon);
    let w = angular(drive.omega_d);
    let phi = drive.phi;
    Ok(TimeTerm::new(op, Arc::new(move |t| C64::new(amp * (w * t + phi).cos(), 0.0)), false))
}

/// Undriven Hamiltonian in a frame rotating at `frame` GHz.
pub fn frame_hamiltonian(system: &SystemSpec, frame: f64) -> Result<Operator> {
    static_terms(system, frame)?.materialize(&system.full_basis())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{local_destroy, ModeSpec};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = Operator::from_dense(DMatrix::zeros(3, 3));
        let psi = DMatrix::from_column_slice(3, 1, &[c(0.6), c(0.0), c(0.8)]);
        let zero: Coefficient = Arc::new(|_| C64::new(0.0, 0.0));
        let term = TimeTerm::new(DMatrix::zeros(3, 3), zero, false);
        let tr = propagate(&h, &[term], &psi, &[0.0, 5.0], &PropagationOptions::default()).unwrap();
        assert!((tr.last() - &psi).norm() < 1e-14);
    }

    #[test]
    fn diagonal_evolution_phases() {
        let d = 5;
        let a = local_destroy(d);
        let w = 2.0;
        let h = Operator::from_dense(a.adjoint() * &a * c(w));
        let amp = 1.0 / (d as f64).sqrt();
        let psi = DMatrix::from_element(d, 1, c(amp));
        let tr = propagate(&h, &[], &psi, &[0.0, 1.3], &PropagationOptions::default()).unwrap();
        for n in 0..d {
            let expected = C64::from_polar(amp, -w * n as f64 * 1.3);
            assert!((tr.last()[(n, 0)] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        // H = (f/2) sigma_x expressed as a driven term on a two-level system.
        let f = 0.7;
        let h0 = Operator::from_dense(DMatrix::zeros(2, 2));
        let lower = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        let drive = TimeTerm::new(lower * c(0.5), Arc::new(move |_| C64::new(f, 0.0)), true);
        let psi = DMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let tr = propagate(&h0, &[drive], &psi, &grid, &PropagationOptions::default()).unwrap();
        for (t, s) in grid.iter().zip(&tr.states) {
            let p1 = s[(1, 0)].norm_sqr();
            let expected = (0.5 * f * t).sin().powi(2);
            assert!((p1 - expected).abs() < 1e-6, "t={t} {p1} {expected}");
        }
        assert!(tr.max_norm_drift < 1e-8);
    }

    /// Order check of the two-exponential step on a non-commuting problem.
    #[test]
    fn magnus_step_is_fourth_order() {
        let sx = pauli1(1);
        let sz = pauli1(3);
        let m = |p: [[C64; 2]; 2]| DMatrix::from_fn(2, 2, |r, k| p[r][k]);
        let (x, z) = (m(sx), m(sz));
        let h_at = move |t: f64| &z * c(1.0 + t) + &x * c((2.0 * t).cos());
        let psi = DMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let reference = {
            let mut p = psi.clone();
            let n = 4000;
            for i in 0..n {
                p = cf4_step(&h_at, &p, i as f64 / n as f64, 1.0 / n as f64);
            }
            p
        };
        let err = |n: usize| {
            let mut p = psi.clone();
            for i in 0..n {
                p = cf4_step(&h_at, &p, i as f64 / n as f64, 1.0 / n as f64);
            }
            (p - &reference).norm()
        };
        let ratio = err(10) / err(20);
        assert!(ratio > 14.0 && ratio < 18.5, "{ratio}");
    }

    #[test]
    fn sampled_signal_interpolates_without_overshoot() {
        let s = SampledSignal::new(vec![0.0, 1.0, 4.0, 9.0], 2.0);
        assert_eq!(s.at(0.5), 1.0);
        assert_eq!(s.at(-1.0), 0.0);
        assert_eq!(s.at(10.0), 9.0);
        assert!((s.at(0.75) - 2.21875).abs() < 1e-12);
        let bump = SampledSignal::new(vec![0.0, 0.5, 1.0, 0.0, 0.0, 0.0], 1.0);
        for k in 0..=200 {
            let t = 5.0 * k as f64 / 200.0;
            let v = bump.at(t);
            assert!((0.0..=1.0).contains(&v), "{t} {v}");
            if t >= 3.0 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn pauli_expansion_examples() {
        let id = chi_from_map(&ideal::identity());
        assert!((id.get("II", "II").unwrap().re - 1.0).abs() < 1e-15);
        assert!((id.chi.norm() - 1.0).abs() < 1e-15);
        let x = chi_from_map(&ideal::xi());
        assert!((x.get("XI", "XI").unwrap().re - 1.0).abs() < 1e-15);
        let cz = chi_from_map(&ideal::cz());
        for l in ["II", "IZ", "ZI", "ZZ"] {
            assert!((cz.get(l, l).unwrap().re - 0.25).abs() < 1e-15);
        }
        assert!((cz.trace() - 1.0).abs() < 1e-15);
        let m = gate_metrics(&chi_from_map(&ideal::identity()), &chi_from_map(&ideal::xi())).unwrap();
        assert_eq!(m.fidelity, 0.0);
        let same = gate_metrics(&cz, &cz).unwrap();
        assert!((same.fidelity - 1.0).abs() < 1e-14 && (same.purity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let a = chi_from_map(&ideal::identity());
        let mut b = a.clone();
        b.basis_order.swap(0, 1);
        assert!(matches!(gate_metrics(&a, &b), Err(Error::BasisMismatch)));
    }

    #[test]
    fn virtual_z_recovers_phases() {
        let target = ideal::cz();
        let z = z_phases(0.3, 1.1);
        let map = DMatrix::from_fn(4, 4, |r, k| target[(r, k)] * z[r].conj());
        let (a, b) = best_virtual_z(&map, &target);
        assert!((a - 0.3).abs() < 1e-6 && (b - 1.1).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn zero_duration_gate_is_identity() {
        let system = SystemSpec::new(
            vec![ModeSpec::new("q1", 3, 5.2, 0.25).unwrap(), ModeSpec::new("q2", 5, 5.75, 0.25).unwrap()],
            vec![crate::composite::Coupling::new(0, 1, 0.03)],
        )
        .unwrap();
        let setup = GateSetup {
            system,
            drive: DriveSpec::new(1, 0.02, 10.6),
            qubits: [0, 1],
            virtual_z: VirtualZ::None,
            propagation: PropagationOptions::default(),
        };
        let g = simulate_gate(&setup, &PulseSchedule::empty(1.0)).unwrap();
        assert!((&g.map - DMatrix::identity(4, 4)).norm() < 1e-12);
        assert!(g.mean_leakage() < 1e-14);
    }
}
