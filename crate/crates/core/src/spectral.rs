//! Eigensystems, dressed-state labelling and effective couplings.

use crate::composite::{BareLabel, Basis, Matrix, Operator, SystemSpec};
use crate::krylov::{lowest_eigenpairs, LanczosOptions};
use crate::linalg::{hermitian_eigen, EigenPairs};
use crate::models::{build_rwa, DriveSpec};
use crate::{ordinary, DMatrix, DVector, Error, Result, C64};
use rayon::prelude::*;

/// Overlaps closer than this count as a tie during assignment.
const TIE_TOL: f64 = 1e-9;

/// Diagonalizes a Hermitian operator. Dense operators are fully diagonalized;
/// sparse ones yield the `k` lowest pairs (30 by default).
pub fn eigensystem(op: &Operator) -> Result<EigenPairs> {
    eigensystem_with(op, &LanczosOptions::default())
}

pub fn eigensystem_with(op: &Operator, opts: &LanczosOptions) -> Result<EigenPairs> {
    let dev = op.hermitian_deviation();
    if dev > crate::composite::HERMITIAN_TOL {
        return Err(Error::NonHermitian { deviation: dev });
    }
    match op.matrix() {
        Matrix::Dense(m) => hermitian_eigen(m),
        Matrix::Sparse(m) => lowest_eigenpairs(m, opts),
    }
}

/// An eigenstate matched to a bare product state.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedState {
    pub label: BareLabel,
    /// Column of the eigenvector in the parent eigensystem.
    pub index: usize,
    /// Energy in rad/ns.
    pub energy: f64,
    /// `|<bare|dressed>|^2`.
    pub overlap: f64,
    /// Set when the match is ambiguous: a tie between candidates or an
    /// overlap of one half or less.
    pub flagged: bool,
}

/// Eigensystem together with its dressed-state assignment.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<C64>,
    pub basis: Basis,
    pub assigned: Vec<DressedState>,
}

impl Spectrum {
    pub fn state(&self, label: &BareLabel) -> Result<&DressedState> {
        self.assigned
            .iter()
            .find(|s| &s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Energy of the dressed state in rad/ns.
    pub fn energy(&self, label: &BareLabel) -> Result<f64> {
        Ok(self.state(label)?.energy)
    }

    pub fn vector(&self, label: &BareLabel) -> Result<DVector<C64>> {
        Ok(self.vectors.column(self.state(label)?.index).into_owned())
    }

    pub fn any_flagged(&self) -> bool {
        self.assigned.iter().any(|s| s.flagged)
    }
}

/// Matches bare labels to eigenvectors by greedy maximum overlap. The pair
/// with the largest overlap is fixed first; ties go to the lower eigen-index.
pub fn assign_dressed(eig: EigenPairs, basis: Basis, labels: &[BareLabel]) -> Result<Spectrum> {
    let n_vec = eig.vectors.ncols();
    let mut rows = Vec::with_capacity(labels.len());
    for l in labels {
        rows.push(
            basis
                .index_of(l.occupations())
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))?,
        );
    }
    if labels.len() > n_vec {
        return Err(Error::InvalidInput(format!(
            "{} labels requested but only {} eigenvectors available",
            labels.len(),
            n_vec
        )));
    }
    let ov = |li: usize, j: usize| eig.vectors[(rows[li], j)].norm_sqr();
    let mut used = vec![false; n_vec];
    let mut done = vec![false; labels.len()];
    let mut out: Vec<Option<DressedState>> = vec![None; labels.len()];
    for _ in 0..labels.len() {
        let mut best: Option<(usize, usize, f64)> = None;
        for li in (0..labels.len()).filter(|&i| !done[i]) {
            for j in (0..n_vec).filter(|&j| !used[j]) {
                let o = ov(li, j);
                if best.is_none_or(|(_, _, b)| o > b + TIE_TOL) {
                    best = Some((li, j, o));
                }
            }
        }
        let (li, j, o) = best.expect("labels never outnumber vectors");
        let tie = (0..n_vec).any(|k| k != j && !used[k] && (ov(li, k) - o).abs() <= TIE_TOL);
        used[j] = true;
        done[li] = true;
        out[li] = Some(DressedState {
            label: labels[li].clone(),
            index: j,
            energy: eig.values[j],
            overlap: o,
            flagged: tie || o <= 0.5 + TIE_TOL,
        });
    }
    Ok(Spectrum {
        energies: eig.values,
        vectors: eig.vectors,
        basis,
        assigned: out.into_iter().map(|s| s.expect("assigned")).collect(),
    })
}

/// Rotating-frame spectrum of a driven system with the given labels assigned.
pub fn driven_spectrum(system: &SystemSpec, drive: &DriveSpec, labels: &[BareLabel]) -> Result<Spectrum> {
    let h = build_rwa(system, drive)?;
    let eig = eigensystem(&h)?;
    assign_dressed(eig, system.full_basis(), labels)
}

/// Bare labels entering the couplings of a pair of qubits embedded in a
/// larger circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLabels {
    pub ground: BareLabel,
    /// First qubit excited.
    pub first: BareLabel,
    /// Second qubit excited.
    pub second: BareLabel,
    pub both: BareLabel,
    /// Whether the single-excitation states are degenerate so that their
    /// splitting measures an exchange coupling.
    pub exchange: bool,
}

impl CouplingLabels {
    /// Two directly coupled qubits.
    pub fn pair() -> Self {
        CouplingLabels {
            ground: BareLabel::new(vec![0, 0]),
            first: BareLabel::new(vec![1, 0]),
            second: BareLabel::new(vec![0, 1]),
            both: BareLabel::new(vec![1, 1]),
            exchange: false,
        }
    }

    /// Qubits on modes 0 and 2 with a coupler on mode 1.
    pub fn qcq() -> Self {
        CouplingLabels {
            ground: BareLabel::new(vec![0, 0, 0]),
            first: BareLabel::new(vec![1, 0, 0]),
            second: BareLabel::new(vec![0, 0, 1]),
            both: BareLabel::new(vec![1, 0, 1]),
            exchange: true,
        }
    }

    pub fn all(&self) -> Vec<BareLabel> {
        vec![
            self.ground.clone(),
            self.first.clone(),
            self.second.clone(),
            self.both.clone(),
        ]
    }
}

/// Effective couplings extracted from a spectrum, in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub j_zz: f64,
    /// Half splitting of the single-excitation doublet. Its sign depends on
    /// the labelling and carries no meaning when `flagged`.
    pub j_xx: Option<f64>,
    /// Any of the four states ambiguously assigned.
    pub flagged: bool,
    /// Smallest bare-state overlap among the four states.
    pub min_overlap: f64,
}

impl Couplings {
    /// Anisotropy `J_zz / (2 |J_xx|)`.
    pub fn anisotropy(&self) -> Option<f64> {
        self.j_xx.map(|x| self.j_zz / (2.0 * x.abs()))
    }
}

/// `J_zz = E_11 - E_10 - E_01 + E_00` (and the exchange splitting when
/// requested) from an assigned spectrum.
pub fn couplings(spec: &Spectrum, labels: &CouplingLabels) -> Result<Couplings> {
    let g = spec.state(&labels.ground)?;
    let a = spec.state(&labels.first)?;
    let b = spec.state(&labels.second)?;
    let ab = spec.state(&labels.both)?;
    let j_zz = ordinary(ab.energy - a.energy - b.energy + g.energy);
    let j_xx = labels.exchange.then(|| ordinary(0.5 * (a.energy - b.energy)));
    let mut overlaps = [g.overlap, a.overlap, b.overlap, ab.overlap];
    let mut flags = [g.flagged, a.flagged, b.flagged, ab.flagged];
    if labels.exchange {
        // Resonant qubits share their excitation evenly, so each doublet
        // state is judged by its weight on both single-excitation labels.
        let rows = [&labels.first, &labels.second].map(|l| spec.basis.index_of(l.occupations()));
        for (k, s) in [(1, a), (2, b)] {
            let w: f64 = rows.iter().flatten().map(|&r| spec.vectors[(r, s.index)].norm_sqr()).sum();
            overlaps[k] = w;
            flags[k] = w <= 0.5;
        }
    }
    Ok(Couplings {
        j_zz,
        j_xx,
        flagged: flags.iter().any(|&f| f),
        min_overlap: overlaps.iter().copied().fold(1.0, f64::min),
    })
}

/// ZZ coupling of two directly coupled qubits, GHz.
pub fn jzz_two_qubit(spec: &Spectrum) -> Result<f64> {
    Ok(couplings(spec, &CouplingLabels::pair())?.j_zz)
}

/// `(J_xx, J_zz)` of a qubit-coupler-qubit spectrum, GHz. The sign of `J_xx`
/// follows the labelling.
pub fn qcq_couplings(spec: &Spectrum) -> Result<(f64, f64)> {
    let c = couplings(spec, &CouplingLabels::qcq())?;
    Ok((c.j_xx.expect("exchange requested"), c.j_zz))
}

/// Per-sample diagnostic flags of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleFlags {
    /// A bare-state overlap at or below one half.
    pub low_overlap: bool,
    /// A labelled state lost more than half its overlap with the previous
    /// sample's vector of the same label.
    pub discontinuous: bool,
}

impl SampleFlags {
    pub fn any(&self) -> bool {
        self.low_overlap || self.discontinuous
    }

    /// Compact text form, e.g. `overlap|jump`, or empty.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.low_overlap {
            parts.push("overlap");
        }
        if self.discontinuous {
            parts.push("jump");
        }
        parts.join("|")
    }
}

/// One point of a coupling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub epsilon: f64,
    pub j_zz: f64,
    pub j_xx: Option<f64>,
    pub min_overlap: f64,
    pub flags: SampleFlags,
}

/// Couplings along an amplitude grid, with the first zero of `J_zz`.
#[derive(Debug, Clone)]
pub struct ZzSweep {
    pub samples: Vec<SweepSample>,
    /// Amplitude (GHz) where `J_zz` first changes sign between unflagged
    /// samples, refined by bisection.
    pub root: Option<f64>,
    /// Number of sign changes between consecutive unflagged samples.
    pub sign_changes: usize,
}

/// Couplings below this magnitude (GHz) count as zero when looking for sign
/// changes.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Root bracket refinement target, GHz.
pub const ROOT_TOL: f64 = 1e-6;

struct PointResult {
    couplings: Couplings,
    vectors: Vec<DVector<C64>>,
}

fn evaluate(system: &SystemSpec, drive: &DriveSpec, labels: &CouplingLabels) -> Result<PointResult> {
    let all = labels.all();
    let spec = driven_spectrum(system, drive, &all)?;
    let couplings = couplings(&spec, labels)?;
    let vectors = all.iter().map(|l| spec.vector(l)).collect::<Result<Vec<_>>>()?;
    Ok(PointResult { couplings, vectors })
}

/// `J_zz` (GHz) at a single drive amplitude.
pub fn jzz_at(system: &SystemSpec, drive: &DriveSpec, labels: &CouplingLabels, epsilon: f64) -> Result<f64> {
    Ok(evaluate(system, &drive.with_epsilon(epsilon), labels)?.couplings.j_zz)
}

/// Sweeps the drive amplitude over `grid` (GHz), labelling at every point by
/// bare-state overlap and locating the first sign change of `J_zz`.
pub fn zz_sweep(system: &SystemSpec, drive: &DriveSpec, grid: &[f64], labels: &CouplingLabels) -> Result<ZzSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty amplitude grid".into()));
    }
    if grid.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::InvalidInput("amplitudes must be finite and non-negative".into()));
    }
    let points: Vec<PointResult> = grid
        .par_iter()
        .map(|&e| evaluate(system, &drive.with_epsilon(e), labels))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(grid.len());
    for (i, p) in points.iter().enumerate() {
        let discontinuous = i > 0
            && p.vectors
                .iter()
                .zip(&points[i - 1].vectors)
                .any(|(v, w)| v.dotc(w).norm_sqr() < 0.5);
        samples.push(SweepSample {
            epsilon: grid[i],
            j_zz: p.couplings.j_zz,
            j_xx: p.couplings.j_xx,
            min_overlap: p.couplings.min_overlap,
            flags: SampleFlags {
                low_overlap: p.couplings.min_overlap <= 0.5,
                discontinuous,
            },
        });
    }
    // Values at round-off level carry no sign.
    let clean: Vec<&SweepSample> = samples
        .iter()
        .filter(|s| !s.flags.any() && s.j_zz.abs() > ZERO_FLOOR)
        .collect();
    let mut sign_changes = 0;
    let mut bracket = None;
    for w in clean.windows(2) {
        if w[0].j_zz * w[1].j_zz < 0.0 {
            sign_changes += 1;
            if bracket.is_none() {
                bracket = Some((w[0].epsilon, w[1].epsilon));
            }
        }
    }
    let root = match bracket {
        Some((a, b)) => Some(bisect(|e| jzz_at(system, drive, labels, e), a, b, ROOT_TOL)?),
        None => None,
    };
    Ok(ZzSweep {
        samples,
        root,
        sign_changes,
    })
}

/// Bisection of a sign change of `f` on `[a, b]` to an interval width `tol`.
pub fn bisect(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::NoRoot);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Difference of a quantity between the configured truncation and one more
/// level on every mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationCheck {
    pub value: f64,
    pub refined: f64,
}

impl TruncationCheck {
    pub fn abs_change(&self) -> f64 {
        (self.refined - self.value).abs()
    }
}

/// Re-evaluates `J_zz` with every truncation raised by one.
pub fn truncation_check(system: &SystemSpec, drive: &DriveSpec, labels: &CouplingLabels) -> Result<TruncationCheck> {
    let value = evaluate(system, drive, labels)?.couplings.j_zz;
    let bigger = system.retruncated(|_, d| d + 1)?;
    let refined = evaluate(&bigger, drive, labels)?.couplings.j_zz;
    Ok(TruncationCheck { value, refined })
}

/// One point of a QCQ coupling map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub omega_d: f64,
    pub epsilon: f64,
    pub j_zz: f64,
    pub j_xx: f64,
    pub flagged: bool,
    pub min_overlap: f64,
}

impl MapPoint {
    pub fn anisotropy(&self) -> f64 {
        self.j_zz / (2.0 * self.j_xx.abs())
    }
}

/// Couplings of a QCQ circuit over a grid of drive frequencies and amplitudes.
/// Points are ordered with the drive frequency varying slowest.
pub fn qcq_map(system: &SystemSpec, drive_mode: usize, omega_d: &[f64], epsilon: &[f64]) -> Result<Vec<MapPoint>> {
    if omega_d.is_empty() || epsilon.is_empty() {
        return Err(Error::InvalidInput("empty map grid".into()));
    }
    let labels = CouplingLabels::qcq();
    let jobs: Vec<(f64, f64)> = omega_d
        .iter()
        .flat_map(|&w| epsilon.iter().map(move |&e| (w, e)))
        .collect();
    jobs.par_iter()
        .map(|&(w, e)| {
            let drive = DriveSpec::new(drive_mode, e, w);
            let c = couplings(&driven_spectrum(system, &drive, &labels.all())?, &labels)?;
            Ok(MapPoint {
                omega_d: w,
                epsilon: e,
                j_zz: c.j_zz,
                j_xx: c.j_xx.expect("exchange requested"),
                flagged: c.flagged,
                min_overlap: c.min_overlap,
            })
        })
        .collect()
}

/// Largest `|J_xx(eps) - J_xx(0)| / |J_xx(0)|` along each drive-frequency row
/// of a map, where the first amplitude of a row is taken as the reference.
pub fn exchange_variation(points: &[MapPoint]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut reference: Option<(f64, f64)> = None;
    for p in points {
        match reference {
            Some((w, _)) if w == p.omega_d => {}
            _ => reference = Some((p.omega_d, p.j_xx.abs())),
        }
        let (_, r) = reference.unwrap();
        worst = worst.max((p.j_xx.abs() - r).abs() / r);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{labels, ModeSpec};
    use crate::presets;

    #[test]
    fn resonant_pair_is_flagged() {
        // Two resonant levels with a coupling: both eigenvectors are equal
        // superpositions of the bare states.
        let h = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.3, 0.0), C64::new(0.3, 0.0), C64::new(1.0, 0.0)]);
        let eig = hermitian_eigen(&h).unwrap();
        let basis = Basis::full(&[2]);
        let spec = assign_dressed(eig, basis, &labels(&["0", "1"]).unwrap()).unwrap();
        assert!(spec.assigned.iter().all(|s| s.flagged));
        assert!(spec.assigned.iter().all(|s| (s.overlap - 0.5).abs() < 1e-12));
        let idx: Vec<usize> = spec.assigned.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn uncoupled_pair_has_no_zz() {
        let s = SystemSpec::new(
            vec![
                ModeSpec::new("a", 4, 5.0, 0.3).unwrap(),
                ModeSpec::new("b", 4, 5.6, 0.3).unwrap(),
            ],
            vec![],
        )
        .unwrap();
        let spec = driven_spectrum(&s, &DriveSpec::new(1, 0.0, 10.0), &CouplingLabels::pair().all()).unwrap();
        assert!(jzz_two_qubit(&spec).unwrap().abs() < 1e-12);
    }

    #[test]
    fn reference_pair_static_zz() {
        let s = presets::transmon_pair(6);
        let spec = driven_spectrum(&s, &presets::pair_drive(0.0), &CouplingLabels::pair().all()).unwrap();
        let j = jzz_two_qubit(&spec).unwrap() * 1e3;
        assert!((j + 3.667).abs() < 5e-3, "{j}");
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-10).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
        assert!(matches!(bisect(|x| Ok(x + 5.0), 0.0, 1.0, 1e-6), Err(Error::NoRoot)));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let s = presets::transmon_pair(5);
        assert!(zz_sweep(&s, &presets::pair_drive(0.0), &[], &CouplingLabels::pair()).is_err());
    }

    #[test]
    fn non_hermitian_operator_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(eigensystem(&Operator::from_dense(m)), Err(Error::NonHermitian { .. })));
    }
}
