//! Truncated multi-mode Hilbert spaces, bare-state labels and operators.
//!
//! Basis states are occupation tuples `(n_0, ..., n_{M-1})` ordered
//! lexicographically with mode 0 varying slowest, so the composite index is
//! `sum_k n_k * stride_k` with `stride_{M-1} = 1`.

use crate::sparse::CsrMatrix;
use crate::{DMatrix, DVector, Error, Result, C64};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Composite dimensions up to this size are stored densely.
pub const DENSE_LIMIT: usize = 4096;

/// Default cap on the composite dimension of a system.
pub const DEFAULT_DIM_CAP: usize = 2_000_000;

/// Absolute Hermiticity tolerance in angular units.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A single anharmonic oscillator mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub label: String,
    /// Number of retained Fock levels.
    pub dim: usize,
    /// Bare frequency in GHz.
    pub omega: f64,
    /// Anharmonicity in GHz, positive for a transmon.
    pub alpha: f64,
}

impl ModeSpec {
    pub fn new(label: impl Into<String>, dim: usize, omega: f64, alpha: f64) -> Result<Self> {
        let m = ModeSpec {
            label: label.into(),
            dim,
            omega,
            alpha,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidInput(format!(
                "mode {} needs at least 2 levels, got {}",
                self.label, self.dim
            )));
        }
        if self.dim > 255 {
            return Err(Error::InvalidInput(format!("mode {} truncation {} is too large", self.label, self.dim)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mode {} frequency must be positive, got {}",
                self.label, self.omega
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "mode {} anharmonicity must be non-negative, got {}",
                self.label, self.alpha
            )));
        }
        Ok(())
    }

    /// Same mode with a different truncation.
    pub fn with_dim(&self, dim: usize) -> Self {
        ModeSpec { dim, ..self.clone() }
    }
}

/// Exchange coupling `g (a_i^dag a_j + h.c.)` in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub g: f64,
}

impl Coupling {
    pub fn new(i: usize, j: usize, g: f64) -> Self {
        Coupling { i, j, g }
    }
}

/// A set of modes with pairwise exchange couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    modes: Vec<ModeSpec>,
    couplings: Vec<Coupling>,
    dim_cap: usize,
}

impl SystemSpec {
    pub fn new(modes: Vec<ModeSpec>, couplings: Vec<Coupling>) -> Result<Self> {
        Self::with_dim_cap(modes, couplings, DEFAULT_DIM_CAP)
    }

    pub fn with_dim_cap(modes: Vec<ModeSpec>, couplings: Vec<Coupling>, dim_cap: usize) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidInput("a system needs at least one mode".into()));
        }
        for m in &modes {
            m.validate()?;
        }
        for c in &couplings {
            for idx in [c.i, c.j] {
                if idx >= modes.len() {
                    return Err(Error::ModeOutOfRange {
                        index: idx,
                        modes: modes.len(),
                    });
                }
            }
            if c.i == c.j {
                return Err(Error::InvalidInput(format!("self coupling on mode {}", c.i)));
            }
            if !c.g.is_finite() {
                return Err(Error::InvalidInput("coupling strength must be finite".into()));
            }
        }
        let spec = SystemSpec {
            modes,
            couplings,
            dim_cap,
        };
        let dim = spec.dim_checked()?;
        if dim > dim_cap {
            return Err(Error::DimensionTooLarge { dim, cap: dim_cap });
        }
        Ok(spec)
    }

    fn dim_checked(&self) -> Result<usize> {
        self.modes.iter().try_fold(1usize, |acc, m| {
            acc.checked_mul(m.dim).ok_or(Error::DimensionTooLarge {
                dim: usize::MAX,
                cap: self.dim_cap,
            })
        })
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn mode(&self, k: usize) -> Result<&ModeSpec> {
        self.modes.get(k).ok_or(Error::ModeOutOfRange {
            index: k,
            modes: self.modes.len(),
        })
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim).collect()
    }

    /// Composite dimension.
    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// Copy with every truncation replaced by `f(mode index, current dim)`.
    pub fn retruncated(&self, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(k, m)| m.with_dim(f(k, m.dim)))
            .collect();
        Self::with_dim_cap(modes, self.couplings.clone(), self.dim_cap)
    }

    /// Copy with the frequency of mode `k` replaced.
    pub fn with_frequency(&self, k: usize, omega: f64) -> Result<Self> {
        let mut modes = self.modes.clone();
        modes
            .get_mut(k)
            .ok_or(Error::ModeOutOfRange {
                index: k,
                modes: self.modes.len(),
            })?
            .omega = omega;
        Self::with_dim_cap(modes, self.couplings.clone(), self.dim_cap)
    }

    pub fn full_basis(&self) -> Basis {
        Basis::full(&self.dims())
    }

    /// Composite index of a bare occupation label.
    pub fn bare_index(&self, label: &BareLabel) -> Result<usize> {
        self.full_basis()
            .index_of(label.occupations())
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

/// Occupation-number label of a bare product state such as `|101>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BareLabel(Vec<u8>);

impl BareLabel {
    pub fn new(occ: Vec<u8>) -> Self {
        BareLabel(occ)
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total excitation number.
    pub fn excitations(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }
}

impl FromStr for BareLabel {
    type Err = Error;

    /// Accepts either a digit string (`"101"`) or comma-separated occupations
    /// (`"1,0,12"`), optionally wrapped in `|...>`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('|').trim_end_matches('>').trim();
        if body.is_empty() {
            return Err(Error::Parse(format!("empty state label {s:?}")));
        }
        let occ: Option<Vec<u8>> = if body.contains(',') {
            body.split(',').map(|t| t.trim().parse::<u8>().ok()).collect()
        } else {
            body.chars().map(|ch| ch.to_digit(10).map(|d| d as u8)).collect()
        };
        occ.map(BareLabel)
            .ok_or_else(|| Error::Parse(format!("invalid state label {s:?}")))
    }
}

impl fmt::Display for BareLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&n| n < 10) {
            for n in &self.0 {
                write!(f, "{n}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Parses a list of labels, e.g. `["00", "01"]`.
pub fn labels(items: &[&str]) -> Result<Vec<BareLabel>> {
    items.iter().map(|s| s.parse()).collect()
}

/// Ordered set of Fock states, either the full product space or a subset.
#[derive(Debug, Clone)]
pub struct Basis {
    dims: Vec<usize>,
    strides: Vec<usize>,
    members: Option<(Vec<usize>, HashMap<usize, usize>)>,
}

impl Basis {
    pub fn full(dims: &[usize]) -> Self {
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Basis {
            dims: dims.to_vec(),
            strides,
            members: None,
        }
    }

    /// Subset of the product space accepted by `keep`, in composite order.
    pub fn restricted(dims: &[usize], keep: impl Fn(&[u8]) -> bool) -> Self {
        let full = Basis::full(dims);
        let total: usize = dims.iter().product();
        let mut list = Vec::new();
        let mut occ = vec![0u8; dims.len()];
        for idx in 0..total {
            full.decode_into(idx, &mut occ);
            if keep(&occ) {
                list.push(idx);
            }
        }
        let map = list.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        Basis {
            members: Some((list, map)),
            ..full
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_full(&self) -> bool {
        self.members.is_none()
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Some((list, _)) => list.len(),
            None => self.dims.iter().product(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn decode_into(&self, full_index: usize, occ: &mut [u8]) {
        let mut rem = full_index;
        for k in 0..self.dims.len() {
            occ[k] = (rem / self.strides[k]) as u8;
            rem %= self.strides[k];
        }
    }

    /// Occupations of basis state `i`.
    pub fn occupations(&self, i: usize) -> Vec<u8> {
        let mut occ = vec![0u8; self.dims.len()];
        let full = match &self.members {
            Some((list, _)) => list[i],
            None => i,
        };
        self.decode_into(full, &mut occ);
        occ
    }

    /// Position of an occupation tuple in this basis, if present.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.dims.len() {
            return None;
        }
        let mut full = 0usize;
        for (k, &n) in occ.iter().enumerate() {
            if n as usize >= self.dims[k] {
                return None;
            }
            full += n as usize * self.strides[k];
        }
        match &self.members {
            Some((_, map)) => map.get(&full).copied(),
            None => Some(full),
        }
    }

    pub fn label(&self, i: usize) -> BareLabel {
        BareLabel(self.occupations(i))
    }

    /// Normalized bare state `|label>` as a vector on this basis.
    pub fn ket(&self, label: &BareLabel) -> Result<DVector<C64>> {
        let idx = self
            .index_of(label.occupations())
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let mut v = DVector::zeros(self.len());
        v[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Normal-ordered single-mode ladder monomial `(a^dag)^create a^annihilate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    pub mode: usize,
    pub create: u8,
    pub annihilate: u8,
}

impl Monomial {
    pub fn new(mode: usize, create: u8, annihilate: u8) -> Self {
        Monomial {
            mode,
            create,
            annihilate,
        }
    }

    /// Action on a Fock level `n` of a mode truncated at `dim`:
    /// returns the target level and amplitude, or `None` if annihilated.
    fn act(&self, n: u8, dim: usize) -> Option<(u8, f64)> {
        let (p, q) = (self.create as usize, self.annihilate as usize);
        let n = n as usize;
        if n < q {
            return None;
        }
        let low = n - q;
        let m = low + p;
        if m >= dim {
            return None;
        }
        let mut amp = 1.0;
        for k in (low + 1)..=n {
            amp *= (k as f64).sqrt();
        }
        for k in (low + 1)..=m {
            amp *= (k as f64).sqrt();
        }
        Some((m as u8, amp))
    }

    fn adjoint(&self) -> Self {
        Monomial {
            mode: self.mode,
            create: self.annihilate,
            annihilate: self.create,
        }
    }
}

/// `coeff * prod_k monomial_k` with at most one monomial per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub factors: Vec<Monomial>,
}

/// Symbolic sum of ladder-operator products, materialized on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    dims: Vec<usize>,
    terms: Vec<Term>,
}

impl OperatorSum {
    pub fn new(dims: &[usize]) -> Self {
        OperatorSum {
            dims: dims.to_vec(),
            terms: Vec::new(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Appends `coeff * prod(factors)`; rejects unknown or repeated modes.
    pub fn push(&mut self, coeff: C64, factors: &[Monomial]) -> Result<()> {
        for (i, f) in factors.iter().enumerate() {
            if f.mode >= self.dims.len() {
                return Err(Error::ModeOutOfRange {
                    index: f.mode,
                    modes: self.dims.len(),
                });
            }
            if factors[..i].iter().any(|g| g.mode == f.mode) {
                return Err(Error::InvalidInput(format!("mode {} repeated in one term", f.mode)));
            }
        }
        if coeff != C64::new(0.0, 0.0) {
            self.terms.push(Term {
                coeff,
                factors: factors.to_vec(),
            });
        }
        Ok(())
    }

    pub fn push_real(&mut self, coeff: f64, factors: &[Monomial]) -> Result<()> {
        self.push(C64::new(coeff, 0.0), factors)
    }

    /// Appends a term together with its Hermitian conjugate.
    pub fn push_with_adjoint(&mut self, coeff: C64, factors: &[Monomial]) -> Result<()> {
        self.push(coeff, factors)?;
        let adj: Vec<Monomial> = factors.iter().map(Monomial::adjoint).collect();
        self.push(coeff.conj(), &adj)
    }

    pub fn extend(&mut self, other: &OperatorSum) -> Result<()> {
        if other.dims != self.dims {
            return Err(Error::InvalidInput("operator sums act on different spaces".into()));
        }
        self.terms.extend(other.terms.iter().cloned());
        Ok(())
    }

    pub fn scaled(&self, s: C64) -> OperatorSum {
        OperatorSum {
            dims: self.dims.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * s,
                    factors: t.factors.clone(),
                })
                .filter(|t| t.coeff != C64::new(0.0, 0.0))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> OperatorSum {
        OperatorSum {
            dims: self.dims.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    factors: t.factors.iter().map(Monomial::adjoint).collect(),
                })
                .collect(),
        }
    }

    fn check_basis(&self, basis: &Basis) -> Result<()> {
        if basis.dims() != self.dims.as_slice() {
            return Err(Error::InvalidInput("basis does not match operator dimensions".into()));
        }
        Ok(())
    }

    /// Matrix elements `(row, col, value)` on `basis`. States mapped outside a
    /// restricted basis are dropped.
    pub fn triplets(&self, basis: &Basis) -> Result<Vec<(usize, usize, C64)>> {
        self.check_basis(basis)?;
        let mut out = Vec::new();
        let mut occ_out = vec![0u8; self.dims.len()];
        for col in 0..basis.len() {
            let occ = basis.occupations(col);
            'terms: for t in &self.terms {
                occ_out.copy_from_slice(&occ);
                let mut amp = 1.0;
                for f in &t.factors {
                    match f.act(occ[f.mode], self.dims[f.mode]) {
                        Some((m, a)) => {
                            occ_out[f.mode] = m;
                            amp *= a;
                        }
                        None => continue 'terms,
                    }
                }
                if let Some(row) = basis.index_of(&occ_out) {
                    out.push((row, col, t.coeff * amp));
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self, basis: &Basis) -> Result<DMatrix<C64>> {
        let n = basis.len();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.triplets(basis)? {
            m[(r, c)] += v;
        }
        Ok(m)
    }

    pub fn to_sparse(&self, basis: &Basis) -> Result<CsrMatrix> {
        CsrMatrix::from_triplets(basis.len(), self.triplets(basis)?)
    }

    /// Materializes on `basis`, dense up to [`DENSE_LIMIT`] and sparse above.
    pub fn materialize(&self, basis: &Basis) -> Result<Operator> {
        if basis.len() <= DENSE_LIMIT {
            Ok(Operator::from_dense(self.to_dense(basis)?))
        } else {
            Ok(Operator::from_sparse(self.to_sparse(basis)?))
        }
    }
}

/// Matrix storage of an [`Operator`].
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix),
}

/// A square operator together with a cached Hermiticity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: Matrix,
    hermitian: bool,
}

impl Operator {
    pub fn from_dense(m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operators are square");
        let dev = dense_hermitian_deviation(&m);
        Operator {
            matrix: Matrix::Dense(m),
            hermitian: dev <= HERMITIAN_TOL,
        }
    }

    pub fn from_sparse(m: CsrMatrix) -> Self {
        let dev = m.hermitian_deviation();
        Operator {
            matrix: Matrix::Sparse(m),
            hermitian: dev <= HERMITIAN_TOL,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        match &self.matrix {
            Matrix::Dense(m) => m.nrows(),
            Matrix::Sparse(m) => m.dim(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.matrix, Matrix::Dense(_))
    }

    /// Hermitian to within [`HERMITIAN_TOL`].
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_deviation(&self) -> f64 {
        match &self.matrix {
            Matrix::Dense(m) => dense_hermitian_deviation(m),
            Matrix::Sparse(m) => m.hermitian_deviation(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.matrix {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CsrMatrix {
        match &self.matrix {
            Matrix::Dense(m) => CsrMatrix::from_dense(m),
            Matrix::Sparse(m) => m.clone(),
        }
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.matrix {
            Matrix::Dense(m) => m * v,
            Matrix::Sparse(m) => m.mul_vec(v),
        }
    }

    pub fn apply_block(&self, v: &DMatrix<C64>) -> DMatrix<C64> {
        match &self.matrix {
            Matrix::Dense(m) => m * v,
            Matrix::Sparse(m) => m.mul_dense(v),
        }
    }

    pub fn adjoint(&self) -> Operator {
        let matrix = match &self.matrix {
            Matrix::Dense(m) => Matrix::Dense(m.adjoint()),
            Matrix::Sparse(m) => Matrix::Sparse(m.adjoint()),
        };
        Operator {
            matrix,
            hermitian: self.hermitian,
        }
    }

    /// `self + s * other`, keeping sparse storage only if both are sparse.
    pub fn add_scaled(&self, other: &Operator, s: C64) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(match (&self.matrix, &other.matrix) {
            (Matrix::Sparse(a), Matrix::Sparse(b)) => Operator::from_sparse(a.add_scaled(b, s)?),
            _ => Operator::from_dense(self.to_dense() + other.to_dense() * s),
        })
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(match (&self.matrix, &other.matrix) {
            (Matrix::Sparse(a), Matrix::Sparse(b)) => Operator::from_sparse(a.mul_csr(b)?),
            _ => Operator::from_dense(self.to_dense() * other.to_dense()),
        })
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        ab.add_scaled(&ba, C64::new(-1.0, 0.0))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        match &self.matrix {
            Matrix::Dense(m) => m.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Matrix::Sparse(m) => m.iter().map(|(_, _, v)| v.norm()).fold(0.0, f64::max),
        }
    }

    /// `<psi|self|psi>`.
    pub fn expectation(&self, psi: &DVector<C64>) -> C64 {
        psi.dotc(&self.apply(psi))
    }
}

fn dense_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for c in 0..n {
        for r in 0..=c {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

fn single_mode(system: &SystemSpec, k: usize, mono: Monomial) -> Result<Operator> {
    system.mode(k)?;
    let mut sum = OperatorSum::new(&system.dims());
    sum.push_real(1.0, &[mono])?;
    sum.materialize(&system.full_basis())
}

/// Annihilation operator of mode `k` on the full composite space.
pub fn destroy(system: &SystemSpec, k: usize) -> Result<Operator> {
    single_mode(system, k, Monomial::new(k, 0, 1))
}

/// Creation operator of mode `k`.
pub fn create(system: &SystemSpec, k: usize) -> Result<Operator> {
    single_mode(system, k, Monomial::new(k, 1, 0))
}

/// Number operator of mode `k`.
pub fn number(system: &SystemSpec, k: usize) -> Result<Operator> {
    single_mode(system, k, Monomial::new(k, 1, 1))
}

/// Lifts a single-mode matrix acting on mode `k` to the composite space.
pub fn embed(system: &SystemSpec, k: usize, local: &DMatrix<C64>) -> Result<Operator> {
    let d = system.mode(k)?.dim;
    if local.nrows() != d || local.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: local.nrows(),
        });
    }
    let basis = system.full_basis();
    let mut trip = Vec::new();
    for col in 0..basis.len() {
        let mut occ = basis.occupations(col);
        let n = occ[k] as usize;
        for r in 0..d {
            let v = local[(r, n)];
            if v != C64::new(0.0, 0.0) {
                occ[k] = r as u8;
                trip.push((basis.index_of(&occ).expect("in range"), col, v));
            }
        }
    }
    let sp = CsrMatrix::from_triplets(basis.len(), trip)?;
    Ok(if basis.len() <= DENSE_LIMIT {
        Operator::from_dense(sp.to_dense())
    } else {
        Operator::from_sparse(sp)
    })
}

/// Single-mode truncated annihilation matrix of size `d`.
pub fn local_destroy(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_modes() -> SystemSpec {
        SystemSpec::new(
            vec![
                ModeSpec::new("q1", 3, 5.0, 0.2).unwrap(),
                ModeSpec::new("q2", 4, 5.5, 0.2).unwrap(),
            ],
            vec![Coupling::new(0, 1, 0.01)],
        )
        .unwrap()
    }

    #[test]
    fn mode_validation() {
        assert!(ModeSpec::new("x", 1, 5.0, 0.2).is_err());
        assert!(ModeSpec::new("x", 3, -1.0, 0.2).is_err());
        assert!(ModeSpec::new("x", 3, 5.0, -0.2).is_err());
        assert!(ModeSpec::new("x", 3, 5.0, 0.0).is_ok());
    }

    #[test]
    fn coupling_to_missing_mode_is_rejected() {
        let m = vec![ModeSpec::new("q", 3, 5.0, 0.2).unwrap()];
        let err = SystemSpec::new(m, vec![Coupling::new(0, 3, 0.1)]).unwrap_err();
        assert!(matches!(err, Error::ModeOutOfRange { index: 3, .. }));
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let m = vec![ModeSpec::new("q", 10, 5.0, 0.2).unwrap(); 3];
        let err = SystemSpec::with_dim_cap(m, vec![], 999).unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { dim: 1000, cap: 999 }));
    }

    #[test]
    fn ordering_has_mode_zero_slowest() {
        let b = Basis::full(&[3, 4]);
        assert_eq!(b.occupations(1), vec![0, 1]);
        assert_eq!(b.occupations(4), vec![1, 0]);
        assert_eq!(b.index_of(&[2, 3]), Some(11));
        assert_eq!(b.index_of(&[3, 0]), None);
    }

    #[test]
    fn restricted_basis_round_trips() {
        let b = Basis::restricted(&[3, 3, 3], |o| o.iter().map(|&n| n as usize).sum::<usize>() == 2);
        assert_eq!(b.len(), 6);
        for i in 0..b.len() {
            assert_eq!(b.index_of(&b.occupations(i)), Some(i));
        }
        assert_eq!(b.index_of(&[1, 0, 0]), None);
    }

    #[test]
    fn label_parsing_and_display() {
        let l: BareLabel = "|101>".parse().unwrap();
        assert_eq!(l.occupations(), &[1, 0, 1]);
        assert_eq!(l.to_string(), "101");
        let w: BareLabel = "1,12".parse().unwrap();
        assert_eq!(w.to_string(), "1,12");
        assert!("1a".parse::<BareLabel>().is_err());
        assert!("".parse::<BareLabel>().is_err());
    }

    #[test]
    fn ladder_elements() {
        let s = two_modes();
        let a = destroy(&s, 1).unwrap().to_dense();
        let b = s.full_basis();
        let i = b.index_of(&[0, 3]).unwrap();
        let j = b.index_of(&[0, 2]).unwrap();
        assert!((a[(j, i)].re - 3f64.sqrt()).abs() < 1e-15);
        let n = number(&s, 1).unwrap().to_dense();
        assert!((n[(i, i)].re - 3.0).abs() < 1e-15);
        let ad = create(&s, 1).unwrap().to_dense();
        assert!((ad - a.adjoint()).norm() < 1e-15);
    }

    #[test]
    fn squared_monomials_match_matrix_powers() {
        let d = 6;
        let a = local_destroy(d);
        let mut sum = OperatorSum::new(&[d]);
        sum.push_real(1.0, &[Monomial::new(0, 2, 2)]).unwrap();
        sum.push_real(1.0, &[Monomial::new(0, 0, 2)]).unwrap();
        let m = sum.to_dense(&Basis::full(&[d])).unwrap();
        let ad = a.adjoint();
        let expected = &ad * &ad * &a * &a + &a * &a;
        assert!((m - expected).norm() < 1e-12);
    }

    #[test]
    fn embed_agrees_with_destroy() {
        let s = two_modes();
        let e = embed(&s, 0, &local_destroy(3)).unwrap();
        let d = destroy(&s, 0).unwrap();
        assert!((e.to_dense() - d.to_dense()).norm() < 1e-15);
        assert!(embed(&s, 0, &local_destroy(4)).is_err());
    }

    #[test]
    fn repeated_mode_in_term_is_rejected() {
        let mut sum = OperatorSum::new(&[3, 3]);
        assert!(sum
            .push_real(1.0, &[Monomial::new(0, 1, 0), Monomial::new(0, 0, 1)])
            .is_err());
    }

    #[test]
    fn large_operators_are_sparse() {
        let s = SystemSpec::new(vec![ModeSpec::new("q", 5, 5.0, 0.2).unwrap(); 6], vec![]).unwrap();
        let a = destroy(&s, 2).unwrap();
        assert!(!a.is_dense());
        assert_eq!(a.dim(), 15625);
    }
}
