//! Krylov-subspace methods for large Hermitian operators: a thick-restart
//! Lanczos eigensolver and the action of `exp(-i t H)` on a vector.

use crate::composite::{Matrix, Operator};
use crate::linalg::{hermitian_eigen, EigenPairs};
use crate::sparse::CsrMatrix;
use crate::{DMatrix, DVector, Error, Result, C64};
use nalgebra::SymmetricEigen;

/// Minimal interface of a Hermitian linear operator.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[C64], y: &mut [C64]);
    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;

    fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(self.dim());
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }
}

impl LinearOp for CsrMatrix {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }
    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        self.mul_vec_into(x, y)
    }
    fn norm_bound(&self) -> f64 {
        self.norm_inf()
    }
}

impl LinearOp for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let xv = nalgebra::DVectorView::from_slice(x, x.len());
        let r = self * xv;
        y.copy_from_slice(r.as_slice());
    }
    fn norm_bound(&self) -> f64 {
        crate::linalg::norm_inf(self)
    }
}

impl LinearOp for Operator {
    fn dim(&self) -> usize {
        Operator::dim(self)
    }
    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        match self.matrix() {
            Matrix::Dense(m) => m.apply_into(x, y),
            Matrix::Sparse(m) => m.apply_into(x, y),
        }
    }
    fn norm_bound(&self) -> f64 {
        match self.matrix() {
            Matrix::Dense(m) => m.norm_bound(),
            Matrix::Sparse(m) => m.norm_bound(),
        }
    }
}

/// Settings for [`lowest_eigenpairs`].
#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Number of lowest eigenpairs requested.
    pub k: usize,
    /// Krylov basis size before a restart; 0 picks `max(2k + 20, 60)`.
    pub max_basis: usize,
    /// Residual tolerance relative to the operator norm bound.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            k: 30,
            max_basis: 0,
            tol: 1e-9,
            max_restarts: 400,
            seed: 0x5eed,
        }
    }
}

fn pseudo_random(n: usize, seed: u64) -> DVector<C64> {
    let mut s = seed | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let v = DVector::from_fn(n, |_, _| C64::new(next(), next()));
    let nv = v.norm();
    v / C64::new(nv, 0.0)
}

/// Orthogonalizes `w` against `basis` (two passes of classical Gram-Schmidt)
/// and returns its remaining norm.
fn orthogonalize(w: &mut DVector<C64>, basis: &[DVector<C64>]) -> f64 {
    for _ in 0..2 {
        for v in basis {
            let c = v.dotc(w);
            w.axpy(-c, v, C64::new(1.0, 0.0));
        }
    }
    w.norm()
}

/// Lowest `k` eigenpairs of a Hermitian operator via thick-restart Lanczos
/// with full reorthogonalization and an explicit Rayleigh-Ritz step.
pub fn lowest_eigenpairs<A: LinearOp + ?Sized>(a: &A, opts: &LanczosOptions) -> Result<EigenPairs> {
    let n = a.dim();
    let k = opts.k.min(n);
    if k == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: DMatrix::zeros(n, 0),
        });
    }
    let m = if opts.max_basis == 0 {
        (2 * k + 20).max(60)
    } else {
        opts.max_basis.max(k + 2)
    }
    .min(n);
    if m >= n {
        // The Krylov space would be the whole space.
        let mut dense = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = C64::new(1.0, 0.0);
            dense.set_column(j, &a.apply(&e));
        }
        let full = hermitian_eigen(&dense)?;
        return Ok(EigenPairs {
            values: full.values[..k].to_vec(),
            vectors: full.vectors.columns(0, k).into_owned(),
        });
    }
    let scale = a.norm_bound().max(1.0);
    let mut v: Vec<DVector<C64>> = vec![pseudo_random(n, opts.seed)];
    let mut w: Vec<DVector<C64>> = vec![a.apply(&v[0])];
    let mut best_converged = 0;
    let mut salt = opts.seed;
    for restart in 0..opts.max_restarts {
        while v.len() < m {
            let mut cand = w.last().unwrap().clone();
            let before = cand.norm();
            let mut rem = orthogonalize(&mut cand, &v);
            while rem <= 1e-10 * before.max(1e-300) {
                salt = salt.wrapping_add(0x9e37_79b9);
                cand = pseudo_random(n, salt);
                rem = orthogonalize(&mut cand, &v);
            }
            cand /= C64::new(rem, 0.0);
            w.push(a.apply(&cand));
            v.push(cand);
        }
        let len = v.len();
        let mut t = DMatrix::zeros(len, len);
        for i in 0..len {
            for j in i..len {
                let val = v[i].dotc(&w[j]);
                t[(i, j)] = val;
                t[(j, i)] = val.conj();
            }
        }
        for i in 0..len {
            t[(i, i)] = C64::new(t[(i, i)].re, 0.0);
        }
        let ritz = hermitian_eigen(&t)?;
        let combine = |set: &[DVector<C64>], col: usize| {
            let mut acc = DVector::zeros(n);
            for (i, s) in set.iter().enumerate() {
                acc.axpy(ritz.vectors[(i, col)], s, C64::new(1.0, 0.0));
            }
            acc
        };
        let keep = (k + (k / 2).max(5)).min(len - 1);
        let mut xs = Vec::with_capacity(keep);
        let mut axs = Vec::with_capacity(keep);
        let mut converged = 0;
        let mut first_bad: Option<DVector<C64>> = None;
        for c in 0..keep {
            let x = combine(&v, c);
            let ax = combine(&w, c);
            if c < k {
                let r = &ax - &x * C64::new(ritz.values[c], 0.0);
                if r.norm() <= opts.tol * scale {
                    converged += 1;
                } else if first_bad.is_none() {
                    first_bad = Some(r);
                }
            }
            xs.push(x);
            axs.push(ax);
        }
        best_converged = best_converged.max(converged);
        if converged == k {
            let vectors = DMatrix::from_fn(n, k, |r, c| xs[c][r]);
            return Ok(EigenPairs {
                values: ritz.values[..k].to_vec(),
                vectors,
            });
        }
        log::debug!("lanczos restart {restart}: {converged}/{k} converged");
        v = xs;
        w = axs;
        let mut r = first_bad.expect("an unconverged pair exists");
        let rem = orthogonalize(&mut r, &v);
        if rem > 1e-14 {
            r /= C64::new(rem, 0.0);
        } else {
            salt = salt.wrapping_add(0x9e37_79b9);
            r = pseudo_random(n, salt);
            let rem = orthogonalize(&mut r, &v);
            r /= C64::new(rem, 0.0);
        }
        w.push(a.apply(&r));
        v.push(r);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        converged: best_converged,
        requested: k,
    })
}

/// Settings for Krylov propagation.
#[derive(Debug, Clone)]
pub struct KrylovOptions {
    /// Maximum Krylov dimension per step.
    pub max_dim: usize,
    /// Local error tolerance per step.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { max_dim: 30, tol: 1e-12 }
    }
}

/// Adaptive propagator for a time-independent Hermitian operator. The
/// accepted step length is carried over between calls.
pub struct KrylovPropagator<'a, A: LinearOp + ?Sized> {
    op: &'a A,
    opts: KrylovOptions,
    step: f64,
    pub matvecs: usize,
}

impl<'a, A: LinearOp + ?Sized> KrylovPropagator<'a, A> {
    pub fn new(op: &'a A, opts: KrylovOptions) -> Self {
        let step = (opts.max_dim as f64 / op.norm_bound().max(1e-12)).max(1e-6);
        KrylovPropagator {
            op,
            opts,
            step,
            matvecs: 0,
        }
    }

    /// Returns `exp(-i t H) psi`; `t` may be negative.
    pub fn apply(&mut self, psi: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
        let mut state = psi.clone();
        let dir = t.signum();
        let mut remaining = t.abs();
        while remaining > 0.0 {
            let (next, taken) = self.step(&state, dir, remaining)?;
            state = next;
            remaining -= taken;
            if remaining < 1e-14 * t.abs() {
                break;
            }
        }
        Ok(state)
    }

    fn step(&mut self, psi: &DVector<C64>, dir: f64, max_dt: f64) -> Result<(DVector<C64>, f64)> {
        let n = psi.len();
        let beta = psi.norm();
        if beta == 0.0 {
            return Ok((psi.clone(), max_dt));
        }
        let mdim = self.opts.max_dim.min(n).max(1);
        let mut basis: Vec<DVector<C64>> = vec![psi / C64::new(beta, 0.0)];
        let mut alpha = Vec::with_capacity(mdim);
        let mut offdiag: Vec<f64> = Vec::with_capacity(mdim);
        let mut exhausted = false;
        let mut tail = 0.0;
        for j in 0..mdim {
            let mut wv = self.op.apply(&basis[j]);
            self.matvecs += 1;
            let a = basis[j].dotc(&wv).re;
            alpha.push(a);
            let rem = orthogonalize(&mut wv, &basis);
            if rem < 1e-13 * beta.max(1.0) {
                exhausted = true;
                break;
            }
            if j + 1 == mdim {
                tail = rem;
                break;
            }
            offdiag.push(rem);
            basis.push(wv / C64::new(rem, 0.0));
        }
        let len = alpha.len();
        let t = DMatrix::from_fn(len, len, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                offdiag[r]
            } else if c + 1 == r {
                offdiag[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let coeffs = |dt: f64| -> DVector<C64> {
            DVector::from_fn(len, |r, _| {
                let mut acc = C64::new(0.0, 0.0);
                for (q, &lam) in eig.eigenvalues.iter().enumerate() {
                    acc += C64::from_polar(eig.eigenvectors[(0, q)] * eig.eigenvectors[(r, q)], -lam * dt * dir);
                }
                acc
            })
        };
        let mut dt = self.step.min(max_dt);
        let mut y;
        loop {
            y = coeffs(dt);
            let err = if exhausted { 0.0 } else { beta * tail * y[len - 1].norm() };
            if err <= self.opts.tol {
                break;
            }
            dt *= 0.5;
            if dt < 1e-12 * max_dt.max(1e-300) {
                return Err(Error::StepUnderflow { t: 0.0, step: dt });
            }
        }
        let full = self.step.min(max_dt);
        if dt == full {
            self.step = (self.step * 1.25).min(1e6);
        } else {
            self.step = dt;
        }
        let mut out = DVector::zeros(n);
        for (j, b) in basis.iter().enumerate().take(len) {
            out.axpy(y[j] * beta, b, C64::new(1.0, 0.0));
        }
        Ok((out, dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_propagator;

    fn chain_matrix(n: usize) -> CsrMatrix {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, C64::new((i as f64 * 0.37).sin() * 3.0, 0.0)));
            if i + 1 < n {
                trip.push((i, i + 1, C64::new(1.0, 0.2)));
                trip.push((i + 1, i, C64::new(1.0, -0.2)));
            }
        }
        CsrMatrix::from_triplets(n, trip).unwrap()
    }

    #[test]
    fn lanczos_matches_dense() {
        let a = chain_matrix(300);
        let dense = hermitian_eigen(&a.to_dense()).unwrap();
        let opts = LanczosOptions {
            k: 6,
            ..Default::default()
        };
        let lz = lowest_eigenpairs(&a, &opts).unwrap();
        for i in 0..6 {
            assert!((lz.values[i] - dense.values[i]).abs() < 1e-8, "{i}");
            let v = lz.vectors.column(i).into_owned();
            let r = a.mul_vec(&v) - &v * C64::new(lz.values[i], 0.0);
            assert!(r.norm() < 1e-8);
        }
    }

    #[test]
    fn lanczos_reports_non_convergence() {
        let a = chain_matrix(400);
        let opts = LanczosOptions {
            k: 20,
            max_basis: 25,
            tol: 1e-15,
            max_restarts: 2,
            seed: 1,
        };
        match lowest_eigenpairs(&a, &opts) {
            Err(Error::NoConvergence { iterations, .. }) => assert_eq!(iterations, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let a = chain_matrix(120);
        let psi = pseudo_random(120, 42);
        let exact = unitary_propagator(&a.to_dense(), 7.5).unwrap() * &psi;
        let mut prop = KrylovPropagator::new(&a, KrylovOptions::default());
        let got = prop.apply(&psi, 7.5).unwrap();
        assert!((got - &exact).norm() < 1e-10);
        let back = prop.apply(&exact, -7.5).unwrap();
        assert!((back - psi).norm() < 1e-10);
    }
}
