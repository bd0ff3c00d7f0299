//! Dense Hermitian eigendecomposition and matrix exponential actions.

use crate::{DMatrix, Error, Result, C64};
use nalgebra::SymmetricEigen;

/// Eigenpairs of a dense Hermitian matrix, ascending in energy.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: DMatrix<C64>,
}

fn is_real(m: &DMatrix<C64>) -> bool {
    m.iter().all(|v| v.im == 0.0)
}

/// Diagonalizes a Hermitian matrix. Purely real input is handled by the real
/// symmetric solver, which is several times faster.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> Result<EigenPairs> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let (vals, vecs) = if is_real(m) {
        let re = m.map(|v| v.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors.map(|v| C64::new(v, 0.0)))
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let values = order.iter().map(|&i| vals[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    Ok(EigenPairs { values, vectors })
}

/// `exp(-i t H)` for Hermitian `H` through its eigendecomposition.
pub fn unitary_propagator(h: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    let eig = hermitian_eigen(h)?;
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    ));
    Ok(&eig.vectors * phases * eig.vectors.adjoint())
}

/// Largest absolute row sum.
pub fn norm_inf(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows())
        .map(|r| m.row(r).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Applies `exp(-i dt H)` to the columns of `block` by a truncated Taylor
/// series with scaling. The diagonal is shifted to its midpoint first so that
/// large uniform offsets do not inflate the number of substeps.
pub fn expm_apply(h: &DMatrix<C64>, block: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let n = h.nrows();
    assert_eq!(block.nrows(), n);
    if n == 0 || dt == 0.0 {
        return block.clone();
    }
    let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        (lo.min(h[(i, i)].re), hi.max(h[(i, i)].re))
    });
    let mu = 0.5 * (lo + hi);
    let mut shifted = h.clone();
    for i in 0..n {
        shifted[(i, i)] -= C64::new(mu, 0.0);
    }
    let scale = norm_inf(&shifted) * dt.abs();
    let substeps = scale.ceil().max(1.0) as usize;
    let tau = dt / substeps as f64;
    let a = shifted * C64::new(0.0, -tau);
    let mut out = block.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        let mut sum = out.clone();
        let base = sum.norm().max(f64::MIN_POSITIVE);
        for k in 1..60 {
            term = &a * term / C64::new(k as f64, 0.0);
            sum += &term;
            if term.norm() <= 1e-17 * base {
                break;
            }
        }
        out = sum;
    }
    out * C64::from_polar(1.0, -mu * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn eigen_residuals_and_order() {
        let h = random_hermitian(12, 3);
        let e = hermitian_eigen(&h).unwrap();
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let resid = &h * &e.vectors - &e.vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(12, e.values.iter().map(|&v| C64::new(v, 0.0))));
        assert!(resid.norm() < 1e-12);
    }

    #[test]
    fn real_path_matches_complex_path() {
        let h = random_hermitian(8, 5).map(|v| C64::new(v.re, 0.0));
        let real = hermitian_eigen(&h).unwrap();
        let cplx = SymmetricEigen::new(h.clone());
        let mut cv: Vec<f64> = cplx.eigenvalues.iter().copied().collect();
        cv.sort_by(f64::total_cmp);
        for (a, b) in real.values.iter().zip(cv) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn taylor_action_matches_eigen_propagator() {
        let mut h = random_hermitian(10, 9) * C64::new(30.0, 0.0);
        for i in 0..10 {
            h[(i, i)] += C64::new(400.0, 0.0);
        }
        let psi = DMatrix::from_fn(10, 2, |r, c| C64::new((r + c) as f64, 1.0));
        let u = unitary_propagator(&h, 0.37).unwrap();
        let diff = (expm_apply(&h, &psi, 0.37) - &u * &psi).norm() / psi.norm();
        assert!(diff < 1e-11, "{diff}");
    }
}
