//! Stretched-exponential relaxation fits and a piecewise-linear trend
//! detector for fitted time scales.

use crate::{Error, Result};
use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DVector, Dyn, OMatrix, OVector, U2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Fewest samples accepted by [`fit_stretched_exp`].
pub const MIN_FIT_POINTS: usize = 5;

/// Parameters of `C(t) = exp(-(t / t0)^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StretchedExp {
    /// Relaxation time, same unit as the sample times.
    pub t0: f64,
    /// Stretching exponent.
    pub n: f64,
    /// Root-mean-square residual over the fitted window.
    pub residual: f64,
    /// Root-mean-square residual of the model over the whole series.
    pub residual_full: f64,
    /// Number of leading samples used.
    pub window: usize,
}

impl StretchedExp {
    pub fn eval(&self, t: f64) -> f64 {
        model(t, self.t0.ln(), self.n)
    }
}

fn model(t: f64, ln_t0: f64, n: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (-(n * (t.ln() - ln_t0)).exp()).exp()
}

struct Problem<'a> {
    t: &'a [f64],
    c: &'a [f64],
    p: OVector<f64, U2>,
}

impl LeastSquaresProblem<f64, Dyn, U2> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U2>;
    type ParameterStorage = Owned<f64, U2>;

    fn set_params(&mut self, x: &OVector<f64, U2>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> OVector<f64, U2> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (l, n) = (self.p[0], self.p[1]);
        Some(DVector::from_iterator(
            self.t.len(),
            self.t.iter().zip(self.c).map(|(&t, &c)| model(t, l, n) - c),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U2>> {
        let (l, n) = (self.p[0], self.p[1]);
        let mut j = OMatrix::<f64, Dyn, U2>::zeros(self.t.len());
        for (r, &t) in self.t.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let log_ratio = t.ln() - l;
            let u = (n * log_ratio).exp();
            let m = (-u).exp();
            j[(r, 0)] = m * n * u;
            j[(r, 1)] = -m * u * log_ratio;
        }
        Some(j)
    }
}

fn rms(t: &[f64], c: &[f64], ln_t0: f64, n: f64) -> f64 {
    let s: f64 = t.iter().zip(c).map(|(&t, &c)| (model(t, ln_t0, n) - c).powi(2)).sum();
    (s / t.len() as f64).sqrt()
}

/// Number of leading samples fitted: through the first value below `1/e`,
/// or the whole series if it never drops that far.
pub fn fit_window(c: &[f64]) -> usize {
    let limit = (-1.0f64).exp();
    c.iter().position(|&v| v < limit).map_or(c.len(), |i| i + 1)
}

/// Least-squares fit of a normalized decay to `exp(-(t/t0)^n)` with
/// Levenberg-Marquardt from several starting exponents. `seed` perturbs the
/// starting points reproducibly.
pub fn fit_stretched_exp(t: &[f64], c: &[f64], seed: u64) -> Result<StretchedExp> {
    if t.len() != c.len() {
        return Err(Error::Fit(format!("{} times but {} values", t.len(), c.len())));
    }
    if t.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let w = fit_window(c);
    if w < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{w} samples in the fit window, need at least {MIN_FIT_POINTS}"
        )));
    }
    let (tw, cw) = (&t[..w], &c[..w]);
    let span = tw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(span > 0.0) {
        return Err(Error::Fit("sample times must extend past zero".into()));
    }
    // Time at which the data first reach 1/e, or the end of the window.
    let limit = (-1.0f64).exp();
    let guess_t0 = tw
        .iter()
        .zip(cw)
        .find(|(_, &v)| v < limit)
        .map_or(span, |(&t, _)| t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, f64, f64)> = None;
    for n0 in [0.5, 1.0, 2.0] {
        let jitter_t: f64 = rng.gen_range(-0.05..0.05);
        let jitter_n: f64 = rng.gen_range(-0.05..0.05);
        let start = OVector::<f64, U2>::new(guess_t0.ln() + jitter_t, n0 * (1.0 + jitter_n));
        let problem = Problem { t: tw, c: cw, p: start };
        let (solved, report) = LevenbergMarquardt::new().minimize(problem);
        if !report.termination.was_successful() {
            continue;
        }
        let (l, n) = (solved.p[0], solved.p[1]);
        if !(l.is_finite() && n.is_finite() && n > 0.0) {
            continue;
        }
        let r = rms(tw, cw, l, n);
        if best.is_none_or(|b| r < b.2) {
            best = Some((l, n, r));
        }
    }
    let (l, n, r) = best.ok_or_else(|| Error::Fit("no starting point converged".into()))?;
    Ok(StretchedExp {
        t0: l.exp(),
        n,
        residual: r,
        residual_full: rms(t, c, l, n),
        window: w,
    })
}

/// Best hinge model `y = a + b max(0, x - x_c)` over a grid of break points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendChange {
    pub breakpoint: f64,
    pub intercept: f64,
    pub slope: f64,
    /// Sum of squared residuals.
    pub sse: f64,
}

/// Scans break points from `min(x)` to `max(x)` in steps of `step` and keeps
/// the hinge with the smallest squared error. Flat stretches before the break
/// and linear growth after it are what the model captures.
pub fn trend_change(x: &[f64], y: &[f64], step: f64) -> Result<TrendChange> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Fit("trend detection needs at least three matching samples".into()));
    }
    if !(step > 0.0) {
        return Err(Error::Fit("break-point step must be positive".into()));
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let count = ((hi - lo) / step).round() as usize;
    let mut best: Option<TrendChange> = None;
    for k in 0..=count {
        let xc = lo + k as f64 * step;
        let h: Vec<f64> = x.iter().map(|&v| (v - xc).max(0.0)).collect();
        let m = x.len() as f64;
        let (sh, sy) = (h.iter().sum::<f64>(), y.iter().sum::<f64>());
        let shh: f64 = h.iter().map(|v| v * v).sum();
        let shy: f64 = h.iter().zip(y).map(|(a, b)| a * b).sum();
        let det = m * shh - sh * sh;
        let (a, b) = if det.abs() < 1e-300 {
            (sy / m, 0.0)
        } else {
            ((shh * sy - sh * shy) / det, (m * shy - sh * sy) / det)
        };
        let sse: f64 = h.iter().zip(y).map(|(hv, yv)| (a + b * hv - yv).powi(2)).sum();
        if best.is_none_or(|bst| sse < bst.sse - 1e-15) {
            best = Some(TrendChange {
                breakpoint: xc,
                intercept: a,
                slope: b,
                sse,
            });
        }
    }
    Ok(best.expect("at least one break point"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(t0: f64, n: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.25).collect();
        let c = t.iter().map(|&x| (-(x / t0).powf(n)).exp()).collect();
        (t, c)
    }

    #[test]
    fn recovers_exact_parameters() {
        for (t0, n) in [(12.0, 1.0), (20.0, 2.3), (7.5, 0.6)] {
            let (t, c) = synthetic(t0, n);
            let f = fit_stretched_exp(&t, &c, 7).unwrap();
            assert!((f.t0 - t0).abs() < 1e-6 * t0, "{f:?}");
            assert!((f.n - n).abs() < 1e-6, "{f:?}");
        }
    }

    #[test]
    fn window_stops_below_inverse_e() {
        assert_eq!(fit_window(&[1.0, 0.8, 0.5, 0.3, 0.2]), 4);
        assert_eq!(fit_window(&[1.0, 0.9, 0.8]), 3);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let t = [0.0, 1.0, 2.0];
        let c = [1.0, 0.1, 0.01];
        assert!(matches!(fit_stretched_exp(&t, &c, 0), Err(Error::Fit(_))));
    }

    #[test]
    fn same_seed_same_answer() {
        let (t, mut c) = synthetic(15.0, 1.4);
        for (i, v) in c.iter_mut().enumerate() {
            *v += 0.01 * ((i * 37 % 11) as f64 - 5.0) / 5.0;
        }
        let a = fit_stretched_exp(&t, &c, 3).unwrap();
        let b = fit_stretched_exp(&t, &c, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hinge_locates_break() {
        let x: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&v| 3.0 + 2.0 * (v - 1.2f64).max(0.0)).collect();
        let tc = trend_change(&x, &y, 0.01).unwrap();
        assert!((tc.breakpoint - 1.2).abs() < 1e-9, "{tc:?}");
        assert!((tc.slope - 2.0).abs() < 1e-9);
    }
}
