use mathieu::analytic::driven_levels;
use mathieu::composite::{create, destroy, number, Coupling, ModeSpec, SystemSpec};
use mathieu::evolve::{chi_from_map, gate_metrics, propagate, PropagationOptions, ProcessMatrix, TimeTerm};
use mathieu::io::Csv;
use mathieu::models::{build_rwa, mathieu_generator, DriveSpec};
use mathieu::spectral::{jzz_at, zz_sweep, CouplingLabels};
use mathieu::validate::level_error;
use mathieu::{presets, DMatrix, C64};
use proptest::prelude::*;
use std::sync::Arc;

fn pair(d1: usize, d2: usize, w1: f64, w2: f64, a1: f64, a2: f64, g: f64) -> SystemSpec {
    SystemSpec::new(
        vec![ModeSpec::new("a", d1, w1, a1).unwrap(), ModeSpec::new("b", d2, w2, a2).unwrap()],
        vec![Coupling::new(0, 1, g)],
    )
    .unwrap()
}

fn random_unitary(n: usize, seed: &[f64]) -> DMatrix<C64> {
    let mut h = DMatrix::<C64>::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let re = seed[k % seed.len()];
            let im = if i == j { 0.0 } else { seed[(k + 7) % seed.len()] };
            h[(i, j)] = C64::new(re, im);
            h[(j, i)] = C64::new(re, -im);
            k += 1;
        }
    }
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, e)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn rotating_frame_hamiltonians_are_hermitian(
        d1 in 2usize..5, d2 in 5usize..7,
        w1 in 4.0f64..6.0, w2 in 4.0f64..6.0,
        a1 in 0.1f64..0.4, a2 in 0.1f64..0.4,
        g in -0.1f64..0.1, eps in 0.0f64..0.2, wd in 8.0f64..12.0, phi in -3.0f64..3.0,
    ) {
        let system = pair(d1, d2, w1, w2, a1, a2, g);
        let drive = DriveSpec { phi, ..DriveSpec::new(1, eps, wd) };
        let h = build_rwa(&system, &drive).unwrap();
        prop_assert!(h.hermitian_deviation() <= 1e-12);
    }

    #[test]
    fn operators_on_distinct_modes_commute(d1 in 2usize..5, d2 in 2usize..5, d3 in 2usize..4) {
        let system = SystemSpec::new(
            vec![
                ModeSpec::new("a", d1, 5.0, 0.2).unwrap(),
                ModeSpec::new("b", d2, 5.1, 0.2).unwrap(),
                ModeSpec::new("c", d3, 5.2, 0.2).unwrap(),
            ],
            vec![],
        ).unwrap();
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                let ops = [destroy(&system, i).unwrap(), create(&system, i).unwrap(), number(&system, i).unwrap()];
                for x in &ops {
                    for y in [destroy(&system, j).unwrap(), create(&system, j).unwrap()] {
                        prop_assert!(x.commutator(&y).unwrap().max_abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn driven_propagation_conserves_norm(eps in 0.0f64..0.05, amp in 0.0f64..0.04, period in 10.0f64..60.0) {
        let system = presets::transmon_pair(5);
        let h0 = build_rwa(&system, &presets::pair_drive(eps)).unwrap();
        let gen = mathieu_generator(&system, 1, 0.0).unwrap().to_dense(&system.full_basis()).unwrap();
        let term = TimeTerm::new(gen, Arc::new(move |t: f64| C64::new(amp * (t / period).sin(), 0.0)), false);
        let mut psi = DMatrix::zeros(25, 1);
        psi[(0, 0)] = C64::new(0.6, 0.0);
        psi[(5, 0)] = C64::new(0.0, 0.8);
        let tr = propagate(&h0, &[term], &psi, &[0.0, 10.0, 20.0, 30.0], &PropagationOptions::default()).unwrap();
        prop_assert!(tr.max_norm_drift <= 1e-8, "drift {}", tr.max_norm_drift);
    }

    #[test]
    fn process_matrices_are_positive_and_bounded(seed in proptest::collection::vec(-2.0f64..2.0, 12), keep in 4usize..7) {
        // A unitary on a larger space restricted to its first four levels
        // models a leaky gate.
        let u = random_unitary(keep, &seed);
        let map = u.view((0, 0), (4, 4)).into_owned();
        let chi = chi_from_map(&map);
        let tr = chi.trace();
        let purity = (&chi.chi * &chi.chi).trace().re;
        prop_assert!(chi.min_eigenvalue() >= -1e-10);
        prop_assert!(tr <= 1.0 + 1e-9);
        prop_assert!(purity <= tr * tr + 1e-9);
        let m = gate_metrics(&chi, &ProcessMatrix::from_kraus(&[DMatrix::identity(4, 4)])).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.fidelity));
    }

    #[test]
    fn sweep_csv_is_deterministic(start in 0.0f64..0.01, step in 0.001f64..0.01) {
        let system = presets::transmon_pair(5);
        let grid: Vec<f64> = (0..6).map(|i| start + step * i as f64).collect();
        let render = || {
            let s = zz_sweep(&system, &presets::pair_drive(0.0), &grid, &CouplingLabels::pair()).unwrap();
            let mut csv = Csv::new(&["epsilon", "jzz"]);
            for p in &s.samples {
                csv.numbers(&[p.epsilon, p.j_zz]);
            }
            csv.render()
        };
        prop_assert_eq!(render(), render());
    }

    #[test]
    fn driven_levels_track_diagonalization(
        alpha in 0.15f64..0.35, detuning in 0.8f64..1.6, frac in 0.01f64..0.25,
    ) {
        let delta_d = detuning * alpha;
        let eps = frac * alpha;
        let omega = 5.5;
        let omega_d = delta_d + 2.0 * omega - 5.0 * alpha;
        let system = SystemSpec::new(vec![ModeSpec::new("q", 10, omega, alpha).unwrap()], vec![]).unwrap();
        let levels = driven_levels(alpha, delta_d, eps).unwrap();
        let err = level_error(&system, omega_d, eps, &levels).unwrap();
        prop_assert!(err <= 3.0 * eps * eps / alpha, "error {err} at eps {eps}");
    }

    #[test]
    fn zz_grows_with_drive_power_below_the_operating_range(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let system = presets::transmon_pair(6);
        let drive = presets::pair_drive(0.0);
        let top = 1.5 * 0.020239;
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        prop_assume!(hi - lo > 1e-3);
        // Sample uniformly in eps^2.
        let (e1, e2) = (top * lo.sqrt(), top * hi.sqrt());
        let labels = CouplingLabels::pair();
        prop_assert!(jzz_at(&system, &drive, &labels, e1).unwrap() < jzz_at(&system, &drive, &labels, e2).unwrap());
    }
}

#[test]
fn uncoupled_pair_has_no_zz_at_any_drive() {
    let system = pair(6, 6, 5.2, 5.75, 0.25, 0.25, 0.0);
    let grid: Vec<f64> = (0..=10).map(|i| 0.01 * i as f64).collect();
    let s = zz_sweep(&system, &presets::pair_drive(0.0), &grid, &CouplingLabels::pair()).unwrap();
    for p in &s.samples {
        assert!(p.j_zz.abs() < 1e-12, "{p:?}");
    }
    assert_eq!(s.sign_changes, 0);
}
