use mathieu::composite::{Coupling, ModeSpec, SystemSpec};
use mathieu::evolve::{chi_from_map, gate_metrics, ideal, simulate_gate, GateSetup, PropagationOptions, VirtualZ};
use mathieu::gates::{x_segment, Calibration, GateOptions};
use mathieu::models::DriveSpec;
use mathieu::pulse::compose_schedule;

// Two-level transmons: the computational subspace is the whole space, so
// gate maps compose without losing amplitude.
fn two_level_setup() -> GateSetup {
    let system = SystemSpec::new(
        vec![ModeSpec::new("q1", 2, 5.2, 0.25).unwrap(), ModeSpec::new("q2", 2, 5.75, 0.25).unwrap()],
        vec![Coupling::new(0, 1, 0.03)],
    )
    .unwrap();
    GateSetup {
        system,
        drive: DriveSpec::new(1, 0.0, 10.6),
        qubits: [0, 1],
        virtual_z: VirtualZ::None,
        propagation: PropagationOptions::default(),
    }
}

#[test]
fn sequential_schedules_compose_as_map_products() {
    let setup = two_level_setup();
    let cal = Calibration {
        epsilon_zero: 0.0,
        carriers: [5.2, 5.75],
        matrix_elements: [1.0, 1.0],
        amplitude_scale: [1.0, 1.0],
    };
    let opts = GateOptions {
        xy_duration: 60.0,
        sigma: 12.0,
        ..GateOptions::default()
    };
    let a = x_segment(0, &cal, &opts, 0.0).unwrap();
    let b = x_segment(1, &cal, &opts, opts.xy_duration).unwrap();

    let first = simulate_gate(&setup, &compose_schedule(std::slice::from_ref(&a), opts.sample_rate).unwrap()).unwrap();
    let second = simulate_gate(&setup, &compose_schedule(std::slice::from_ref(&b), opts.sample_rate).unwrap()).unwrap();
    let both = simulate_gate(&setup, &compose_schedule(&[a, b], opts.sample_rate).unwrap()).unwrap();

    let product = &second.map * &first.map;
    let diff = (&both.map - &product).camax();
    assert!(diff <= 1e-9, "map difference {diff:e}");

    let target = chi_from_map(&ideal::xx());
    let f_both = gate_metrics(&chi_from_map(&both.map), &target).unwrap().fidelity;
    let f_product = gate_metrics(&chi_from_map(&product), &target).unwrap().fidelity;
    assert!((f_both - f_product).abs() <= 1e-9, "{f_both} vs {f_product}");
    assert!(both.mean_leakage() <= 1e-12);
}

#[test]
fn empty_schedule_is_the_identity_map() {
    let setup = two_level_setup();
    let map = simulate_gate(&setup, &mathieu::pulse::PulseSchedule::empty(2.0)).unwrap();
    let diff = (&map.map - ideal::identity()).camax();
    assert!(diff <= 1e-12, "{diff:e}");
}

