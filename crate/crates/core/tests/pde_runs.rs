use metastable::layer_ode::VelocityMode;
use metastable::pde::{extract_layers, initial_data, integrate_pde, InitialData, PdeParams, Stepper, PdeState, VelocityLift};
use metastable::potential::quartic_potential;
use metastable::profile::{Field, LayerVector};

fn third_derivative_at_ends(u: &[f64], dx: f64) -> f64 {
    let one_sided = |a: &[f64]| (-5.0 * a[0] + 18.0 * a[1] - 24.0 * a[2] + 14.0 * a[3] - 3.0 * a[4]) / (2.0 * dx.powi(3));
    let n = u.len();
    let right: Vec<f64> = (0..5).map(|k| u[n - 1 - k]).collect();
    one_sided(&u[..5]).abs().max(one_sided(&right).abs())
}

#[test]
fn neumann_third_derivative_vanishes_under_refinement() {
    let pot = quartic_potential();
    let pi = std::f64::consts::PI;
    let mut est = Vec::new();
    for n in [64, 128, 256] {
        let params = PdeParams::new(0.15, 1.0, n, 1e-3, 0.05);
        let u = Field::from_fn(n, |x| 0.3 * (pi * x).cos() + 0.2 * (2.0 * pi * x).cos());
        let mut s = PdeState::new(u, Field::zeros(n), 0.0).unwrap();
        let mut st = Stepper::new(&params, &pot).unwrap();
        for _ in 0..params.steps() {
            st.step(&mut s).unwrap();
        }
        est.push(third_derivative_at_ends(&s.u.u, s.u.dx()));
    }
    assert!(est[1] < est[0] / 3.0 && est[2] < est[1] / 3.0, "{est:?}");
}

#[test]
fn layer_positions_converge_in_space() {
    let pot = quartic_potential();
    let h0 = LayerVector::new(vec![0.31, 0.66]).unwrap();
    let run = |n: usize| {
        let params = PdeParams { stride: 1000, ..PdeParams::new(0.07, 50.0, n, 1e-3, 2.0) };
        let init = InitialData::Layers { h0: h0.clone(), velocity: None };
        let r = integrate_pde(&init, &params, &pot, false, |_, _| Ok(())).unwrap();
        r.snapshots.last().unwrap().layers.clone()
    };
    let reference = run(2048);
    let err = |n: usize| {
        let h = run(n);
        h.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(256), err(512));
    assert!(e2 <= e1 / 3.0, "{e1:e} {e2:e}");
}

#[test]
fn two_layers_drift_left_under_inertia() {
    let pot = quartic_potential();
    let params = PdeParams { stride: 50_000, lift: VelocityLift::Tangent, ..PdeParams::new(0.07, 50.0, 1024, 1e-3, 300.0) };
    let h0 = LayerVector::new(vec![0.31, 0.66]).unwrap();
    let (u0, _) = initial_data(&h0, None, &params, &pot).unwrap();
    let start = extract_layers(&u0).unwrap();
    let init = InitialData::Layers { h0, velocity: Some(VelocityMode::Forward) };
    let run = integrate_pde(&init, &params, &pot, false, |_, _| Ok(())).unwrap();
    let end = &run.snapshots.last().unwrap().layers;
    assert_eq!(end.len(), 2);
    for j in 0..2 {
        assert!(end[j] < start[j], "layer {j} {} -> {}", start[j], end[j]);
    }
    assert!((run.final_state.mass() - run.final_state.m0).abs() < 1e-10);
}
