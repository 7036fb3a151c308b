//! Finite-difference oracles for the analytic gradients, exercised on the
//! fixed shapes the module contracts call out.

mod common;

use common::{hp, max_gradient_error_ratio, random_batch, random_model};
use spwnn_core::rng::seeded_rng;
use spwnn_core::{
    average_models, backward, init_model, partition_data, train, ActivationKind, Matrix,
    MomentumState, TaskKind,
};

#[test]
fn backward_matches_finite_differences_on_reference_shape() {
    // n=4, nin=3, nhn=5, both activations, both tasks.
    let mut rng = seeded_rng(0xBACC);
    for activation in [ActivationKind::Morlet, ActivationKind::Gaussian] {
        for task in [TaskKind::Regression, TaskKind::Classification] {
            let model = random_model(&mut rng, 3, 5, activation, task);
            let (xs, ys) = random_batch(&mut rng, 4, 3, task);
            let ratio = max_gradient_error_ratio(&model, &xs, &ys, 1e-5, 1e-4, 1e-8);
            assert!(
                ratio <= 1.0,
                "{activation}/{task}: worst error ratio {ratio}"
            );
        }
    }
}

#[test]
fn backward_perfect_fit_has_zero_gradients() {
    // Build a regression batch whose targets are the model's own outputs.
    let mut rng = seeded_rng(0xF17);
    let model = random_model(
        &mut rng,
        2,
        3,
        ActivationKind::Gaussian,
        TaskKind::Regression,
    );
    let (xs, _) = random_batch(&mut rng, 6, 2, TaskKind::Regression);
    let ys = spwnn_core::predict(&model, &xs).unwrap();
    let grads = backward(&model, &xs, &ys).unwrap();
    for v in grads
        .input_weights
        .as_slice()
        .iter()
        .chain(&grads.output_weights)
        .chain(&grads.dilations)
        .chain(&grads.translations)
    {
        assert!(v.abs() < 1e-12);
    }
}

#[test]
fn one_step_two_partition_average_oracle() {
    // P=2, one epoch, one batch per partition: the trainer's output must be
    // the element-wise mean of two hand-composed single-step updates.
    let mut rng = seeded_rng(0xA1);
    let (xs, ys) = random_batch(&mut rng, 8, 2, TaskKind::Regression);
    let mut h = hp(3, 2, 77);
    h.epochs = 1;
    h.batch_size = 4; // == partition size, so each partition takes one step

    let report = train(&xs, &ys, &h, ActivationKind::Morlet, TaskKind::Regression).unwrap();

    let model0 = init_model(2, &h, ActivationKind::Morlet, TaskKind::Regression).unwrap();
    let parts = partition_data(&xs, &ys, 2, h.seed).unwrap();
    let mut stepped = Vec::new();
    let mut momenta = Vec::new();
    for part in &parts {
        let grads = backward(&model0, &part.rows, &part.targets).unwrap();
        let mut m = model0.clone();
        let mut mom = MomentumState::zeros_like(&m);
        spwnn_core::apply_update(&mut m, &grads, &mut mom, &h).unwrap();
        stepped.push(m);
        momenta.push(mom);
    }
    // Hand mean, computed directly rather than via the trainer's reducer.
    let hand_mean = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect()
    };
    let got = &report.final_model;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    assert!(close(
        got.input_weights().as_slice(),
        &hand_mean(
            stepped[0].input_weights().as_slice(),
            stepped[1].input_weights().as_slice()
        )
    ));
    assert!(close(
        got.output_weights(),
        &hand_mean(stepped[0].output_weights(), stepped[1].output_weights())
    ));
    assert!(close(
        got.dilations(),
        &hand_mean(stepped[0].dilations(), stepped[1].dilations())
    ));
    assert!(close(
        got.translations(),
        &hand_mean(stepped[0].translations(), stepped[1].translations())
    ));

    // Same check through average_models directly.
    let (avg, _) = average_models(&stepped, &momenta).unwrap();
    assert!(close(
        avg.output_weights(),
        &hand_mean(stepped[0].output_weights(), stepped[1].output_weights())
    ));
}

#[test]
fn gradient_check_survives_wide_dilation_range() {
    // Dilations near the clamp boundary still differentiate cleanly.
    let mut rng = seeded_rng(0x1DEA);
    for task in [TaskKind::Regression, TaskKind::Classification] {
        let base = random_model(&mut rng, 2, 4, ActivationKind::Morlet, task);
        let dilations: Vec<f64> = base.dilations().iter().map(|a| a * 0.02).collect();
        let model = spwnn_core::WnnModel::from_parts(
            base.input_weights().clone(),
            base.output_weights().to_vec(),
            dilations,
            base.translations().to_vec(),
            base.activation(),
            task,
        )
        .unwrap();
        let xs = Matrix::from_rows(&[vec![0.02, -0.01], vec![0.008, 0.013]]).unwrap();
        let ys = vec![0.2, 1.0];
        let ratio = max_gradient_error_ratio(&model, &xs, &ys, 1e-7, 1e-3, 1e-7);
        assert!(ratio <= 1.0, "{task}: worst error ratio {ratio}");
    }
}
