//! Property tests for the module invariants: boundedness, loss sign,
//! conservation of rows through partitioning and splitting, AUC rank
//! invariance, parameter invariants under updates, and serialization.

mod common;

use proptest::prelude::*;
use spwnn_core::rng::seeded_rng;
use spwnn_core::{
    apply_update, auc, io, loss, partition_data, split, ActivationKind, Dataset, GradientSet,
    Matrix, MomentumState, TaskKind, EPS_DILATION,
};

proptest! {
    #[test]
    fn activations_bounded(t in -30.0f64..30.0) {
        prop_assert!(ActivationKind::Morlet.value(t).abs() <= 1.0);
        let g = ActivationKind::Gaussian.value(t);
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn regression_loss_nonnegative_and_zero_iff_equal(
        ys in prop::collection::vec(-10.0f64..10.0, 1..32),
        vs in prop::collection::vec(-10.0f64..10.0, 1..32),
    ) {
        let n = ys.len().min(vs.len());
        let l = loss(TaskKind::Regression, &vs[..n], &ys[..n]).unwrap();
        prop_assert!(l >= 0.0);
        let zero = loss(TaskKind::Regression, &ys[..n], &ys[..n]).unwrap();
        prop_assert_eq!(zero, 0.0);
        if vs[..n] != ys[..n] {
            prop_assert!(l > 0.0);
        }
    }

    #[test]
    fn classification_loss_nonnegative(
        vs in prop::collection::vec(0.0f64..=1.0, 1..32),
        bits in prop::collection::vec(0u8..2, 1..32),
    ) {
        let n = vs.len().min(bits.len());
        let ys: Vec<f64> = bits[..n].iter().map(|&b| f64::from(b)).collect();
        let l = loss(TaskKind::Classification, &vs[..n], &ys).unwrap();
        prop_assert!(l >= 0.0 && l.is_finite());
    }

    #[test]
    fn partitions_conserve_rows_and_balance(
        n in 1usize..80,
        parts in 1usize..8,
        seed in any::<u64>(),
    ) {
        prop_assume!(parts <= n);
        let xs = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let ys: Vec<f64> = (0..n).map(|i| i as f64 * 10.0).collect();
        let partitions = partition_data(&xs, &ys, parts, seed).unwrap();

        let sizes: Vec<usize> = partitions.iter().map(|p| p.rows.rows()).collect();
        let max = *sizes.iter().max().unwrap();
        let min = *sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);

        let mut all: Vec<f64> = partitions
            .iter()
            .flat_map(|p| p.rows.as_slice().to_vec())
            .collect();
        all.sort_by(f64::total_cmp);
        prop_assert_eq!(all, (0..n).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_conserves_rows(
        n in 2usize..60,
        ratio in 0.2f64..0.8,
        seed in any::<u64>(),
        shuffle in any::<bool>(),
    ) {
        let train_n = (ratio * n as f64).round() as usize;
        prop_assume!(train_n > 0 && train_n < n);
        let ds = Dataset {
            features: Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap(),
            target: (0..n).map(|i| i as f64).collect(),
            feature_names: vec!["x".into()],
            target_name: "y".into(),
            norm_stats: None,
        };
        let pair = split(&ds, ratio, seed, shuffle).unwrap();
        prop_assert_eq!(pair.train.n_rows(), train_n);
        let mut all: Vec<f64> = pair
            .train
            .target
            .iter()
            .chain(&pair.test.target)
            .copied()
            .collect();
        all.sort_by(f64::total_cmp);
        prop_assert_eq!(all, ds.target);
    }

    #[test]
    fn confusion_rates_invariant_under_permutation(
        raw in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..24),
        rotation in 0usize..24,
    ) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| *s).collect();
        let labels: Vec<f64> = raw.iter().map(|(_, l)| f64::from(*l)).collect();
        let k = rotation % scores.len();
        let rotate = |v: &[f64]| -> Vec<f64> {
            v[k..].iter().chain(&v[..k]).copied().collect()
        };
        let original = spwnn_core::confusion_rates(&scores, &labels, 0.5).unwrap();
        let rotated =
            spwnn_core::confusion_rates(&rotate(&scores), &rotate(&labels), 0.5).unwrap();
        prop_assert_eq!(original, rotated);
    }

    #[test]
    fn auc_invariant_under_increasing_affine_transform(
        raw in prop::collection::vec((0.0f64..1.0, 0u8..2), 4..24),
        scale in 0.1f64..50.0,
        shift in -10.0f64..10.0,
    ) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| (s * 8.0).round() / 8.0).collect();
        let labels: Vec<f64> = raw.iter().map(|(_, l)| f64::from(*l)).collect();
        let pos = labels.iter().filter(|&&l| l >= 0.5).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let mapped: Vec<f64> = scores.iter().map(|s| s * scale + shift).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&mapped, &labels).unwrap());
    }

    #[test]
    fn updates_preserve_model_invariants(
        seed in any::<u64>(),
        steps in 1usize..20,
        grad_scale in 0.0f64..50.0,
    ) {
        let mut rng = seeded_rng(seed);
        let mut model = common::random_model(
            &mut rng, 2, 3, ActivationKind::Morlet, TaskKind::Regression,
        );
        let mut momentum = MomentumState::zeros_like(&model);
        let h = common::hp(3, 1, seed);
        use rand::Rng;
        for _ in 0..steps {
            let mut grads = GradientSet::zeros(2, 3);
            for v in grads.input_weights.as_mut_slice() {
                *v = rng.random_range(-grad_scale..=grad_scale);
            }
            for v in grads
                .output_weights
                .iter_mut()
                .chain(&mut grads.dilations)
                .chain(&mut grads.translations)
            {
                *v = rng.random_range(-grad_scale..=grad_scale);
            }
            apply_update(&mut model, &grads, &mut momentum, &h).unwrap();
            prop_assert!(model.dilations().iter().all(|a| a.abs() >= EPS_DILATION));
            prop_assert!(model.output_weights().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn model_text_round_trips(seed in any::<u64>(), nin in 1usize..5, nhn in 1usize..6) {
        let mut rng = seeded_rng(seed);
        let model = common::random_model(
            &mut rng, nin, nhn, ActivationKind::Gaussian, TaskKind::Classification,
        );
        let text = io::model_to_string(&model);
        let parsed = io::model_from_str(&text).unwrap();
        prop_assert_eq!(&parsed, &model);
        prop_assert_eq!(io::model_to_string(&parsed), text);
    }
}
