use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use ridgeboot::estimator::{expansion_check, improved_fit, threshold_select};
use ridgeboot::infer::{sample_quantile, wild_draws, BootstrapConfig};
use ridgeboot::model::{complement_project, DesignMatrix, Hyperparams, ModelFrame};
use ridgeboot::predict::EmpiricalCdf;
use ridgeboot::rng::StreamSpec;

fn frame_from_seed(n: usize, p: usize, seed: u64) -> ModelFrame {
    let mut s = StreamSpec::new(seed, 0).stream();
    let x = DesignMatrix::from_row_slice(n, p, &s.normal(0.0, 1.0, n * p).unwrap()).unwrap();
    let beta = DVector::from_fn(p, |j, _| if j % 3 == 0 { 1.5 } else { 0.0 });
    let y = x.as_matrix() * beta + DVector::from_vec(s.normal(0.0, 1.0, n).unwrap());
    ModelFrame::new(x, y, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_is_smallest_reaching_order_statistic(
        values in prop::collection::vec(0u8..8, 1..50),
        level in 0.001f64..1.0,
    ) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let q = sample_quantile(&values, level).unwrap();
        let ecdf = |x: f64| values.iter().filter(|&&v| v <= x).count() as f64 / values.len() as f64;
        prop_assert!(values.contains(&q));
        prop_assert!(ecdf(q) >= level);
        for &v in values.iter().filter(|&&v| v < q) {
            prop_assert!(ecdf(v) < level);
        }
    }

    #[test]
    fn selection_shrinks_with_threshold(
        v in prop::collection::vec(-3.0f64..3.0, 1..30),
        b1 in 0.0f64..3.0,
        b2 in 0.0f64..3.0,
    ) {
        let v = DVector::from_vec(v);
        let (lo, hi) = (b1.min(b2), b1.max(b2));
        let wide = threshold_select(&v, lo);
        let narrow = threshold_select(&v, hi);
        prop_assert!(narrow.iter().all(|i| wide.contains(i)));
        prop_assert!(narrow.iter().all(|&i| v[i].abs() > hi));
    }

    #[test]
    fn projector_is_idempotent(n in 1usize..12, p in 1usize..16, seed in any::<u64>()) {
        let frame = frame_from_seed(n, p, seed);
        let mut s = StreamSpec::new(seed, 1).stream();
        let v = DVector::from_vec(s.normal(0.0, 1.0, p).unwrap());
        let once = frame.svd().row_space_project(&v).unwrap();
        let twice = frame.svd().row_space_project(&once).unwrap();
        let perp = complement_project(frame.svd(), &v).unwrap();
        prop_assert!((&twice - &once).amax() < 1e-10);
        prop_assert!((once + perp - v).amax() < 1e-10);
    }

    #[test]
    fn expansion_identity_holds(n in 2usize..30, p in 1usize..20, rho in 0.01f64..50.0, seed in any::<u64>()) {
        let frame = frame_from_seed(n, p, seed);
        let mut s = StreamSpec::new(seed, 2).stream();
        let beta = DVector::from_vec(s.normal(0.0, 1.0, p).unwrap());
        let eps = DVector::from_vec(s.normal(0.0, 1.0, n).unwrap());
        prop_assert!(expansion_check(&frame, &beta, &eps, rho).unwrap() <= 1e-9);
    }

    #[test]
    fn residual_ecdf_is_centered(residuals in prop::collection::vec(-100.0f64..100.0, 1..60)) {
        let cdf = EmpiricalCdf::from_residuals(&residuals).unwrap();
        let mean = cdf.values().iter().sum::<f64>() / cdf.len() as f64;
        prop_assert!(mean.abs() < 1e-10);
        prop_assert!(cdf.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fit_invariants(n in 5usize..40, p in 1usize..25, rho in 0.1f64..10.0, b in 0.0f64..2.0, seed in any::<u64>()) {
        let frame = frame_from_seed(n, p, seed);
        let fit = improved_fit(&frame, Hyperparams::new(rho, b).unwrap()).unwrap();
        prop_assert!(fit.sigma2_hat >= 0.0);
        prop_assert!(fit.tau_hat.iter().all(|&t| t >= (1.0 / n as f64).sqrt() - 1e-15));
        for j in 0..p {
            if fit.selected.contains(&j) {
                prop_assert_eq!(fit.theta_hat[j], fit.theta_tilde[j]);
            } else {
                prop_assert_eq!(fit.theta_hat[j], 0.0);
            }
        }
        prop_assert!(fit.residuals_centered.mean().abs() < 1e-10);
    }
}

#[test]
fn bootstrap_draws_are_thread_count_independent() {
    let frame = frame_from_seed(60, 12, 3)
        .with_combination(DMatrix::from_fn(4, 12, |i, j| ((i + 2 * j) % 5) as f64 - 2.0))
        .unwrap();
    let fit = improved_fit(&frame, Hyperparams::new(1.0, 0.4).unwrap()).unwrap();
    let cfg = BootstrapConfig::new(300, 0.05, 11).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| wild_draws(&frame, &fit, &cfg).unwrap())
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        let other = run(threads);
        assert_eq!(
            one.stats.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            other.stats.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
