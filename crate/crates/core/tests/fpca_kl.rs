mod common;

use funsel::statproc::fit_fpca;
use funsel::{inner_product, l2_norm};
use proptest::prelude::*;

#[test]
fn rank_two_design_is_recovered() {
    let model = common::kl(101, vec![4.0, 1.0], 0.0);
    let sample = common::draw(&model, 2000, 2024).sample;
    let fit = fit_fpca(&sample, 2).unwrap();
    let g = sample.grid();
    for k in 0..2 {
        let rel = (fit.eigenvalues[k] - model.variances[k]).abs() / model.variances[k];
        assert!(rel < 0.15, "eigenvalue {k}: {} vs {}", fit.eigenvalues[k], model.variances[k]);
        let a = fit.eigenfunctions.row(k);
        let phi = model.basis.row(k);
        let sign = inner_product(a, phi, g).unwrap().signum();
        let err = l2_norm((&a - &(&phi * sign)).view(), g).unwrap();
        assert!(err < 0.2, "eigenfunction {k}: L2 error {err}");
    }
    for a in 0..2 {
        for b in 0..2 {
            let ip = inner_product(fit.eigenfunctions.row(a), fit.eigenfunctions.row(b), g).unwrap();
            let target = if a == b { 1.0 } else { 0.0 };
            assert!((ip - target).abs() < 1e-8, "({a},{b}): {ip}");
        }
    }
}

#[test]
fn eigenvalues_sum_to_total_variance_at_full_rank() {
    let model = common::kl(15, vec![3.0, 2.0, 1.0, 0.5], 0.2);
    let sample = common::draw(&model, 40, 8).sample;
    let fit = fit_fpca(&sample, 15).unwrap();
    let sum: f64 = fit.eigenvalues.sum();
    assert!((sum - fit.total_variance).abs() < 1e-9 * fit.total_variance);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_basis_is_orthonormal(seed in 0u64..10_000, n in 3usize..60, len in 5usize..40, noise in 0.0f64..0.5) {
        let model = common::kl(len, vec![2.0, 1.0, 0.25], noise);
        let sample = common::draw(&model, n, seed).sample;
        let l = 3usize.min(len).min(n - 1);
        let fit = fit_fpca(&sample, l).unwrap();
        let g = sample.grid();
        for a in 0..l {
            for b in 0..l {
                let ip = inner_product(fit.eigenfunctions.row(a), fit.eigenfunctions.row(b), g).unwrap();
                let target = if a == b { 1.0 } else { 0.0 };
                prop_assert!((ip - target).abs() < 1e-8);
            }
        }
        prop_assert!(fit.eigenvalues.windows(2).into_iter().all(|w| w[0] >= w[1]));
        prop_assert!(fit.eigenvalues.iter().all(|&v| v >= -1e-12));
    }
}
