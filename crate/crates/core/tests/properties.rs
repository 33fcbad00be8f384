//! Randomized invariants.

use proptest::prelude::*;

use prodreg::cli::data::{read_dataset, write_dataset, Dataset};
use prodreg::diagnostics::{irrepresentable_value, irrepresentable_value_prod, support_metrics};
use prodreg::linalg::{center_columns, projector, thin_svd};
use prodreg::solver::{fit_lasso, fit_penalized, kkt_residual, lambda_max, soft, Penalty, SolverOptions};
use prodreg::transform::{decompose, licm, rgz, TransformSpec};
use prodreg::tuning::fold_assignment;
use prodreg::Matrix;

fn matrix(n: usize, p: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, n * p).prop_map(move |v| Matrix::from_col_major(n, p, v).unwrap())
}

/// Entries in [-3, 3) plus 8 on the diagonal: full column rank with a
/// comfortable gap.
fn well_conditioned(n: usize, p: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, p).prop_map(|m| {
        let (n, p) = m.shape();
        Matrix::from_fn(n, p, |i, j| m[(i, j)] + if i == j { 8.0 } else { 0.0 })
    })
}

fn problem() -> impl Strategy<Value = (Matrix, Vec<f64>, f64)> {
    (8usize..30, 2usize..12).prop_flat_map(|(n, p)| {
        (matrix(n, p), prop::collection::vec(-5.0f64..5.0, n), 0.01f64..0.9)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn soft_threshold_shrinks_toward_zero(z in -10.0f64..10.0, t in 0.0f64..5.0) {
        let s = soft(z, t);
        prop_assert!(s.abs() <= z.abs());
        prop_assert!(s == 0.0 || s.signum() == z.signum());
        prop_assert!(((z - s).abs() - t.min(z.abs())).abs() < 1e-12);
    }

    #[test]
    fn lasso_fits_are_kkt_certified_and_monotone((x, y, frac) in problem()) {
        let (x, y, _) = center_columns(&x, &y).unwrap();
        let lmax = lambda_max(&x, &y, &Penalty::Lasso);
        prop_assume!(lmax > 1e-6);
        let opts = SolverOptions { trace: true, ..SolverOptions::default() };
        let fit = fit_lasso(&x, &y, frac * lmax, None, &opts).unwrap();
        prop_assert!(fit.kkt_residual <= 10.0 * opts.tol, "kkt {}", fit.kkt_residual);
        let recomputed = kkt_residual(&x, &y, frac * lmax, &fit.beta);
        prop_assert!((recomputed - fit.kkt_residual).abs() < 1e-9);
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn lasso_scales_with_response((x, y, frac) in problem(), c in 0.2f64..5.0) {
        let (x, y, _) = center_columns(&x, &y).unwrap();
        let lmax = lambda_max(&x, &y, &Penalty::Lasso);
        prop_assume!(lmax > 1e-6);
        let opts = SolverOptions { tol: 1e-12, ..SolverOptions::default() };
        let lambda = frac * lmax;
        let a = fit_lasso(&x, &y, lambda, None, &opts).unwrap();
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let b = fit_lasso(&x, &cy, c * lambda, None, &opts).unwrap();
        for (u, v) in a.beta.iter().zip(&b.beta) {
            prop_assert!((c * u - v).abs() < 1e-8 * (1.0 + v.abs()), "{} vs {}", c * u, v);
        }
    }

    #[test]
    fn unit_adaptive_weights_are_the_lasso((x, y, frac) in problem()) {
        let (x, y, _) = center_columns(&x, &y).unwrap();
        let lmax = lambda_max(&x, &y, &Penalty::Lasso);
        prop_assume!(lmax > 1e-6);
        let opts = SolverOptions::default();
        let a = fit_lasso(&x, &y, frac * lmax, None, &opts).unwrap();
        let w = Penalty::AdaptiveLasso { weights: vec![1.0; x.ncols()] };
        let b = fit_penalized(&x, &y, frac * lmax, &w, None, &opts).unwrap();
        prop_assert_eq!(a.beta, b.beta);
    }

    #[test]
    fn folds_partition_rows(n in 2usize..200, folds in 2usize..10, seed in any::<u64>()) {
        prop_assume!(n >= folds);
        let labels = fold_assignment(n, folds, seed).unwrap();
        prop_assert_eq!(labels.len(), n);
        let mut sizes = vec![0usize; folds];
        for &l in &labels {
            prop_assert!(l < folds);
            sizes[l] += 1;
        }
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        prop_assert_eq!(labels, fold_assignment(n, folds, seed).unwrap());
    }

    #[test]
    fn support_metrics_are_rates(p in 2usize..60, est in prop::collection::btree_set(0usize..60, 0..20), truth in prop::collection::btree_set(0usize..60, 1..10)) {
        let est: Vec<usize> = est.into_iter().filter(|&j| j < p).collect();
        let truth: Vec<usize> = truth.into_iter().filter(|&j| j < p).collect();
        prop_assume!(!truth.is_empty() && truth.len() < p);
        let m = support_metrics(&est, &truth, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.tpr) && (0.0..=1.0).contains(&m.fpr));
        prop_assert_eq!(m.tp_count + m.fp_count, est.len());
        let mut reversed = est.clone();
        reversed.reverse();
        prop_assert_eq!(support_metrics(&reversed, &truth, p).unwrap(), m);
    }

    #[test]
    fn decomposition_is_additive_and_orthogonal(x in well_conditioned(12, 6), q in 1usize..6) {
        let svd = thin_svd(&x).unwrap();
        let rank = svd.rank();
        prop_assert_eq!(rank, 6);
        let d = licm(&x, q).unwrap();
        prop_assert!(d.pz_x.add(&d.mz_x).max_abs_diff(&x) < 1e-9);
        let cross = d.pz_x.tr_matmul(&d.mz_x);
        prop_assert!(cross.max_abs() < 1e-8 * (1.0 + x.max_abs().powi(2)));
        // round-off from the subtraction is a few ulps of x's top singular value
        let tol = 1e-10 * svd.d[0];
        let residual_rank = thin_svd(&d.mz_x).unwrap().d.iter().filter(|&&v| v > tol).count();
        prop_assert_eq!(residual_rank, rank - q);
        let too_many = matches!(licm(&x, rank + 1), Err(prodreg::Error::RankExceeded { .. }));
        prop_assert!(too_many);
    }

    #[test]
    fn random_projector_has_rank_q(n in 6usize..30, q in 1usize..6, seed in any::<u64>()) {
        prop_assume!(q < n);
        let z = rgz(n, q, seed).unwrap();
        let p = projector(&z, 0.0).unwrap();
        prop_assert!((p.trace() - q as f64).abs() < 1e-8);
        let x = Matrix::from_fn(n, 3, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let d = decompose(&x, &z).unwrap();
        prop_assert!(d.pz_x.add(&d.mz_x).max_abs_diff(&x) < 1e-9);
    }

    #[test]
    fn identity_transform_leaves_the_ic_value(x in matrix(20, 6)) {
        let (xc, _, _) = center_columns(&x, &vec![0.0; 20]).unwrap();
        let s = [0usize, 1];
        let raw = irrepresentable_value(&xc, &s);
        let rep = irrepresentable_value_prod(&x, &TransformSpec::None, &s);
        if let (Ok(raw), Ok(rep)) = (raw, rep) {
            prop_assert_eq!(rep.value_raw, rep.value_prod);
            prop_assert_eq!(raw, rep.value_raw);
        }
    }

    #[test]
    fn datasets_round_trip(n in 1usize..8, p in 1usize..5, vals in prop::collection::vec(-1e6f64..1e6, 45)) {
        let cols: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| vals[(i * 5 + j) % vals.len()]).collect()).collect();
        let data = Dataset {
            response_name: "resp".into(),
            predictor_names: (0..p).map(|j| format!("c{j}")).collect(),
            x: Matrix::from_columns(n, &cols).unwrap(),
            y: (0..n).map(|i| vals[(i * 3 + 44) % vals.len()]).collect(),
        };
        let mut first = Vec::new();
        write_dataset(&mut first, &data).unwrap();
        let back = read_dataset(first.as_slice(), None).unwrap();
        prop_assert_eq!(&back, &data);
        let mut second = Vec::new();
        write_dataset(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }
}
