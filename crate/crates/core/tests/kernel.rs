use krpool::kernel::{cross_gram, gram, median_bandwidth, nystrom, psd_project, RbfParams};
use krpool::FeatureSequence;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn seq_strategy() -> impl Strategy<Value = FeatureSequence<f64>> {
    (2usize..14, 1usize..5).prop_flat_map(|(n, d)| {
        prop::collection::vec(-3.0f64..3.0, n * d)
            .prop_map(move |v| FeatureSequence::new(DMatrix::from_row_slice(n, d, &v)).unwrap())
    })
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_symmetric_bounded_psd(x in seq_strategy(), sigma in 0.05f64..5.0) {
        let k = gram(&x, &RbfParams::new(sigma).unwrap());
        let v = k.values();
        let n = x.len();
        for i in 0..n {
            prop_assert_eq!(v[(i, i)], 1.0);
            for j in 0..n {
                prop_assert_eq!(v[(i, j)], v[(j, i)]);
                prop_assert!(v[(i, j)] > 0.0 || v[(i, j)] == 0.0);
                prop_assert!(v[(i, j)] <= 1.0);
            }
        }
        prop_assert!(min_eig(v) > -1e-8 * n as f64);
    }

    #[test]
    fn gram_matches_direct_formula(x in seq_strategy(), sigma in 0.2f64..3.0) {
        let k = gram(&x, &RbfParams::new(sigma).unwrap());
        for i in 0..x.len() {
            for j in 0..x.len() {
                let d2: f64 = x.frame(i).iter().zip(x.frame(j)).map(|(a, b)| (a - b).powi(2)).sum();
                let want = (-d2 / (2.0 * sigma * sigma)).exp();
                prop_assert!((k.values()[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cross_gram_of_self_is_gram(x in seq_strategy()) {
        let p = RbfParams::new(0.9).unwrap();
        let c = cross_gram(&x, &x, &p).unwrap();
        prop_assert!((c - gram(&x, &p).values()).amax() < 1e-15);
    }

    #[test]
    fn psd_repair_clears_epsilon(entries in prop::collection::vec(-2.0f64..2.0, 36), eps in 0.0f64..0.1) {
        let a = DMatrix::from_row_slice(6, 6, &entries);
        let g = (&a + a.transpose()) * 0.5;
        let out = psd_project(&g, eps).unwrap();
        prop_assert!((out.matrix.clone() - out.matrix.transpose()).amax() < 1e-10);
        prop_assert!(min_eig(&out.matrix) >= eps - 1e-9);
        // A second pass has nothing left to clip.
        let again = psd_project(&out.matrix, eps - 1e-9).unwrap();
        prop_assert!(!again.changed());
    }

    #[test]
    fn nystrom_interpolates_sampled_columns(x in seq_strategy(), frac in 0.2f64..1.0, seed in 0u64..1000) {
        let k = gram(&x, &median_bandwidth(&x).unwrap());
        let n = x.len();
        let m = ((frac * n as f64).ceil() as usize).clamp(1, n);
        let approx = nystrom(&k, m, seed).unwrap();
        let rec = approx.reconstruct();
        // Columns that are numerically independent are reproduced exactly.
        let core = DMatrix::from_fn(m, m, |a, b| k.values()[(approx.sample_indices[a], approx.sample_indices[b])]);
        if min_eig(&core) > 1e-6 {
            for &j in &approx.sample_indices {
                for i in 0..n {
                    prop_assert!((rec[(i, j)] - k.values()[(i, j)]).abs() < 1e-6);
                }
            }
        }
        prop_assert!(min_eig(&rec) > -1e-8 * n as f64);
        prop_assert!(min_eig(&(k.values() - &rec)) > -1e-6);
    }
}

#[test]
fn nystrom_full_sampling_reconstructs_exactly() {
    let x = FeatureSequence::new(DMatrix::from_fn(12, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 / 4.0)).unwrap();
    let k = gram(&x, &RbfParams::new(1.0).unwrap());
    let approx = nystrom(&k, 12, 5).unwrap();
    assert!((approx.reconstruct() - k.values()).amax() < 1e-8);
}

#[test]
fn nystrom_is_deterministic_per_seed() {
    let x = FeatureSequence::new(DMatrix::from_fn(20, 2, |i, j| (i as f64 * 0.3).sin() + j as f64)).unwrap();
    let k = gram(&x, &RbfParams::new(0.7).unwrap());
    let a = nystrom(&k, 5, 11).unwrap();
    let b = nystrom(&k, 5, 11).unwrap();
    assert_eq!(a.sample_indices, b.sample_indices);
    assert_eq!(a.reconstruct(), b.reconstruct());
}

#[test]
fn median_bandwidth_of_two_frames() {
    let x = FeatureSequence::<f64>::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
    assert!((median_bandwidth(&x).unwrap().sigma() - 5.0).abs() < 1e-12);
}
