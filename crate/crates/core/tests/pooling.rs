use krpool::data::synth_smooth;
use krpool::grassmann::RcgOptions;
use krpool::kernel::FrameKernel;
use krpool::pooling::{
    bkrp_objective, grp_objective, krpfs_objective, order_violation_rate, pool, pool_grp, pool_krpfs, rp_objective,
};
use krpool::{gram, median_bandwidth, Descriptor, FeatureSequence, HingeParams, PoolerConfig, RbfParams, Scheme};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_seq(n: usize, d: usize, seed: u64) -> FeatureSequence<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureSequence::new(DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

fn eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].partial_cmp(&e.eigenvalues[a]).unwrap());
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Objective evaluated through the full projector `P = AAᵀ`:
/// `½ Σ ‖φ_i − Φ P Kφ_i‖² − ½ Σ k_ii + λ Σ_{i<j} max(0, η + q_i − q_j)`,
/// where `q_i = k_iᵀ P K P k_i`.
fn direct_objective(a: &DMatrix<f64>, k: &DMatrix<f64>, eta: f64, lambda: f64) -> f64 {
    let p = a * a.transpose();
    let n = k.nrows();
    let mut f = 0.0;
    let mut q = vec![0.0; n];
    for i in 0..n {
        let ki = k.column(i);
        let proj = &p * ki;
        // ‖φ_i − ΦPk_i‖² − k_ii = −2 k_iᵀPk_i + (Pk_i)ᵀK(Pk_i)
        q[i] = (proj.transpose() * k * &proj)[0];
        f += 0.5 * (-2.0 * ki.dot(&proj) + q[i]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            f += lambda * (eta + q[i] - q[j]).max(0.0);
        }
    }
    f
}

#[test]
fn inverse_square_root_closed_form() {
    let n = 10;
    let x = random_seq(n, 5, 31);
    let k = gram(&x, &RbfParams::new(1.2).unwrap());
    let (vals, vecs) = eigen_desc(k.values());
    let inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|l| 1.0 / l.sqrt())));
    let a = &vecs * inv_sqrt * vecs.transpose();
    for &(eta, lambda) in &[(1e-4, 1.0), (0.01, 2.0), (0.3, 0.5)] {
        let hp = HingeParams::new(eta, lambda, 1.0).unwrap();
        let want = -(n as f64) / 2.0 + lambda * eta * (n * (n - 1) / 2) as f64;
        let direct = direct_objective(&a, k.values(), eta, lambda);
        assert!((direct - want).abs() < 1e-8, "direct {direct} vs {want}");
        let got = krpfs_objective(&a, &k, &hp).unwrap();
        assert!((got - want).abs() < 1e-8, "got {got} vs {want}");
    }
}

#[test]
fn objective_matches_direct_evaluation_on_random_points() {
    let x = random_seq(14, 3, 8);
    let k = gram(&x, &median_bandwidth(&x).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let a = DMatrix::from_fn(14, 3, |_, _| rng.random_range(-1.0..1.0));
        let hp = HingeParams::new(0.05, 0.8, 10.0).unwrap();
        let got = krpfs_objective(&a, &k, &hp).unwrap();
        let want = direct_objective(&a, k.values(), 0.05, 0.8);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0));
    }
}

/// Without the ordering term the optimum is kernel PCA: `−½ Σ_{top p} μ_k`.
#[test]
fn zero_lambda_is_kernel_pca() {
    let x = synth_smooth(20, 4, 17, 0.3).unwrap();
    let sigma = median_bandwidth(&x).unwrap();
    let k = gram(&x, &sigma);
    let (vals, _) = eigen_desc(k.values());
    let want = -0.5 * vals[..3].iter().sum::<f64>();
    let hp = HingeParams::new(1e-4, 0.0, 1.0).unwrap();
    let out = pool_krpfs(&x, 3, &sigma, &hp, &RcgOptions::default()).unwrap();
    let got = out.stats.objective.unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    let direct = direct_objective(out.descriptor.a.matrix(), k.values(), 1e-4, 0.0);
    assert!((direct - want).abs() < 1e-6);
}

fn rank_pooling_objective(x: &FeatureSequence<f64>, z: &[f64], eta: f64, lambda: f64) -> f64 {
    let s: Vec<f64> = (0..x.len()).map(|i| x.frame(i).iter().zip(z).map(|(a, b)| a * b).sum()).collect();
    let mut f = 0.5 * z.iter().map(|v| v * v).sum::<f64>();
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            f += lambda * (eta + s[i] - s[j]).max(0.0);
        }
    }
    f
}

#[test]
fn linear_bkrp_is_rank_pooling() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for probe in 0..20 {
        let x = random_seq(rng.random_range(2..15), 4, probe);
        let z: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (eta, lambda) = (rng.random_range(0.0..1.0), rng.random_range(0.0..3.0));
        let hp = HingeParams::new(eta, lambda, 1.0).unwrap();
        let want = rank_pooling_objective(&x, &z, eta, lambda);
        let bkrp = bkrp_objective(&x, &z, &FrameKernel::Linear, &hp).unwrap();
        let rp = rp_objective(&x, &z, &hp).unwrap();
        assert!((bkrp - want).abs() < 1e-12 * want.abs().max(1.0), "probe {probe}: {bkrp} vs {want}");
        assert_eq!(bkrp, rp);
    }
}

/// Without the ordering term GRP returns the PCA subspace, whose error is half
/// the trailing spectrum of `XᵀX`.
#[test]
fn zero_lambda_grp_is_pca() {
    for seed in 0..5 {
        let x = random_seq(25, 6, 100 + seed);
        let hp = HingeParams::new(0.1, 0.0, 1.0).unwrap();
        let out = pool_grp(&x, 2, &hp, &RcgOptions::default()).unwrap();
        let (vals, _) = eigen_desc(&(x.data().transpose() * x.data()));
        let want = 0.5 * vals[2..].iter().sum::<f64>();
        let got = grp_objective(&x, &out.descriptor.u, &hp).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        let utu = out.descriptor.u.transpose() * &out.descriptor.u;
        assert!((utu - DMatrix::identity(2, 2)).norm() < 1e-8);
    }
}

#[test]
fn monotone_sequence_is_ordered() {
    let rows: Vec<Vec<f64>> = (0..40).map(|t| (0..5).map(|k| ((t + 1) as f64 * 0.05 * (k + 1) as f64).tanh()).collect()).collect();
    let x = FeatureSequence::from_rows(&rows).unwrap();
    let cfg = PoolerConfig { p: 3, ..PoolerConfig::new(Scheme::Krpfs) };
    let out = pool(&x, &cfg).unwrap();
    let rate = order_violation_rate(&out.descriptor, &x).unwrap();
    assert!(1.0 - rate >= 0.95, "order satisfaction {}", 1.0 - rate);
}

#[test]
fn every_scheme_pools_deterministically() {
    let x = synth_smooth(16, 4, 3, 0.2).unwrap();
    for scheme in Scheme::ALL {
        let cfg = PoolerConfig { p: 2, ..PoolerConfig::new(scheme) };
        let a = pool(&x, &cfg).unwrap();
        let b = pool(&x, &cfg).unwrap();
        assert_eq!(a.descriptor, b.descriptor, "{scheme}");
        assert_eq!(a.descriptor.scheme(), scheme);
        if let Descriptor::Subspace(s) = &a.descriptor {
            assert!(s.feasibility_residual() < 1e-8);
        }
    }
}
