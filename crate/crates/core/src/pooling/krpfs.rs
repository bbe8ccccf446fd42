//! Kernelized rank pooling over a feature subspace: an order-constrained
//! kernel PCA whose coefficient matrix `A` (`Ω = Φ(X)A`) lives on the
//! generalized Grassmannian `AᵀKA = I`.

use nalgebra::DMatrix;

use super::hinge::{pairwise_hinge, Hinge, HingeParams};
use super::{PoolStats, Pooled};
use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::grassmann::{rcg_minimize, GeneralizedGrassmann, GrassmannPoint, Objective, RcgOptions};
use crate::kernel::{gram, KernelMatrix, RbfParams};
use crate::linalg::sym_eigen_desc;
use crate::scalar::Scalar;

/// The pooled subspace `Ω = Φ(X)A`, kept implicitly through `A` and the
/// frames it is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDescriptor<T: Scalar> {
    pub a: GrassmannPoint<T>,
    pub source: FeatureSequence<T>,
    pub sigma: RbfParams<T>,
    pub hinge: HingeParams<T>,
}

impl<T: Scalar> SubspaceDescriptor<T> {
    pub fn p(&self) -> usize {
        self.a.p()
    }

    /// `‖AᵀKA − I‖_F` against the Gram of the retained source frames.
    pub fn feasibility_residual(&self) -> T {
        let k = gram(&self.source, &self.sigma);
        let a = self.a.matrix();
        (a.transpose() * k.values() * a - DMatrix::identity(self.p(), self.p())).norm()
    }
}

fn check_shapes<T: Scalar>(a: &DMatrix<T>, k: &KernelMatrix<T>) -> Result<()> {
    if a.nrows() != k.n() {
        return Err(Error::Shape(format!("A has {} rows but K is {}x{}", a.nrows(), k.n(), k.n())));
    }
    if a.ncols() == 0 {
        return Err(Error::Shape("A has no columns".into()));
    }
    Ok(())
}

/// Squared projection lengths `‖Ω_p(Φ(x_i))‖² = k_iᵀ AAᵀKAAᵀ k_i`.
pub fn projection_lengths<T: Scalar>(a: &DMatrix<T>, k: &KernelMatrix<T>) -> Result<Vec<T>> {
    check_shapes(a, k)?;
    let b = k.values() * a;
    let s3 = a.transpose() * &b;
    let c = &b * s3;
    Ok((0..k.n()).map(|i| b.row(i).dot(&c.row(i))).collect())
}

struct Evaluation<T: Scalar> {
    value: T,
    grad: Option<DMatrix<T>>,
}

fn evaluate<T: Scalar>(a: &DMatrix<T>, k: &DMatrix<T>, hp: &HingeParams<T>, hinge: Hinge<T>, with_grad: bool) -> Evaluation<T> {
    let n = k.nrows();
    let p = a.ncols();
    let b = k * a; // K A, row i = k_iᵀA
    let s3 = a.transpose() * &b; // AᵀKA
    let c = &b * &s3;
    let mut recon = T::zero();
    let mut proj = Vec::with_capacity(n);
    for i in 0..n {
        let r = b.row(i).norm_squared();
        let q = b.row(i).dot(&c.row(i));
        recon += q - r - r;
        proj.push(q);
    }
    let mut value = recon * T::lit(0.5);
    let mut weights = vec![T::zero(); n];
    let hinge_active = hp.lambda > T::zero();
    if hinge_active {
        let w = if with_grad { Some(weights.as_mut_slice()) } else { None };
        value += hp.lambda * pairwise_hinge(&proj, hp.eta, hinge, w);
    }
    if !with_grad {
        return Evaluation { value, grad: None };
    }

    // S1 = KKA, S2 = KAAᵀ, S3 = AᵀKA
    let s1 = k * &b;
    let two = T::lit(2.0);
    let mut grad = &s1 * (&s3 - DMatrix::identity(p, p) * two) + &b * (a.transpose() * &s1);
    if hinge_active && weights.iter().any(|w| *w != T::zero()) {
        // K12 = K diag(c) K, formed explicitly.
        let mut kw = k.clone();
        for (j, mut col) in kw.column_iter_mut().enumerate() {
            col *= weights[j];
        }
        let k12 = kw * k;
        let k12a = &k12 * a;
        let hinge_grad = &k12a * &s3 + &b * (a.transpose() * &k12a);
        grad += hinge_grad * (two * hp.lambda);
    }
    Evaluation { value, grad: Some(grad) }
}

/// `½ Σ_i [−2k_iᵀAAᵀk_i + k_iᵀAAᵀKAAᵀk_i] + λ Σ_{i<j} max(0, η + q_i − q_j)`
/// with `q_i = k_iᵀAAᵀKAAᵀk_i`. Valid at any `A`, feasible or not.
pub fn krpfs_objective<T: Scalar>(a: &DMatrix<T>, k: &KernelMatrix<T>, hp: &HingeParams<T>) -> Result<T> {
    check_shapes(a, k)?;
    Ok(evaluate(a, k.values(), hp, Hinge::Exact, false).value)
}

/// Euclidean gradient of [`krpfs_objective`]:
/// `S₁(S₃ − 2I) + S₂S₁ + 2λ(K₁₂AS₃ + S₂K₁₂A)` where `K₁₂ = K₁K₁ᵀ − K₂K₂ᵀ`
/// sums `k_ik_iᵀ − k_jk_jᵀ` over the currently violating pairs.
pub fn krpfs_euclidean_grad<T: Scalar>(a: &DMatrix<T>, k: &KernelMatrix<T>, hp: &HingeParams<T>) -> Result<DMatrix<T>> {
    check_shapes(a, k)?;
    Ok(evaluate(a, k.values(), hp, Hinge::Exact, true).grad.expect("gradient requested"))
}

/// Objective with the hinge replaced by its Huber smoothing, as minimized by
/// [`pool_krpfs`].
pub struct SmoothedKrpfs<'a, T: Scalar> {
    k: &'a DMatrix<T>,
    hp: HingeParams<T>,
    hinge: Hinge<T>,
}

impl<'a, T: Scalar> SmoothedKrpfs<'a, T> {
    pub fn new(k: &'a KernelMatrix<T>, hp: HingeParams<T>) -> Self {
        Self { k: k.values(), hp, hinge: Hinge::for_margin(hp.eta) }
    }
}

impl<T: Scalar> Objective<T> for SmoothedKrpfs<'_, T> {
    fn value_grad(&self, a: &DMatrix<T>) -> (T, DMatrix<T>) {
        let e = evaluate(a, self.k, &self.hp, self.hinge, true);
        (e.value, e.grad.expect("gradient requested"))
    }

    fn value(&self, a: &DMatrix<T>) -> T {
        evaluate(a, self.k, &self.hp, self.hinge, false).value
    }
}

/// Top-`p` kernel-PCA directions `A = V_p Λ_p^{-1/2}`, the minimizer of the
/// reconstruction term alone.
pub fn kpca_init<T: Scalar>(manifold: &GeneralizedGrassmann<T>) -> Result<GrassmannPoint<T>> {
    let p = manifold.p();
    let (values, vectors) = sym_eigen_desc(manifold.kernel());
    let top = values[0];
    if !(values[p - 1] > top * T::lit(1e-12)) {
        return Err(Error::RankDeficient { p });
    }
    let mut a = vectors.columns(0, p).into_owned();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col /= values[j].sqrt();
    }
    manifold.point(a)
}

/// Solves the order-constrained kernel PCA for one sequence with RCG, starting
/// from the kernel-PCA subspace.
pub fn pool_krpfs<T: Scalar>(
    x: &FeatureSequence<T>,
    p: usize,
    sigma: &RbfParams<T>,
    hp: &HingeParams<T>,
    opts: &RcgOptions,
) -> Result<Pooled<SubspaceDescriptor<T>>> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter(format!("sequence needs at least 2 frames, got {}", x.len())));
    }
    hp.validate()?;
    if p == 0 || p > x.len() {
        return Err(Error::InvalidParameter(format!("subspace dimension p={p} must lie in 1..={}", x.len())));
    }
    let k = gram(x, sigma);
    let manifold = GeneralizedGrassmann::new(k.values().clone(), p)?;
    let a0 = kpca_init(&manifold)?;
    // Slack elimination: the slacks cap the hinge weight at C.
    let solve_hp = HingeParams { lambda: hp.effective_lambda(), ..*hp };
    let objective = SmoothedKrpfs::new(&k, solve_hp);
    let solved = rcg_minimize(&objective, &a0, &manifold, opts)?;

    let initial = krpfs_objective(a0.matrix(), &k, &solve_hp)?;
    let reached = krpfs_objective(solved.point.matrix(), &k, &solve_hp)?;
    // The smoothed hinge sits up to w/2 below the exact one, so keep whichever
    // end point is better under the exact objective.
    let (a, value) = if reached <= initial { (solved.point, reached) } else { (a0, initial) };
    let feasibility = manifold.feasibility_residual(a.matrix());

    Ok(Pooled {
        descriptor: SubspaceDescriptor { a, source: x.clone(), sigma: *sigma, hinge: *hp },
        stats: PoolStats {
            objective: Some(value.as_f64()),
            initial_objective: Some(initial.as_f64()),
            iterations: solved.trace.len() - 1,
            feasibility: Some(feasibility.as_f64()),
            trace: solved.trace,
            termination: Some(solved.termination),
        },
    })
}
