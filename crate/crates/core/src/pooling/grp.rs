//! Generalized (linear, subspace) rank pooling on the ordinary Grassmannian.

use nalgebra::DMatrix;

use super::hinge::{pairwise_hinge, Hinge, HingeParams};
use super::{PoolStats, Pooled};
use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::grassmann::{rcg_minimize, GeneralizedGrassmann, Objective, RcgOptions};
use crate::linalg::sym_eigen_desc;
use crate::scalar::Scalar;

/// `d × p` basis with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpDescriptor<T: Scalar> {
    pub u: DMatrix<T>,
    pub hinge: HingeParams<T>,
}

struct GrpObjective<'a, T: Scalar> {
    x: &'a DMatrix<T>,
    cov: DMatrix<T>,
    hp: HingeParams<T>,
    hinge: Hinge<T>,
}

impl<'a, T: Scalar> GrpObjective<'a, T> {
    fn new(x: &'a DMatrix<T>, hp: HingeParams<T>, hinge: Hinge<T>) -> Self {
        Self { x, cov: x.transpose() * x, hp, hinge }
    }

    fn eval(&self, u: &DMatrix<T>, with_grad: bool) -> (T, Option<DMatrix<T>>) {
        let n = self.x.nrows();
        let p = u.ncols();
        let xu = self.x * u; // row i = x_iᵀU
        let s3 = u.transpose() * u;
        let proj: Vec<T> = (0..n).map(|i| xu.row(i).norm_squared()).collect();
        // ‖x − UUᵀx‖² = ‖x‖² − 2‖Uᵀx‖² + xᵀU(UᵀU)Uᵀx
        let xus = &xu * &s3;
        let mut recon = T::zero();
        for i in 0..n {
            recon += self.x.row(i).norm_squared() - proj[i] - proj[i] + xu.row(i).dot(&xus.row(i));
        }
        let mut value = recon * T::lit(0.5);
        let mut weights = vec![T::zero(); n];
        if self.hp.lambda > T::zero() {
            let w = if with_grad { Some(weights.as_mut_slice()) } else { None };
            value += self.hp.lambda * pairwise_hinge(&proj, self.hp.eta, self.hinge, w);
        }
        if !with_grad {
            return (value, None);
        }
        let cu = &self.cov * u;
        let two = T::lit(2.0);
        let mut grad = &cu * (&s3 - DMatrix::identity(p, p) * two) + u * (u.transpose() * &cu);
        if weights.iter().any(|w| *w != T::zero()) {
            // Σ_i c_i x_i x_iᵀ U
            let mut weighted = xu.clone();
            for (i, mut row) in weighted.row_iter_mut().enumerate() {
                row *= weights[i];
            }
            grad += self.x.transpose() * weighted * (two * self.hp.lambda);
        }
        (value, Some(grad))
    }
}

impl<T: Scalar> Objective<T> for GrpObjective<'_, T> {
    fn value_grad(&self, a: &DMatrix<T>) -> (T, DMatrix<T>) {
        let (v, g) = self.eval(a, true);
        (v, g.expect("gradient requested"))
    }

    fn value(&self, a: &DMatrix<T>) -> T {
        self.eval(a, false).0
    }
}

/// `½ Σ‖x_i − UUᵀx_i‖² + λ Σ_{i<j} max(0, η + ‖Uᵀx_i‖² − ‖Uᵀx_j‖²)`.
pub fn grp_objective<T: Scalar>(x: &FeatureSequence<T>, u: &DMatrix<T>, hp: &HingeParams<T>) -> Result<T> {
    if u.nrows() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: u.nrows() });
    }
    Ok(GrpObjective::new(x.data(), *hp, Hinge::Exact).eval(u, false).0)
}

/// Minimizes the subspace rank-pooling objective from the top-`p` (uncentered)
/// principal directions of the frames.
pub fn pool_grp<T: Scalar>(x: &FeatureSequence<T>, p: usize, hp: &HingeParams<T>, opts: &RcgOptions) -> Result<Pooled<GrpDescriptor<T>>> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter(format!("sequence needs at least 2 frames, got {}", x.len())));
    }
    hp.validate()?;
    let d = x.dim();
    if p == 0 || p > d {
        return Err(Error::InvalidParameter(format!("subspace dimension p={p} must lie in 1..={d}")));
    }
    let data = x.data();
    let manifold = GeneralizedGrassmann::euclidean(d, p)?;
    let (_, vectors) = sym_eigen_desc(&(data.transpose() * data));
    let u0 = manifold.point(vectors.columns(0, p).into_owned())?;

    let objective = GrpObjective::new(data, *hp, Hinge::for_margin(hp.eta));
    let solved = rcg_minimize(&objective, &u0, &manifold, opts)?;
    let initial = grp_objective(x, u0.matrix(), hp)?;
    let reached = grp_objective(x, solved.point.matrix(), hp)?;
    let (u, value) = if reached <= initial { (solved.point, reached) } else { (u0, initial) };
    let feasibility = manifold.feasibility_residual(u.matrix());

    Ok(Pooled {
        descriptor: GrpDescriptor { u: u.into_matrix(), hinge: *hp },
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

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(n: usize, d: usize, seed: u64) -> FeatureSequence<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureSequence::new(DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn zero_lambda_matches_svd_truncation() {
        let x = random_seq(15, 6, 1);
        let hp = HingeParams::new(1e-4, 0.0, 1.0).unwrap();
        let out = pool_grp(&x, 2, &hp, &RcgOptions::default()).unwrap();
        let sv = x.data().clone().svd(false, false).singular_values;
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let want = 0.5 * s[2..].iter().map(|v| v * v).sum::<f64>();
        assert!((out.stats.objective.unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn exact_subspace_has_zero_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let basis = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let coeffs = DMatrix::from_fn(12, 2, |_, _| rng.random_range(-1.0..1.0));
        let x = FeatureSequence::new(coeffs * basis.transpose()).unwrap();
        let hp = HingeParams::new(1e-4, 0.0, 1.0).unwrap();
        let out = pool_grp(&x, 2, &hp, &RcgOptions::default()).unwrap();
        assert!(out.stats.objective.unwrap().abs() < 1e-10);
    }

    #[test]
    fn output_is_orthonormal() {
        let x = crate::data::synth_smooth(20, 5, 3, 0.3).unwrap();
        let hp = HingeParams::new(1e-4, 1.0, 1.0).unwrap();
        let out = pool_grp(&x, 3, &hp, &RcgOptions::default()).unwrap();
        let u = &out.descriptor.u;
        assert!((u.transpose() * u - DMatrix::identity(3, 3)).norm() < 1e-8);
        assert!(out.stats.objective.unwrap() <= out.stats.initial_objective.unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = random_seq(10, 4, 4);
        let hp = HingeParams::new(0.05, 0.8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = DMatrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0));
        let obj = GrpObjective::new(x.data(), hp, Hinge::Exact);
        let g = obj.eval(&u, true).1.unwrap();
        let h = 1e-6;
        let mut fd = DMatrix::zeros(4, 2);
        for i in 0..4 {
            for j in 0..2 {
                let mut up = u.clone();
                up[(i, j)] += h;
                let mut dn = u.clone();
                dn[(i, j)] -= h;
                fd[(i, j)] = (obj.eval(&up, false).0 - obj.eval(&dn, false).0) / (2.0 * h);
            }
        }
        assert!((g - &fd).norm() < 1e-5 * fd.norm());
    }

    #[test]
    fn rejects_p_above_d() {
        let x = random_seq(10, 3, 6);
        let hp = HingeParams::new(1e-4, 1.0, 1.0).unwrap();
        assert!(pool_grp(&x, 4, &hp, &RcgOptions::default()).is_err());
    }
}
