//! Poolers whose output is a single `d`-vector: averaging, linear rank
//! pooling and the two kernelized pre-image variants.

use serde::{Deserialize, Serialize};

use super::hinge::{pairwise_hinge, Hinge, HingeParams};
use super::{PoolStats, Pooled, Scheme};
use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::kernel::{FrameKernel, RbfParams};
use crate::scalar::Scalar;

/// Pooled `d`-vector plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDescriptor<T: Scalar> {
    pub z: Vec<T>,
    pub scheme: Scheme,
    pub kernel: FrameKernel<T>,
    pub hinge: HingeParams<T>,
}

/// Gradient-descent settings shared by the vector poolers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-8, armijo_c: 1e-4, backtrack_factor: 0.5 }
    }
}

/// Which data-fidelity term accompanies the ordering hinge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fidelity {
    /// `½‖z‖²`
    Norm,
    /// `½ Σ_i ‖x_i − z‖²`
    Proximity,
}

struct VectorProblem<'a, T: Scalar> {
    x: &'a FeatureSequence<T>,
    kernel: FrameKernel<T>,
    fidelity: Fidelity,
    lambda: T,
    eta: T,
}

impl<T: Scalar> VectorProblem<'_, T> {
    fn scores(&self, z: &[T]) -> Vec<T> {
        (0..self.x.len()).map(|i| self.kernel.eval(&self.x.frame(i), z)).collect()
    }

    fn fidelity_value(&self, z: &[T]) -> T {
        let half = T::lit(0.5);
        match self.fidelity {
            Fidelity::Norm => z.iter().fold(T::zero(), |a, &v| a + v * v) * half,
            Fidelity::Proximity => {
                let data = self.x.data();
                let mut s = T::zero();
                for i in 0..self.x.len() {
                    for (k, &zk) in z.iter().enumerate() {
                        let t = data[(i, k)] - zk;
                        s += t * t;
                    }
                }
                s * half
            }
        }
    }

    fn value(&self, z: &[T], hinge: Hinge<T>) -> T {
        let mut v = self.fidelity_value(z);
        if self.lambda > T::zero() {
            v += self.lambda * pairwise_hinge(&self.scores(z), self.eta, hinge, None);
        }
        v
    }

    fn value_grad(&self, z: &[T], hinge: Hinge<T>) -> (T, Vec<T>) {
        let n = self.x.len();
        let mut grad: Vec<T> = match self.fidelity {
            Fidelity::Norm => z.to_vec(),
            Fidelity::Proximity => {
                let data = self.x.data();
                (0..z.len())
                    .map(|k| {
                        let col_sum = (0..n).fold(T::zero(), |a, i| a + data[(i, k)]);
                        z[k] * T::from_count(n) - col_sum
                    })
                    .collect()
            }
        };
        let mut value = self.fidelity_value(z);
        if self.lambda > T::zero() {
            let mut weights = vec![T::zero(); n];
            value += self.lambda * pairwise_hinge(&self.scores(z), self.eta, hinge, Some(&mut weights));
            for (i, &w) in weights.iter().enumerate() {
                if w != T::zero() {
                    self.kernel.add_grad_z(&self.x.frame(i), z, self.lambda * w, &mut grad);
                }
            }
        }
        (value, grad)
    }

    /// Armijo gradient descent on the smoothed objective; returns the iterate
    /// with the lowest exact objective.
    fn solve(&self, z0: Vec<T>, opts: &DescentOptions) -> Result<(Vec<T>, PoolStats)> {
        let smooth = Hinge::for_margin(self.eta);
        let c = T::lit(opts.armijo_c);
        let shrink = T::lit(opts.backtrack_factor);
        let tol = T::lit(opts.grad_tol);
        let min_step = T::lit(1e-16);

        let initial_exact = self.value(&z0, Hinge::Exact);
        if !initial_exact.finite() {
            return Err(Error::SolverNonFinite { iter: 0 });
        }
        let mut z = z0;
        let (mut f, mut g) = self.value_grad(&z, smooth);
        let mut best = (initial_exact, z.clone());
        let mut step = T::one();
        let mut iterations = 0;
        for iter in 1..=opts.max_iters {
            let gsq = g.iter().fold(T::zero(), |a, &v| a + v * v);
            if !gsq.finite() {
                return Err(Error::SolverNonFinite { iter });
            }
            if gsq.sqrt() < tol {
                break;
            }
            let mut trial_step = (step + step).min(T::lit(1e6));
            let accepted = loop {
                if trial_step < min_step {
                    break None;
                }
                let cand: Vec<T> = z.iter().zip(&g).map(|(&zi, &gi)| zi - trial_step * gi).collect();
                let fc = self.value(&cand, smooth);
                if !fc.finite() {
                    return Err(Error::SolverNonFinite { iter });
                }
                if fc <= f - c * trial_step * gsq {
                    break Some(cand);
                }
                trial_step *= shrink;
            };
            let Some(next) = accepted else { break };
            iterations = iter;
            step = trial_step;
            z = next;
            let (nf, ng) = self.value_grad(&z, smooth);
            f = nf;
            g = ng;
            let exact = self.value(&z, Hinge::Exact);
            if exact < best.0 {
                best = (exact, z.clone());
            }
        }
        let (objective, z) = best;
        if z.iter().any(|v| !v.finite()) {
            return Err(Error::SolverNonFinite { iter: iterations });
        }
        Ok((
            z,
            PoolStats {
                objective: Some(objective.as_f64()),
                initial_objective: Some(initial_exact.as_f64()),
                iterations,
                ..Default::default()
            },
        ))
    }
}

fn require_frames<T: Scalar>(x: &FeatureSequence<T>, min: usize) -> Result<()> {
    if x.len() < min {
        return Err(Error::InvalidParameter(format!("sequence needs at least {min} frames, got {}", x.len())));
    }
    Ok(())
}

fn column_mean<T: Scalar>(x: &FeatureSequence<T>) -> Vec<T> {
    let data = x.data();
    let n = T::from_count(x.len());
    (0..x.dim()).map(|k| data.column(k).iter().fold(T::zero(), |a, &v| a + v) / n).collect()
}

/// Frame average.
pub fn pool_average<T: Scalar>(x: &FeatureSequence<T>) -> Result<Pooled<VectorDescriptor<T>>> {
    require_frames(x, 1)?;
    Ok(Pooled {
        descriptor: VectorDescriptor {
            z: column_mean(x),
            scheme: Scheme::Avg,
            kernel: FrameKernel::Linear,
            hinge: HingeParams { eta: T::zero(), lambda: T::zero(), slack_weight: T::one() },
        },
        stats: PoolStats::default(),
    })
}

/// `½‖z‖² + λ Σ_{i<j} max(0, η + zᵀx_i − zᵀx_j)` (exact hinge).
pub fn rp_objective<T: Scalar>(x: &FeatureSequence<T>, z: &[T], hp: &HingeParams<T>) -> Result<T> {
    bkrp_objective(x, z, &FrameKernel::Linear, hp)
}

/// `½‖z‖² + λ Σ_{i<j} max(0, η + k(x_i, z) − k(x_j, z))` (exact hinge).
pub fn bkrp_objective<T: Scalar>(x: &FeatureSequence<T>, z: &[T], kernel: &FrameKernel<T>, hp: &HingeParams<T>) -> Result<T> {
    if z.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: z.len() });
    }
    let problem = VectorProblem { x, kernel: *kernel, fidelity: Fidelity::Norm, lambda: hp.lambda, eta: hp.eta };
    Ok(problem.value(z, Hinge::Exact))
}

/// `½ Σ‖x_i − z‖² + min(C, λ) Σ_{i<j} max(0, η + k(x_i, z) − k(x_j, z))`.
pub fn ibkrp_objective<T: Scalar>(x: &FeatureSequence<T>, z: &[T], kernel: &FrameKernel<T>, hp: &HingeParams<T>) -> Result<T> {
    if z.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: z.len() });
    }
    let problem = VectorProblem { x, kernel: *kernel, fidelity: Fidelity::Proximity, lambda: hp.effective_lambda(), eta: hp.eta };
    Ok(problem.value(z, Hinge::Exact))
}

/// Linear rank pooling, started from `z = 0`.
pub fn pool_rp<T: Scalar>(x: &FeatureSequence<T>, hp: &HingeParams<T>, opts: &DescentOptions) -> Result<Pooled<VectorDescriptor<T>>> {
    require_frames(x, 2)?;
    hp.validate()?;
    let problem = VectorProblem { x, kernel: FrameKernel::Linear, fidelity: Fidelity::Norm, lambda: hp.lambda, eta: hp.eta };
    let (z, stats) = problem.solve(vec![T::zero(); x.dim()], opts)?;
    Ok(Pooled { descriptor: VectorDescriptor { z, scheme: Scheme::Rp, kernel: FrameKernel::Linear, hinge: *hp }, stats })
}

/// Basic kernelized rank pooling, optimizing the pre-image `z` directly and
/// started from the frame mean.
pub fn pool_bkrp<T: Scalar>(
    x: &FeatureSequence<T>,
    kernel: &FrameKernel<T>,
    hp: &HingeParams<T>,
    opts: &DescentOptions,
) -> Result<Pooled<VectorDescriptor<T>>> {
    require_frames(x, 2)?;
    hp.validate()?;
    let problem = VectorProblem { x, kernel: *kernel, fidelity: Fidelity::Norm, lambda: hp.lambda, eta: hp.eta };
    let (z, stats) = problem.solve(column_mean(x), opts)?;
    Ok(Pooled { descriptor: VectorDescriptor { z, scheme: Scheme::Bkrp, kernel: *kernel, hinge: *hp }, stats })
}

/// Improved kernelized rank pooling: the pre-image is additionally kept close
/// to every frame.
pub fn pool_ibkrp<T: Scalar>(
    x: &FeatureSequence<T>,
    sigma: &RbfParams<T>,
    hp: &HingeParams<T>,
    opts: &DescentOptions,
) -> Result<Pooled<VectorDescriptor<T>>> {
    require_frames(x, 1)?;
    hp.validate()?;
    let kernel = FrameKernel::Rbf(*sigma);
    let problem = VectorProblem { x, kernel, fidelity: Fidelity::Proximity, lambda: hp.effective_lambda(), eta: hp.eta };
    let (z, stats) = problem.solve(column_mean(x), opts)?;
    Ok(Pooled { descriptor: VectorDescriptor { z, scheme: Scheme::Ibkrp, kernel, hinge: *hp }, stats })
}

pub(crate) fn vector_scores<T: Scalar>(desc: &VectorDescriptor<T>, x: &FeatureSequence<T>) -> Result<Vec<T>> {
    if desc.z.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: desc.z.len(), got: x.dim() });
    }
    Ok((0..x.len()).map(|i| desc.kernel.eval(&x.frame(i), &desc.z)).collect())
}
