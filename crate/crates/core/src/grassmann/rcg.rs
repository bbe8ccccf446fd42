use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GeneralizedGrassmann, GrassmannPoint, TangentVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest step the Armijo backtracking is allowed to try.
const MIN_STEP: f64 = 1e-16;

/// A smooth cost on `ℝ^{n×p}` supplying its Euclidean gradient.
pub trait Objective<T: Scalar> {
    fn value_grad(&self, a: &DMatrix<T>) -> (T, DMatrix<T>);

    fn value(&self, a: &DMatrix<T>) -> T {
        self.value_grad(a).0
    }
}

impl<T: Scalar, F> Objective<T> for F
where
    F: Fn(&DMatrix<T>) -> (T, DMatrix<T>),
{
    fn value_grad(&self, a: &DMatrix<T>) -> (T, DMatrix<T>) {
        self(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaRule {
    PolakRibierePlus,
    FletcherReeves,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcgOptions {
    pub max_iters: usize,
    /// Stop once the Riemannian gradient K-norm drops below this.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub beta_rule: BetaRule,
    /// Steepest-descent restart period; `None` means `p · n`.
    pub restart_period: Option<usize>,
}

impl Default for RcgOptions {
    fn default() -> Self {
        Self {
            max_iters: 300,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            beta_rule: BetaRule::PolakRibierePlus,
            restart_period: None,
        }
    }
}

impl RcgOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("solver option {what}")));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if self.restart_period == Some(0) {
            return bad("restart_period must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    /// `‖AᵀKA − I‖_F` at this iterate.
    pub feasibility: f64,
}

#[derive(Debug, Clone)]
pub struct RcgResult<T: Scalar> {
    pub point: GrassmannPoint<T>,
    pub value: T,
    pub grad_norm: T,
    /// One entry per accepted iterate, starting with the initial point.
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
    pub gradient_evaluations: usize,
    pub value_evaluations: usize,
}

/// Riemannian conjugate gradient with Armijo backtracking from a unit step.
pub fn rcg_minimize<T: Scalar, O: Objective<T> + ?Sized>(
    objective: &O,
    a0: &GrassmannPoint<T>,
    manifold: &GeneralizedGrassmann<T>,
    opts: &RcgOptions,
) -> Result<RcgResult<T>> {
    opts.validate()?;
    let restart_period = opts.restart_period.unwrap_or(manifold.p() * manifold.n()).max(1);
    let c = T::lit(opts.armijo_c);
    let shrink = T::lit(opts.backtrack_factor);
    let min_step = T::lit(MIN_STEP);
    let tol = T::lit(opts.grad_tol);

    let mut point = a0.clone();
    let (mut value, egrad) = objective.value_grad(point.matrix());
    let mut gradient_evaluations = 1;
    let mut value_evaluations = 0;
    if !value.finite() || egrad.iter().any(|v| !v.finite()) {
        return Err(Error::SolverNonFinite { iter: 0 });
    }
    let mut grad = manifold.riemannian_grad(&point, &egrad)?;
    let mut grad_sq = manifold.inner(&grad, &grad);
    let mut grad_norm = grad_sq.max(T::zero()).sqrt();
    let mut trace = vec![TraceEntry {
        iter: 0,
        value: value.as_f64(),
        grad_norm: grad_norm.as_f64(),
        feasibility: manifold.feasibility_residual(point.matrix()).as_f64(),
    }];
    let mut direction = grad.scaled(-T::one());
    let mut since_restart = 0usize;
    let mut termination = Termination::MaxIterations;

    for iter in 1..=opts.max_iters {
        if grad_norm < tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut slope = manifold.inner(&grad, &direction);
        if !(slope < T::zero()) {
            direction = grad.scaled(-T::one());
            slope = -grad_sq;
            since_restart = 0;
        }

        let mut step = T::one();
        let accepted = loop {
            if step < min_step {
                break None;
            }
            // A failed retraction (rank collapse at a huge step) is a rejected trial.
            if let Ok(candidate) = manifold.retract(&point, &direction, step) {
                let trial = objective.value(candidate.matrix());
                value_evaluations += 1;
                if !trial.finite() {
                    return Err(Error::SolverNonFinite { iter });
                }
                if trial <= value + c * step * slope {
                    break Some(candidate);
                }
            }
            step *= shrink;
        };
        let Some(next) = accepted else {
            termination = Termination::StepUnderflow;
            break;
        };

        let (next_value, next_egrad) = objective.value_grad(next.matrix());
        gradient_evaluations += 1;
        if !next_value.finite() || next_egrad.iter().any(|v| !v.finite()) {
            return Err(Error::SolverNonFinite { iter });
        }
        let next_grad = manifold.riemannian_grad(&next, &next_egrad)?;
        let next_grad_sq = manifold.inner(&next_grad, &next_grad);

        since_restart += 1;
        let beta = if since_restart >= restart_period || grad_sq <= T::zero() {
            since_restart = 0;
            T::zero()
        } else {
            match opts.beta_rule {
                BetaRule::FletcherReeves => next_grad_sq / grad_sq,
                BetaRule::PolakRibierePlus => {
                    let old = manifold.transport(&point, &next, &grad)?;
                    let diff = TangentVector::from_raw(next_grad.matrix() - old.matrix());
                    (manifold.inner(&next_grad, &diff) / grad_sq).max(T::zero())
                }
            }
        };
        let carried = manifold.transport(&point, &next, &direction)?;
        direction = TangentVector::from_raw(carried.matrix() * beta - next_grad.matrix());

        point = next;
        value = next_value;
        grad = next_grad;
        grad_sq = next_grad_sq;
        grad_norm = grad_sq.max(T::zero()).sqrt();
        trace.push(TraceEntry {
            iter,
            value: value.as_f64(),
            grad_norm: grad_norm.as_f64(),
            feasibility: manifold.feasibility_residual(point.matrix()).as_f64(),
        });
    }
    if termination == Termination::MaxIterations && grad_norm < tol {
        termination = Termination::GradientTolerance;
    }

    Ok(RcgResult { point, value, grad_norm, trace, termination, gradient_evaluations, value_evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSequence;
    use crate::kernel::{gram, RbfParams};
    use crate::linalg::sym_eigen_desc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn well_conditioned_k(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = FeatureSequence::new(rand_mat(&mut rng, n, 6)).unwrap();
        gram(&x, &RbfParams::new(0.7).unwrap()).into_inner()
    }

    #[test]
    fn zero_gradient_objective_returns_start() {
        let k = well_conditioned_k(10, 1);
        let m = GeneralizedGrassmann::new(k.clone(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a0 = m.k_orthonormalize(&rand_mat(&mut rng, 10, 2)).unwrap();
        let obj = |a: &DMatrix<f64>| {
            let r = a.transpose() * &k * a - DMatrix::identity(2, 2);
            (r.norm_squared(), &k * a * &r * 4.0)
        };
        let res = rcg_minimize(&obj, &a0, &m, &RcgOptions::default()).unwrap();
        assert_eq!(res.point, a0);
        assert_eq!(res.gradient_evaluations, 1);
        assert_eq!(res.termination, Termination::GradientTolerance);
    }

    #[test]
    fn quadratic_reaches_top_generalized_eigenspace() {
        let (n, p) = (12, 2);
        let k = well_conditioned_k(n, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b0 = rand_mat(&mut rng, n, n);
        let b = &b0 * b0.transpose() + DMatrix::identity(n, n) * 0.5;
        let kbk = &k * &b * &k;
        let obj = |a: &DMatrix<f64>| {
            let ka = &kbk * a;
            (-(a.transpose() * &ka).trace(), ka * -2.0)
        };

        // Oracle: pencil (KBK, K) reduced through the Cholesky factor of K.
        let l = k.clone().cholesky().unwrap().l();
        let linv = l.clone().try_inverse().unwrap();
        let reduced = &linv * &kbk * linv.transpose();
        let (vals, _) = sym_eigen_desc(&reduced);
        let want = -(vals[0] + vals[1]);

        let m = GeneralizedGrassmann::new(k.clone(), p).unwrap();
        let a0 = m.k_orthonormalize(&rand_mat(&mut rng, n, p)).unwrap();
        let opts = RcgOptions { max_iters: 2000, grad_tol: 1e-9, ..Default::default() };
        let res = rcg_minimize(&obj, &a0, &m, &opts).unwrap();
        assert!((res.value - want).abs() < 1e-6 * want.abs().max(1.0), "got {} want {}", res.value, want);
        for w in res.trace.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-12);
        }
        assert!(m.feasibility_residual(res.point.matrix()) < 1e-8);
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let m = GeneralizedGrassmann::<f64>::euclidean(4, 1).unwrap();
        let a0 = m.k_orthonormalize(&DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let obj = |a: &DMatrix<f64>| (f64::NAN, a.clone());
        assert!(matches!(rcg_minimize(&obj, &a0, &m, &RcgOptions::default()), Err(Error::SolverNonFinite { iter: 0 })));
    }

    #[test]
    fn option_validation() {
        let bad = RcgOptions { backtrack_factor: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RcgOptions { max_iters: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(RcgOptions::default().validate().is_ok());
    }
}
