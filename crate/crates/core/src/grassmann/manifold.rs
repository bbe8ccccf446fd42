use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_dot, sym_eigen_desc, symmetrize};
use crate::scalar::Scalar;

/// Largest admissible condition number of `YᵀKY` during K-orthonormalization.
const MAX_GRAM_CONDITION: f64 = 1e12;
/// Relative Tikhonov shift applied before solving with `K`.
const SOLVE_SHIFT: f64 = 1e-8;

/// A point `A` with `AᵀKA = I_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint<T: Scalar> {
    a: DMatrix<T>,
}

impl<T: Scalar> GrassmannPoint<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.a
    }

    pub fn p(&self) -> usize {
        self.a.ncols()
    }

    pub(crate) fn from_raw(a: DMatrix<T>) -> Self {
        Self { a }
    }

    /// Right-multiplies by `r`; for orthogonal `r` the result represents the
    /// same subspace.
    pub fn rotated(&self, r: &DMatrix<T>) -> Self {
        Self { a: &self.a * r }
    }
}

/// A horizontal tangent vector at some base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T: Scalar> {
    xi: DMatrix<T>,
}

impl<T: Scalar> TangentVector<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.xi
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { xi: &self.xi * s }
    }

    pub(crate) fn from_raw(xi: DMatrix<T>) -> Self {
        Self { xi }
    }
}

/// Geometry of the generalized Grassmannian for a fixed SPD (or near-SPD)
/// weighting matrix `K`.
#[derive(Debug, Clone)]
pub struct GeneralizedGrassmann<T: Scalar> {
    k: DMatrix<T>,
    solver: Cholesky<T, Dyn>,
    p: usize,
}

impl<T: Scalar> GeneralizedGrassmann<T> {
    /// `K + τI` with `τ = 1e-8 · tr(K)/n` is factorized once for the gradient
    /// conversion.
    pub fn new(k: DMatrix<T>, p: usize) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(Error::Shape(format!("K must be square, got {}x{}", n, k.ncols())));
        }
        if p == 0 || p > n {
            return Err(Error::InvalidParameter(format!("subspace dimension must satisfy 1 <= p <= n, got p={p}, n={n}")));
        }
        let k = symmetrize(&k);
        let tau = T::lit(SOLVE_SHIFT) * k.trace() / T::from_count(n);
        let shifted = &k + DMatrix::identity(n, n) * tau;
        let solver = Cholesky::new(shifted).ok_or(Error::SingularKernel)?;
        Ok(Self { k, solver, p })
    }

    /// The ordinary Grassmannian `Gr(p, n)` (`K = I`).
    pub fn euclidean(n: usize, p: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n), p)
    }

    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn kernel(&self) -> &DMatrix<T> {
        &self.k
    }

    fn check_shape(&self, m: &DMatrix<T>) -> Result<()> {
        if m.shape() != (self.n(), self.p) {
            return Err(Error::Shape(format!(
                "expected {}x{} matrix, got {}x{}",
                self.n(),
                self.p,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }

    /// `‖AᵀKA − I‖_F`.
    pub fn feasibility_residual(&self, a: &DMatrix<T>) -> T {
        let s = a.transpose() * &self.k * a;
        (s - DMatrix::identity(a.ncols(), a.ncols())).norm()
    }

    /// `A = Y R⁻¹` with `RᵀR = YᵀKY` (Cholesky).
    pub fn k_orthonormalize(&self, y: &DMatrix<T>) -> Result<GrassmannPoint<T>> {
        self.check_shape(y)?;
        if y.iter().any(|v| !v.finite()) {
            return Err(Error::NonFinite("k_orthonormalize input".into()));
        }
        let gram = symmetrize(&(y.transpose() * &self.k * y));
        let (values, _) = sym_eigen_desc(&gram);
        let (top, bottom) = (values[0], values[values.len() - 1]);
        if !(bottom > T::zero()) || top / bottom > T::lit(MAX_GRAM_CONDITION) {
            return Err(Error::RankDeficient { p: self.p });
        }
        let chol = Cholesky::new(gram).ok_or(Error::RankDeficient { p: self.p })?;
        // Y R⁻¹ = (L⁻¹ Yᵀ)ᵀ with L = Rᵀ.
        let at = chol
            .l()
            .solve_lower_triangular(&y.transpose())
            .ok_or(Error::RankDeficient { p: self.p })?;
        Ok(GrassmannPoint { a: at.transpose() })
    }

    /// Wraps a matrix already known to be feasible, re-orthonormalizing only
    /// if the residual exceeds `1e-10`.
    pub fn point(&self, a: DMatrix<T>) -> Result<GrassmannPoint<T>> {
        self.check_shape(&a)?;
        if self.feasibility_residual(&a) < T::lit(1e-10) {
            Ok(GrassmannPoint { a })
        } else {
            self.k_orthonormalize(&a)
        }
    }

    /// `ξ = Z − A(AᵀKZ)`.
    pub fn project_tangent(&self, base: &GrassmannPoint<T>, z: &DMatrix<T>) -> Result<TangentVector<T>> {
        self.check_shape(z)?;
        let a = &base.a;
        let akz = (a.transpose() * &self.k) * z;
        Ok(TangentVector { xi: z - a * akz })
    }

    /// `grad F = K⁻¹∇F − A sym(Aᵀ∇F)`, then projected to the horizontal space.
    pub fn riemannian_grad(&self, base: &GrassmannPoint<T>, egrad: &DMatrix<T>) -> Result<TangentVector<T>> {
        self.check_shape(egrad)?;
        let a = &base.a;
        let kinv_grad = self.solver.solve(egrad);
        let raw = kinv_grad - a * symmetrize(&(a.transpose() * egrad));
        self.project_tangent(base, &raw)
    }

    pub fn retract(&self, base: &GrassmannPoint<T>, xi: &TangentVector<T>, step: T) -> Result<GrassmannPoint<T>> {
        if step == T::zero() {
            return Ok(base.clone());
        }
        self.k_orthonormalize(&(&base.a + &xi.xi * step))
    }

    /// Projection-based vector transport.
    pub fn transport(&self, _from: &GrassmannPoint<T>, to: &GrassmannPoint<T>, xi: &TangentVector<T>) -> Result<TangentVector<T>> {
        self.project_tangent(to, &xi.xi)
    }

    /// `tr(ξᵀKζ)`.
    pub fn inner(&self, xi: &TangentVector<T>, zeta: &TangentVector<T>) -> T {
        frobenius_dot(&xi.xi, &(&self.k * &zeta.xi))
    }

    pub fn norm(&self, xi: &TangentVector<T>) -> T {
        self.inner(xi, xi).max(T::zero()).sqrt()
    }

    /// `‖AᵀKξ‖_F`.
    pub fn horizontality_residual(&self, base: &GrassmannPoint<T>, xi: &TangentVector<T>) -> T {
        (base.a.transpose() * &self.k * &xi.xi).norm()
    }
}
