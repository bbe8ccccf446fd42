use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bandwidth of the Gaussian kernel `k(x, z) = exp(−‖x − z‖² / (2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfParams<T> {
    sigma: T,
}

impl<T: Scalar> RbfParams<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma.finite() && sigma > T::zero()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// `1 / (2σ²)`
    #[inline]
    pub(crate) fn gamma(&self) -> T {
        T::one() / (T::lit(2.0) * self.sigma * self.sigma)
    }
}

/// Kernel used between a frame and a pre-image candidate.
///
/// `Linear` is the diagnostic mode `k(x, z) = xᵀz` under which the kernelized
/// rank-pooling objective collapses to the linear one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FrameKernel<T> {
    Rbf(RbfParams<T>),
    Linear,
}

impl<T: Scalar> FrameKernel<T> {
    pub(crate) fn eval(&self, x: &[T], z: &[T]) -> T {
        match self {
            FrameKernel::Rbf(p) => (-sq_dist(x, z) * p.gamma()).exp(),
            FrameKernel::Linear => x.iter().zip(z).fold(T::zero(), |acc, (&a, &b)| acc + a * b),
        }
    }

    /// Adds `weight · ∇_z k(x, z)` into `out`.
    pub(crate) fn add_grad_z(&self, x: &[T], z: &[T], weight: T, out: &mut [T]) {
        match self {
            FrameKernel::Rbf(p) => {
                let k = (-sq_dist(x, z) * p.gamma()).exp();
                let scale = weight * k / (p.sigma * p.sigma);
                for ((o, &xi), &zi) in out.iter_mut().zip(x).zip(z) {
                    *o += scale * (xi - zi);
                }
            }
            FrameKernel::Linear => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o += weight * xi;
                }
            }
        }
    }
}

#[inline]
fn sq_dist<T: Scalar>(x: &[T], z: &[T]) -> T {
    x.iter().zip(z).fold(T::zero(), |acc, (&a, &b)| {
        let t = a - b;
        acc + t * t
    })
}

fn sq_dist_rows<T: Scalar>(a: &DMatrix<T>, i: usize, b: &DMatrix<T>, j: usize) -> T {
    let mut s = T::zero();
    for k in 0..a.ncols() {
        let t = a[(i, k)] - b[(j, k)];
        s += t * t;
    }
    s
}

/// `exp(−‖x − z‖² / (2σ²))`.
pub fn rbf_eval<T: Scalar>(x: &[T], z: &[T], params: &RbfParams<T>) -> Result<T> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: z.len() });
    }
    if x.iter().chain(z).any(|v| !v.finite()) {
        return Err(Error::NonFinite("rbf_eval input".into()));
    }
    Ok((-sq_dist(x, z) * params.gamma()).exp())
}

/// Symmetric Gram matrix of the RBF kernel over the frames of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T: Scalar> {
    values: DMatrix<T>,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Accepts any square matrix that is symmetric to within `1e-12`
    /// (relative to its largest entry).
    pub fn from_matrix(values: DMatrix<T>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Shape(format!("kernel matrix must be square, got {}x{}", values.nrows(), values.ncols())));
        }
        if values.nrows() == 0 {
            return Err(Error::Empty("kernel matrix"));
        }
        let asym = crate::linalg::max_asymmetry(&values);
        let scale = values.amax().max(T::one());
        if asym > T::lit(1e-12) * scale {
            return Err(Error::NotSymmetric(asym.as_f64()));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.values
    }
}

impl<T: Scalar> std::ops::Deref for KernelMatrix<T> {
    type Target = DMatrix<T>;
    fn deref(&self) -> &DMatrix<T> {
        &self.values
    }
}

/// `K_ij = k(x_i, x_j)`; the upper triangle is computed and mirrored.
pub fn gram<T: Scalar>(x: &FeatureSequence<T>, params: &RbfParams<T>) -> KernelMatrix<T> {
    let data = x.data();
    let n = x.len();
    let gamma = params.gamma();
    let mut k = DMatrix::from_element(n, n, T::one());
    for j in 0..n {
        for i in 0..j {
            let v = (-sq_dist_rows(data, i, data, j) * gamma).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    KernelMatrix { values: k }
}

/// `n1 × n2` matrix of `k(x1_i, x2_j)`.
pub fn cross_gram<T: Scalar>(x1: &FeatureSequence<T>, x2: &FeatureSequence<T>, params: &RbfParams<T>) -> Result<DMatrix<T>> {
    if x1.dim() != x2.dim() {
        return Err(Error::DimensionMismatch { expected: x1.dim(), got: x2.dim() });
    }
    let (a, b) = (x1.data(), x2.data());
    let gamma = params.gamma();
    Ok(DMatrix::from_fn(x1.len(), x2.len(), |i, j| (-sq_dist_rows(a, i, b, j) * gamma).exp()))
}

/// Median of all pairwise Euclidean distances between frames.
pub fn median_bandwidth<T: Scalar>(x: &FeatureSequence<T>) -> Result<RbfParams<T>> {
    median_bandwidth_rows(x.data())
}

/// Median heuristic over the rows of an arbitrary matrix (e.g. frames pooled
/// from several sequences, or vector descriptors).
pub fn median_bandwidth_rows<T: Scalar>(rows: &DMatrix<T>) -> Result<RbfParams<T>> {
    let n = rows.nrows();
    if n < 2 {
        return Err(Error::DegenerateSequence);
    }
    let mut dists: Vec<T> = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for i in 0..j {
            dists.push(sq_dist_rows(rows, i, rows, j).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        (dists[m / 2 - 1] + dists[m / 2]) * T::lit(0.5)
    };
    if median > T::zero() {
        return RbfParams::new(median);
    }
    // Over half the pairs coincide; fall back to the smallest positive distance
    // so long as any frame differs at all.
    match dists.iter().find(|&&d| d > T::zero()) {
        Some(&d) => RbfParams::new(d),
        None => Err(Error::DegenerateSequence),
    }
}
