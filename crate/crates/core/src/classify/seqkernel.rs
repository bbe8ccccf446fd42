use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{cross_gram, median_bandwidth_rows, psd_project, NystromApprox, RbfParams};
use crate::pooling::{Descriptor, Scheme, SubspaceDescriptor};
use crate::scalar::Scalar;

/// Parameters of the kernel between pooled sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceKernelParams<T: Scalar> {
    /// Temperature of the exponential projection kernel; `None` means `1/p`.
    pub nu: Option<T>,
    /// Frame kernel used for cross-sequence Grams between subspace descriptors.
    pub sigma: RbfParams<T>,
    /// Bandwidth of the RBF kernel between vector descriptors; `None` applies
    /// the median heuristic to the training descriptors.
    pub vector_sigma: Option<RbfParams<T>>,
    /// Column fraction for a Nyström-approximated training Gram.
    pub nystrom_fraction: Option<f64>,
}

impl<T: Scalar> SequenceKernelParams<T> {
    pub fn new(sigma: RbfParams<T>) -> Self {
        Self { nu: None, sigma, vector_sigma: None, nystrom_fraction: None }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(nu) = self.nu {
            if !(nu.finite() && nu > T::zero()) {
                return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
            }
        }
        if let Some(f) = self.nystrom_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!("nystrom fraction must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }

    fn nu_for(&self, p: usize) -> T {
        self.nu.unwrap_or_else(|| T::one() / T::from_count(p))
    }
}

/// `exp(ν ‖A₁ᵀ K₁₂ A₂‖²_F)` with `K₁₂ = cross_gram(X₁, X₂, σ)`.
pub fn seq_kernel_krpfs<T: Scalar>(
    d1: &SubspaceDescriptor<T>,
    d2: &SubspaceDescriptor<T>,
    params: &SequenceKernelParams<T>,
) -> Result<T> {
    if d1.p() != d2.p() {
        return Err(Error::Shape(format!("subspace dimensions differ: {} vs {}", d1.p(), d2.p())));
    }
    let k12 = cross_gram(&d1.source, &d2.source, &params.sigma)?;
    let m = d1.a.matrix().transpose() * k12 * d2.a.matrix();
    Ok((params.nu_for(d1.p()) * m.norm_squared()).exp())
}

/// A sequence kernel with every data-dependent parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceKernel<T: Scalar> {
    /// Exponential projection kernel through cross-sequence RBF Grams.
    Subspace { params: SequenceKernelParams<T> },
    /// Exponential projection kernel `exp(ν‖U₁ᵀU₂‖²)` between linear subspaces.
    Grp { nu: Option<T> },
    /// RBF between pooled vectors.
    Vector { sigma: RbfParams<T> },
}

impl<T: Scalar> SequenceKernel<T> {
    /// Resolves the kernel for a homogeneous set of training descriptors.
    pub fn fit(train: &[&Descriptor<T>], params: &SequenceKernelParams<T>) -> Result<Self> {
        params.validate()?;
        let first = train.first().ok_or(Error::Empty("no descriptors"))?;
        let scheme = first.scheme();
        if let Some(bad) = train.iter().find(|d| d.scheme() != scheme) {
            return Err(Error::SchemeMismatch(format!("mixed descriptor types: {scheme} and {}", bad.scheme())));
        }
        Ok(match first {
            Descriptor::Subspace(_) => SequenceKernel::Subspace { params: *params },
            Descriptor::Grp(_) => SequenceKernel::Grp { nu: params.nu },
            Descriptor::Vector(_) => {
                let sigma = match params.vector_sigma {
                    Some(s) => s,
                    None => {
                        let d = first.dim();
                        let rows = DMatrix::from_fn(train.len(), d, |i, j| match train[i] {
                            Descriptor::Vector(v) => v.z[j],
                            _ => unreachable!("homogeneous descriptors"),
                        });
                        // Identical descriptors fall back to a unit bandwidth.
                        median_bandwidth_rows(&rows).or_else(|_| RbfParams::new(T::one()))?
                    }
                };
                SequenceKernel::Vector { sigma }
            }
        })
    }

    pub fn eval(&self, a: &Descriptor<T>, b: &Descriptor<T>) -> Result<T> {
        match (self, a, b) {
            (SequenceKernel::Subspace { params }, Descriptor::Subspace(x), Descriptor::Subspace(y)) => {
                seq_kernel_krpfs(x, y, params)
            }
            (SequenceKernel::Grp { nu }, Descriptor::Grp(x), Descriptor::Grp(y)) => {
                if x.u.shape() != y.u.shape() {
                    return Err(Error::Shape(format!("GRP bases differ in shape: {:?} vs {:?}", x.u.shape(), y.u.shape())));
                }
                let p = x.u.ncols();
                let nu = nu.unwrap_or_else(|| T::one() / T::from_count(p));
                Ok((nu * (x.u.transpose() * &y.u).norm_squared()).exp())
            }
            (SequenceKernel::Vector { sigma }, Descriptor::Vector(x), Descriptor::Vector(y)) => {
                if x.scheme == Scheme::Avg && y.scheme != Scheme::Avg || y.scheme == Scheme::Avg && x.scheme != Scheme::Avg {
                    return Err(Error::SchemeMismatch(format!("{} vs {}", x.scheme, y.scheme)));
                }
                crate::kernel::rbf_eval(&x.z, &y.z, sigma)
            }
            _ => Err(Error::SchemeMismatch(format!("kernel cannot compare {} with {}", a.scheme(), b.scheme()))),
        }
    }

    pub fn rows(&self, left: &[&Descriptor<T>], right: &[&Descriptor<T>]) -> Result<DMatrix<T>> {
        let mut out = DMatrix::zeros(left.len(), right.len());
        for (i, a) in left.iter().enumerate() {
            for (j, b) in right.iter().enumerate() {
                out[(i, j)] = self.eval(a, b)?;
            }
        }
        Ok(out)
    }
}

/// A training Gram over descriptors, spectrally repaired.
#[derive(Debug, Clone)]
pub struct SequenceGram<T: Scalar> {
    pub matrix: DMatrix<T>,
    /// Largest eigenvalue lift applied by the PSD repair.
    pub max_clip: T,
    pub nystrom: Option<NystromApprox<T>>,
}

impl<T: Scalar> SequenceGram<T> {
    /// Dense when `nystrom_fraction` is absent or `1`, otherwise built from
    /// `⌈fraction · N⌉` sampled columns. Eigenvalues below `psd_epsilon` are
    /// clipped up to it.
    pub fn build(
        kernel: &SequenceKernel<T>,
        train: &[&Descriptor<T>],
        nystrom_fraction: Option<f64>,
        seed: u64,
        psd_epsilon: T,
    ) -> Result<Self> {
        let n = train.len();
        if n == 0 {
            return Err(Error::Empty("no descriptors"));
        }
        let (raw, nystrom) = match nystrom_fraction {
            Some(f) if f < 1.0 => {
                if !(f > 0.0) {
                    return Err(Error::InvalidParameter(format!("nystrom fraction must lie in (0, 1], got {f}")));
                }
                let m = ((f * n as f64).ceil() as usize).clamp(1, n);
                let mut failure = None;
                let approx = NystromApprox::from_column_fn(n, m, seed, |i, j| match kernel.eval(train[i], train[j]) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        T::zero()
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                (approx.reconstruct(), Some(approx))
            }
            _ => {
                let mut g = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = kernel.eval(train[i], train[j])?;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
                (g, None)
            }
        };
        let repaired = psd_project(&raw, psd_epsilon)?;
        Ok(Self { matrix: repaired.matrix, max_clip: repaired.max_clip, nystrom })
    }

    /// Kernel rows of `test` against the training set; Nyström-extended when
    /// the Gram was approximated.
    pub fn test_rows(&self, kernel: &SequenceKernel<T>, train: &[&Descriptor<T>], test: &[&Descriptor<T>]) -> Result<DMatrix<T>> {
        match &self.nystrom {
            None => kernel.rows(test, train),
            Some(approx) => {
                let sampled: Vec<&Descriptor<T>> = approx.sample_indices.iter().map(|&i| train[i]).collect();
                approx.extend(&kernel.rows(test, &sampled)?)
            }
        }
    }
}

/// Pairwise kernel matrix over homogeneous descriptors, PSD-repaired.
pub fn gram_sequences<T: Scalar>(descs: &[Descriptor<T>], params: &SequenceKernelParams<T>, seed: u64) -> Result<DMatrix<T>> {
    let refs: Vec<&Descriptor<T>> = descs.iter().collect();
    let kernel = SequenceKernel::fit(&refs, params)?;
    Ok(SequenceGram::build(&kernel, &refs, params.nystrom_fraction, seed, T::zero())?.matrix)
}
