use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::KernelMatrix;
use crate::error::{Error, Result};
use crate::linalg::{spectral_map, sym_eigen_desc};
use crate::scalar::Scalar;

/// Eigenvalues of the sampled core below this fraction of the largest one are
/// treated as zero when forming the pseudo-inverse.
const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Low-rank reconstruction `K̂ = K̃ M K̃ᵀ` from `m` sampled columns.
#[derive(Debug, Clone)]
pub struct NystromApprox<T: Scalar> {
    /// `n × m`; column `c` is column `sample_indices[c]` of the full kernel.
    pub sampled_columns: DMatrix<T>,
    /// Pseudo-inverse of the `m × m` block `K̃[sample_indices, :]`.
    pub core_pinv: DMatrix<T>,
    pub sample_indices: Vec<usize>,
    pub m: usize,
}

impl<T: Scalar> NystromApprox<T> {
    /// Builds the approximation from a column oracle, evaluating only the
    /// `n × m` sampled block.
    pub fn from_column_fn(n: usize, m: usize, seed: u64, mut column: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidParameter(format!("Nyström sample count must satisfy 1 <= m <= n, got m={m}, n={n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample_indices = rand::seq::index::sample(&mut rng, n, m).into_vec();
        let sampled_columns = DMatrix::from_fn(n, m, |i, c| column(i, sample_indices[c]));
        // Leading block after permuting the sampled rows to the front.
        let core = DMatrix::from_fn(m, m, |a, b| sampled_columns[(sample_indices[a], b)]);
        let core_pinv = pseudo_inverse(&core);
        Ok(Self { sampled_columns, core_pinv, sample_indices, m })
    }

    pub fn n(&self) -> usize {
        self.sampled_columns.nrows()
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        let left = &self.sampled_columns * &self.core_pinv;
        crate::linalg::symmetrize(&(left * self.sampled_columns.transpose()))
    }

    /// Approximate kernel rows for out-of-sample points given their kernel
    /// values against the sampled points (`rows × m`).
    pub fn extend(&self, against_samples: &DMatrix<T>) -> Result<DMatrix<T>> {
        if against_samples.ncols() != self.m {
            return Err(Error::Shape(format!("expected {} sampled columns, got {}", self.m, against_samples.ncols())));
        }
        Ok(against_samples * &self.core_pinv * self.sampled_columns.transpose())
    }
}

/// Samples `m` of the `n` columns of `k` uniformly without replacement.
pub fn nystrom<T: Scalar>(k: &KernelMatrix<T>, m: usize, seed: u64) -> Result<NystromApprox<T>> {
    let values = k.values();
    NystromApprox::from_column_fn(k.n(), m, seed, |i, j| values[(i, j)])
}

fn pseudo_inverse<T: Scalar>(core: &DMatrix<T>) -> DMatrix<T> {
    let (values, vectors) = sym_eigen_desc(core);
    let top = values.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
    let cutoff = top * T::lit(PINV_RELATIVE_CUTOFF);
    spectral_map(&values, &vectors, |l| if l > cutoff { T::one() / l } else { T::zero() })
}
