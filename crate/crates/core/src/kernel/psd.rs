use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, spectral_map, sym_eigen_desc};
use crate::scalar::Scalar;

/// Output of [`psd_project`].
#[derive(Debug, Clone)]
pub struct PsdProjection<T: Scalar> {
    pub matrix: DMatrix<T>,
    /// Largest amount by which any eigenvalue was raised.
    pub max_clip: T,
}

impl<T: Scalar> PsdProjection<T> {
    pub fn changed(&self) -> bool {
        self.max_clip > T::zero()
    }
}

/// Clips every eigenvalue of the symmetric matrix `g` below `epsilon` up to
/// `epsilon`. Matrices whose spectrum already clears `epsilon` are returned
/// unchanged.
pub fn psd_project<T: Scalar>(g: &DMatrix<T>, epsilon: T) -> Result<PsdProjection<T>> {
    if g.nrows() != g.ncols() {
        return Err(Error::Shape(format!("expected a square matrix, got {}x{}", g.nrows(), g.ncols())));
    }
    let asym = max_asymmetry(g);
    if asym > T::lit(1e-10) * g.amax().max(T::one()) {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    let (values, vectors) = sym_eigen_desc(g);
    let max_clip = values.iter().fold(T::zero(), |acc, &l| if epsilon - l > acc { epsilon - l } else { acc });
    if max_clip == T::zero() {
        return Ok(PsdProjection { matrix: g.clone(), max_clip });
    }
    let matrix = spectral_map(&values, &vectors, |l| if l < epsilon { epsilon } else { l });
    Ok(PsdProjection { matrix, max_clip })
}
