use nalgebra::DMatrix;

use super::FeatureSequence;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Optional signed square root `sign(x)·√|x|`, then a causal moving average of
/// width `ma_window` (truncated over the first frames).
pub fn preprocess<T: Scalar>(x: &FeatureSequence<T>, ma_window: usize, ssr: bool) -> Result<FeatureSequence<T>> {
    let (n, d) = (x.len(), x.dim());
    if ma_window == 0 {
        return Err(Error::InvalidParameter("moving-average window must be >= 1".into()));
    }
    if ma_window > n {
        return Err(Error::InvalidParameter(format!("moving-average window {ma_window} exceeds sequence length {n}")));
    }
    let mut data = x.data().clone();
    if ssr {
        data.apply(|v| *v = v.signum() * v.abs().sqrt());
    }
    if ma_window > 1 {
        let src = data.clone();
        data = DMatrix::from_fn(n, d, |i, j| {
            let start = (i + 1).saturating_sub(ma_window);
            let sum = (start..=i).fold(T::zero(), |a, t| a + src[(t, j)]);
            sum / T::from_count(i + 1 - start)
        });
    }
    let out = FeatureSequence::new(data)?;
    Ok(match x.id() {
        Some(id) => out.with_id(id),
        None => out,
    })
}
