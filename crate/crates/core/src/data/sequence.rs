use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A temporally ordered multivariate sequence: row `i` holds frame `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<T: Scalar> {
    data: DMatrix<T>,
    id: Option<String>,
}

impl<T: Scalar> FeatureSequence<T> {
    /// Wraps an `n × d` matrix, rejecting empty or non-finite data.
    pub fn new(data: DMatrix<T>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::Empty("sequence has no frames"));
        }
        if data.ncols() == 0 {
            return Err(Error::Empty("sequence has zero feature dimension"));
        }
        if let Some(pos) = data.iter().position(|v| !v.finite()) {
            let (c, r) = (pos / data.nrows(), pos % data.nrows());
            return Err(Error::NonFinite(format!("frame {r}, feature {c}")));
        }
        Ok(Self { data, id: None })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("sequence has no frames"));
        }
        let d = rows[0].len();
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    /// Frame count `n`.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<T> {
        self.data
    }

    pub fn frame(&self, i: usize) -> Vec<T> {
        self.data.row(i).iter().copied().collect()
    }

    /// The same frames in reverse temporal order.
    pub fn reversed(&self) -> Self {
        let n = self.len();
        Self {
            data: DMatrix::from_fn(n, self.dim(), |i, j| self.data[(n - 1 - i, j)]),
            id: self.id.clone(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> FeatureSequence<U> {
        FeatureSequence {
            data: self.data.map(|v| U::lit(v.as_f64())),
            id: self.id.clone(),
        }
    }
}
