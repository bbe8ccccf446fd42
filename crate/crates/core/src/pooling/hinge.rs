use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordering margin `η`, hinge weight `λ` and slack cost `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeParams<T> {
    pub eta: T,
    pub lambda: T,
    pub slack_weight: T,
}

impl<T: Scalar> HingeParams<T> {
    pub fn new(eta: T, lambda: T, slack_weight: T) -> Result<Self> {
        let hp = Self { eta, lambda, slack_weight };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.finite() && self.eta >= T::zero()) {
            return Err(Error::InvalidParameter(format!("eta must be >= 0, got {}", self.eta)));
        }
        // λ = 0 is admitted: it switches the ordering term off entirely.
        if !(self.lambda.finite() && self.lambda >= T::zero()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.slack_weight.finite() && self.slack_weight > T::zero()) {
            return Err(Error::InvalidParameter(format!("slack weight C must be > 0, got {}", self.slack_weight)));
        }
        Ok(())
    }

    /// Hinge weight after eliminating the slacks in closed form: `min(C, λ)`.
    pub fn effective_lambda(&self) -> T {
        self.lambda.min(self.slack_weight)
    }
}

/// Exact hinge `max(0, v)` or its Huber smoothing of width `w`
/// (`v²/2w` on `(0, w)`, `v − w/2` beyond), which lower-bounds the hinge by at
/// most `w/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Hinge<T> {
    Exact,
    Huber(T),
}

impl<T: Scalar> Hinge<T> {
    /// The smoothing used inside the solvers: width `1e-4·η`, floored at `1e-8`.
    pub(crate) fn for_margin(eta: T) -> Self {
        Hinge::Huber((eta * T::lit(1e-4)).max(T::lit(1e-8)))
    }

    #[inline]
    pub(crate) fn value(&self, v: T) -> T {
        if v <= T::zero() {
            return T::zero();
        }
        match *self {
            Hinge::Exact => v,
            Hinge::Huber(w) if v < w => v * v / (w + w),
            Hinge::Huber(w) => v - w * T::lit(0.5),
        }
    }

    /// Derivative (the subgradient `1` is used at the exact kink's active side).
    #[inline]
    pub(crate) fn slope(&self, v: T) -> T {
        if v <= T::zero() {
            return T::zero();
        }
        match *self {
            Hinge::Exact => T::one(),
            Hinge::Huber(w) if v < w => v / w,
            Hinge::Huber(_) => T::one(),
        }
    }
}

/// Accumulates `Σ_{i<j} h(η + s_i − s_j)` and the per-frame signed slope
/// weights `c_i = Σ_{j>i} h'(v_ij) − Σ_{j<i} h'(v_ji)`.
pub(crate) fn pairwise_hinge<T: Scalar>(scores: &[T], eta: T, hinge: Hinge<T>, weights: Option<&mut [T]>) -> T {
    let n = scores.len();
    let mut total = T::zero();
    match weights {
        Some(w) => {
            w.iter_mut().for_each(|x| *x = T::zero());
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = eta + scores[i] - scores[j];
                    if v > T::zero() {
                        total += hinge.value(v);
                        let s = hinge.slope(v);
                        w[i] += s;
                        w[j] -= s;
                    }
                }
            }
        }
        None => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = eta + scores[i] - scores[j];
                    if v > T::zero() {
                        total += hinge.value(v);
                    }
                }
            }
        }
    }
    total
}

/// Fraction of pairs `i < j` with `s_i + η > s_j`.
pub(crate) fn violation_fraction<T: Scalar>(scores: &[T], eta: T) -> f64 {
    let n = scores.len();
    if n < 2 {
        return 0.0;
    }
    let mut bad = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if scores[i] + eta > scores[j] {
                bad += 1;
            }
        }
    }
    bad as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_bounds_hinge() {
        let h = Hinge::Huber(0.1);
        for v in [-1.0, 0.0, 0.01, 0.05, 0.1, 0.5, 3.0] {
            let exact = Hinge::<f64>::Exact.value(v);
            assert!(h.value(v) <= exact);
            assert!(exact - h.value(v) <= 0.05 + 1e-15);
        }
        assert_eq!(h.slope(0.05), 0.5);
        assert_eq!(h.slope(2.0), 1.0);
    }

    #[test]
    fn effective_lambda_is_min() {
        let hp = HingeParams::new(0.1, 3.0, 0.5).unwrap();
        assert_eq!(hp.effective_lambda(), 0.5);
        let hp = HingeParams::new(0.1, 0.2, 0.5).unwrap();
        assert_eq!(hp.effective_lambda(), 0.2);
        assert!(HingeParams::new(-0.1, 1.0, 1.0).is_err());
        assert!(HingeParams::new(0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn weights_balance() {
        let s = [0.3, 0.1, 0.5, 0.2];
        let mut w = [0.0; 4];
        let total = pairwise_hinge(&s, 0.05, Hinge::Exact, Some(&mut w));
        assert!(w.iter().sum::<f64>().abs() < 1e-15);
        assert_eq!(total, pairwise_hinge(&s, 0.05, Hinge::Exact, None));
    }
}
