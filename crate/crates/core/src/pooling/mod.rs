//! Sequence poolers: average, linear rank pooling, subspace rank pooling,
//! the kernelized pre-image variants and the kernelized feature-subspace
//! pooler.

mod grp;
mod hinge;
mod krpfs;
mod scheme;
mod vector;

use serde::{Deserialize, Serialize};

pub use grp::{grp_objective, pool_grp, GrpDescriptor};
pub use hinge::HingeParams;
pub use krpfs::{
    kpca_init, krpfs_euclidean_grad, krpfs_objective, pool_krpfs, projection_lengths, SmoothedKrpfs, SubspaceDescriptor,
};
pub use scheme::Scheme;
pub use vector::{
    bkrp_objective, ibkrp_objective, pool_average, pool_bkrp, pool_ibkrp, pool_rp, rp_objective, DescentOptions,
    VectorDescriptor,
};

use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::grassmann::{RcgOptions, Termination, TraceEntry};
use crate::kernel::{gram, median_bandwidth, FrameKernel, RbfParams};
use crate::scalar::Scalar;

/// Solver bookkeeping attached to a pooled descriptor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolStats {
    /// Exact objective at the returned descriptor.
    pub objective: Option<f64>,
    pub initial_objective: Option<f64>,
    pub iterations: usize,
    /// `‖AᵀKA − I‖_F` (or `‖UᵀU − I‖_F`) for subspace schemes.
    pub feasibility: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TraceEntry>,
    pub termination: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled<D> {
    pub descriptor: D,
    pub stats: PoolStats,
}

/// Any pooled representation of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor<T: Scalar> {
    Vector(VectorDescriptor<T>),
    Grp(GrpDescriptor<T>),
    Subspace(SubspaceDescriptor<T>),
}

impl<T: Scalar> Descriptor<T> {
    pub fn scheme(&self) -> Scheme {
        match self {
            Descriptor::Vector(v) => v.scheme,
            Descriptor::Grp(_) => Scheme::Grp,
            Descriptor::Subspace(_) => Scheme::Krpfs,
        }
    }

    /// Feature dimension of the sequences this descriptor is compatible with.
    pub fn dim(&self) -> usize {
        match self {
            Descriptor::Vector(v) => v.z.len(),
            Descriptor::Grp(g) => g.u.nrows(),
            Descriptor::Subspace(s) => s.source.dim(),
        }
    }
}

impl<T: Scalar> From<VectorDescriptor<T>> for Descriptor<T> {
    fn from(v: VectorDescriptor<T>) -> Self {
        Descriptor::Vector(v)
    }
}

impl<T: Scalar> From<GrpDescriptor<T>> for Descriptor<T> {
    fn from(v: GrpDescriptor<T>) -> Self {
        Descriptor::Grp(v)
    }
}

impl<T: Scalar> From<SubspaceDescriptor<T>> for Descriptor<T> {
    fn from(v: SubspaceDescriptor<T>) -> Self {
        Descriptor::Subspace(v)
    }
}

/// Everything needed to pool one sequence with any scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolerConfig<T: Scalar> {
    pub scheme: Scheme,
    /// Frame-kernel bandwidth; `None` applies the median heuristic per sequence.
    pub sigma: Option<RbfParams<T>>,
    pub hinge: HingeParams<T>,
    pub p: usize,
    pub rcg: RcgOptions,
    pub descent: DescentOptions,
}

impl<T: Scalar> PoolerConfig<T> {
    /// Scheme defaults: `λ = 1`, `C = 1`, `p = 10`, scheme-specific `η`.
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            sigma: None,
            hinge: HingeParams { eta: T::lit(scheme.default_eta()), lambda: T::one(), slack_weight: T::one() },
            p: 10,
            rcg: RcgOptions::default(),
            descent: DescentOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hinge.validate()?;
        self.rcg.validate()?;
        if self.scheme.is_subspace() && self.p == 0 {
            return Err(Error::InvalidParameter("p must be positive".into()));
        }
        Ok(())
    }
}

/// Pools one sequence according to `config`.
pub fn pool<T: Scalar>(x: &FeatureSequence<T>, config: &PoolerConfig<T>) -> Result<Pooled<Descriptor<T>>> {
    config.validate()?;
    let sigma = || -> Result<RbfParams<T>> {
        match config.sigma {
            Some(s) => Ok(s),
            None => median_bandwidth(x),
        }
    };
    fn lift<D: Into<Descriptor<T>>, T: Scalar>(p: Pooled<D>) -> Pooled<Descriptor<T>> {
        Pooled { descriptor: p.descriptor.into(), stats: p.stats }
    }
    Ok(match config.scheme {
        Scheme::Avg => lift(pool_average(x)?),
        Scheme::Rp => lift(pool_rp(x, &config.hinge, &config.descent)?),
        Scheme::Grp => lift(pool_grp(x, config.p, &config.hinge, &config.rcg)?),
        Scheme::Bkrp => lift(pool_bkrp(x, &FrameKernel::Rbf(sigma()?), &config.hinge, &config.descent)?),
        Scheme::Ibkrp => lift(pool_ibkrp(x, &sigma()?, &config.hinge, &config.descent)?),
        Scheme::Krpfs => lift(pool_krpfs(x, config.p, &sigma()?, &config.hinge, &config.rcg)?),
    })
}

/// Fraction of frame pairs `i < j` whose scores break the descriptor's
/// ordering inequality `s_i + η ≤ s_j`. Average pooling has no ordering and
/// is rejected.
pub fn order_violation_rate<T: Scalar>(descriptor: &Descriptor<T>, x: &FeatureSequence<T>) -> Result<f64> {
    if descriptor.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: descriptor.dim(), got: x.dim() });
    }
    let (scores, eta) = match descriptor {
        Descriptor::Vector(v) if v.scheme == Scheme::Avg => {
            return Err(Error::SchemeMismatch("average pooling carries no temporal ordering".into()))
        }
        Descriptor::Vector(v) => (vector::vector_scores(v, x)?, v.hinge.eta),
        Descriptor::Grp(g) => {
            let xu = x.data() * &g.u;
            ((0..x.len()).map(|i| xu.row(i).norm_squared()).collect(), g.hinge.eta)
        }
        Descriptor::Subspace(s) => {
            if s.source.len() != x.len() {
                return Err(Error::Shape(format!(
                    "subspace descriptor spans {} frames, sequence has {}",
                    s.source.len(),
                    x.len()
                )));
            }
            let k = gram(x, &s.sigma);
            (projection_lengths(s.a.matrix(), &k)?, s.hinge.eta)
        }
    };
    Ok(hinge::violation_fraction(&scores, eta))
}
