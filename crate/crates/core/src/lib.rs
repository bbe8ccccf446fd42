//! Kernelized rank pooling of feature sequences.
//!
//! Sequences of frame features are pooled into fixed-size descriptors that
//! encode temporal order, either as vectors or as subspaces of an RBF feature
//! space, and classified with a kernel SVM.

pub mod classify;
pub mod data;
pub mod error;
pub mod grassmann;
pub mod kernel;
pub(crate) mod linalg;
pub mod pooling;
pub mod scalar;

pub use classify::{cross_validate, gram_sequences, seq_kernel_krpfs, svm_predict, svm_train, Metrics, SvmModel};
pub use data::{DatasetManifest, FeatureSequence, ManifestEntry};
pub use error::{Error, Result};
pub use grassmann::{rcg_minimize, GeneralizedGrassmann, GrassmannPoint, RcgOptions, RcgResult};
pub use kernel::{gram, median_bandwidth, nystrom, psd_project, KernelMatrix, NystromApprox, RbfParams};
pub use pooling::{pool, Descriptor, HingeParams, PoolerConfig, Scheme, SubspaceDescriptor};
pub use scalar::Scalar;

pub type FeatureSequence64 = FeatureSequence<f64>;
pub type FeatureSequence32 = FeatureSequence<f32>;
pub type KernelMatrix64 = KernelMatrix<f64>;
pub type RbfParams64 = RbfParams<f64>;
pub type Descriptor64 = Descriptor<f64>;
pub type SubspaceDescriptor64 = SubspaceDescriptor<f64>;
pub type GrassmannPoint64 = GrassmannPoint<f64>;
pub type GeneralizedGrassmann64 = GeneralizedGrassmann<f64>;
pub type PoolerConfig64 = PoolerConfig<f64>;
