//! RBF kernels, Gram construction, bandwidth selection, Nyström
//! approximation and spectral PSD repair.

mod nystrom;
mod psd;
mod rbf;

pub use nystrom::{nystrom, NystromApprox};
pub use psd::{psd_project, PsdProjection};
pub use rbf::{cross_gram, gram, median_bandwidth, median_bandwidth_rows, rbf_eval, FrameKernel, KernelMatrix, RbfParams};
