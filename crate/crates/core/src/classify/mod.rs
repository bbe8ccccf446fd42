//! Sequence-level kernels, a one-vs-rest kernel SVM and split-wise evaluation.

mod eval;
mod seqkernel;
mod svm;

pub use eval::{cross_validate, evaluate_descriptors, resolve_dataset_sigma, EvalConfig, Metrics, Sample, Timings};
pub use seqkernel::{gram_sequences, seq_kernel_krpfs, SequenceGram, SequenceKernel, SequenceKernelParams};
pub use svm::{svm_predict, svm_train, Prediction, SvmModel, SvmOptions};
