//! Sequences, file formats, manifests, preprocessing and synthetic data.

mod format;
mod manifest;
mod preprocess;
mod sequence;
mod synth;

pub use format::{
    load_descriptor, load_sequence, read_descriptor, read_sequence_binary, read_sequence_csv, save_descriptor,
    save_sequence, write_descriptor, write_sequence_binary, write_sequence_csv, DESCRIPTOR_EXTENSION,
    SEQUENCE_EXTENSION,
};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use preprocess::preprocess;
pub use sequence::FeatureSequence;
pub use synth::{order_benchmark, synth_order_benchmark, synth_smooth, LabeledSequence, ORDER_CLASSES};
