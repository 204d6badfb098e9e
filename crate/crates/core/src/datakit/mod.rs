//! Embedding files, dataset manifests, in-memory datasets and the synthetic
//! dataset generator.

pub mod dataset;
pub mod labels;
pub mod manifest;
pub mod sdve;
pub mod synth;

pub use dataset::{Dataset, Sample, VideoData, epoch_rng};
pub use labels::{LabelMode, SummaryLabels};
pub use manifest::{DatasetManifest, Split, load_manifest};
pub use sdve::{read_embeddings, write_embeddings};
pub use synth::{SynthSpec, generate_synthetic, synthesize};
