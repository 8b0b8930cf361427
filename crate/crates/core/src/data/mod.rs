//! Dataset directories, the synthetic generator and the CUB reader.

pub mod cub;
pub mod dataset;
pub mod netpbm;
pub mod synth;

pub use dataset::{load_dataset, AttributeMatrix, Dataset, Sample, Split};
pub use synth::{synth_generate, SynthSpec};
