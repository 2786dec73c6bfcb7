//! IO, file formats, trial running and benchmarking for the sitting toolkit.

pub mod formats;
pub mod trial;

pub use sitkit_core as core;
