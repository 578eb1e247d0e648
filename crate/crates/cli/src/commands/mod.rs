//! The pipeline commands, one module per subcommand, plus shared plumbing.

pub mod common;
pub mod eval;
pub mod experiment;
pub mod fuse;
pub mod partition;
pub mod scores;
pub mod spectrogram;
pub mod synth;
pub mod train;
