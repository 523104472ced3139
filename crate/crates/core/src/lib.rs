//! Speech condition synthesis, discrete-unit quantization and span-level
//! evaluation for spoken question answering experiments.

pub mod audio;
pub mod prosody;
pub mod condition;
pub mod synth;
pub mod units;
pub mod eval;
pub mod harness;
