//! Input parsing, the end-to-end pipeline and output artefacts.

pub mod emit;
pub mod run;
pub mod spec;
