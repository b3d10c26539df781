//! Sweeps, file formats and the `medqsl` command line on top of
//! `medqsl-core`.

pub mod cli;
pub mod io;
pub mod manifest;
pub mod sweep;
