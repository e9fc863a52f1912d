//! Command-line front end for the zero-location and probe-dynamics
//! library: parses experiment configs and emits deterministic,
//! plot-ready data files.

pub mod commands;
pub mod config;
pub mod emit;
