//! Batch front end for the tuberculosis optimal-control solver. The
//! binary reads a flat JSON configuration, solves the requested scenario
//! cells through `tb-optctl-core`, and writes deterministic CSV/JSON
//! result tables.

pub mod config;
pub mod output;
pub mod run;
