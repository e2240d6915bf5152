//! Command-line driver and artifact plumbing around `nepv-core`: problem
//! generators for the three experiment families, Matrix Market persistence,
//! JSON/CSV reports, and SVG convergence plots.

pub mod bundle;
pub mod generators;
pub mod plot;
pub mod report;
