//! Scenario runner for the `semiclass` library: configuration parsing,
//! pipelines that compare the kinetic, CGO, closed-form and split-step
//! solutions, and PGM/CSV/summary output.

pub mod config;
pub mod heatmap;
pub mod pipeline;
pub mod summary;
