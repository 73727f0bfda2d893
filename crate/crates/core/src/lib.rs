//! Clustering of daily behavioral time series by shape and complexity.
//!
//! The crate covers the whole analysis path: telemetry ingestion and cohort
//! filtering ([`cohort`]), representation transforms ([`represent`]),
//! dissimilarity measures ([`dissim`]), Ward hierarchical clustering
//! ([`hcluster`]), validity indices ([`validate`]), seeded synthetic benchmarks
//! ([`synthgen`]) and SVG reports ([`viz`]). The [`pipeline`] module wires them
//! together for the `tsclust` command-line tool.

pub mod cohort;
pub mod dissim;
pub mod error;
pub mod hcluster;
pub mod matrix;
pub mod partition;
pub mod pipeline;
pub mod represent;
pub mod series;
pub mod synthgen;
pub mod validate;
pub mod viz;

pub use error::{Error, Result};
pub use hcluster::{agglomerate_ward, cut, Dendrogram, Merge, Node};
pub use matrix::{DissimilarityMatrix, MeasureTag};
pub use partition::Partition;
pub use series::{SeriesSet, SubjectId, TimeSeries, VariableKind};
