//! Self-organizing maps for data known only through pairwise dissimilarities.
//!
//! The crate provides the online relational SOM together with the batch
//! relational, classical Euclidean online and batch median variants, builders
//! for dissimilarity matrices (vectors, k-NN geodesics, graph hop counts,
//! Kimura two-parameter DNA distances), map-quality metrics, SVG plots and a
//! small experiment driver.

pub mod bench;
pub mod dissimilarity;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod experiment;
pub mod generators;
pub mod io;
pub mod plot;
pub mod som;
pub mod topology;

pub use error::{Error, Result};
