//! Locally unimodal clustering.
//!
//! The pipeline overclusters a dataset into many small convex subclusters
//! ([`overcluster`]), tests neighbouring pairs of subclusters for joint unimodality
//! with the dip test ([`pairtest`], [`diptest`]) and merges unimodal pairs with a
//! lazily tested Kruskal traversal ([`forest`]). The trees of the resulting forest
//! are the final clusters and their count is the estimated number of clusters.

pub mod data;
pub mod diptest;
pub mod error;
pub mod eval;
pub mod forest;
pub mod overcluster;
pub mod pairtest;
pub mod pipeline;
pub mod seeding;
pub mod svg;

pub use error::{Error, Result};
