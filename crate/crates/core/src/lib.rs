//! Flow-based spectral clustering for directed graphs, built entirely in
//! real arithmetic around the skew-symmetric net-flow matrix K = M - M^T.
//!
//! The crate provides:
//! - sparse digraph loading (TSV/Pajek) and the K construction with
//!   random-walk and symmetric degree normalizations ([`graph`]);
//! - an iterative truncated SVD, the rotation-block (real Schur) structure
//!   of skew matrices, and dense fallbacks ([`linalg`]);
//! - seven clustering pipelines — Skew-F/R/S, the distance-equivalent Herm
//!   embedding and its dense projector baseline, DD-Sym, SVD-M, and BCS
//!   ([`algorithms`]);
//! - imbalance metrics (trade flow, cut imbalance, their top-c sums), ARI,
//!   and an exact two-cluster trade-flow oracle ([`metrics`]);
//! - a directed stochastic block model generator with circulant, DAG, and
//!   complete meta-graph orientation patterns ([`dsbm`]);
//! - experiment runners for sweeps, timing tables, and single-graph
//!   reports ([`bench`]).

pub mod algorithms;
pub mod bench;
pub mod dsbm;
pub mod error;
pub mod graph;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod sparse;

pub use algorithms::{ClusterSpec, Method, TimedPartition};
pub use error::{Error, Result};
pub use graph::{Digraph, NormTag, SkewMatrix};
pub use kmeans::Partition;
