//! Graph-filter neural networks built on edge-variant recursions.
//!
//! The crate provides:
//! - sparse graph machinery, a Jacobi eigensolver, and graph Fourier
//!   transforms ([`graph`], [`eigen`]);
//! - five trainable graph-filter families with hand-derived gradients
//!   ([`filters`]);
//! - layered models, an ADAM trainer, and evaluation loops ([`nn`]);
//! - the stochastic-block-model source-localization benchmark
//!   ([`experiments`]) and the word-adjacency-network authorship pipeline
//!   ([`wan`]);
//! - JSON parameter archives and CSV emitters ([`archive`], [`io`]).

pub mod archive;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod gradcheck;
pub mod graph;
pub mod io;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod sparse;
pub mod svd;
pub mod testing;
pub mod wan;

pub use eigen::{eigendecompose, Spectrum};
pub use error::{Error, Result};
pub use graph::{build_sbm, Graph};
pub use signal::GraphSignal;
pub use sparse::{SparseMatrix, SparsityPattern};
