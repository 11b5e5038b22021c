//! Convex aggregation of review latent vectors for opinion summarization.
//!
//! A decoded summary of several reviews is usually produced by simply averaging
//! the reviews' latent vectors, which shrinks the L2-norm of the summary vector
//! and yields short, generic output. This crate searches over non-empty subsets
//! of the input reviews (exactly, or with greedy/beam search) for the subset
//! average whose decoded text maximizes word overlap with the inputs, and ships
//! the baseline aggregators (simple average, inverse-variance weighting,
//! re-scaling, extractive centrality, random selection), ROUGE scoring, and
//! latent-space diagnostics to measure the shrinkage effect.
//!
//! A deterministic toy autoencoder is built in so the whole pipeline runs
//! without any trained model; externally produced latent vectors can be
//! supplied as JSONL instead.

pub mod autoencoder;
pub mod cli;
pub mod coopsearch;
pub mod diagnostics;
pub mod error;
pub mod latentspace;
pub mod textmetrics;

pub use error::{Error, Result};
