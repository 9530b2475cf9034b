//! Sparse inference of topic proportions with the Frank-Wolfe algorithm.
//!
//! Given fixed topics, the topic proportion of a document is found by
//! maximizing a concave objective over the unit simplex. Frank-Wolfe moves
//! toward one vertex per iteration, so after `l` iterations the proportion
//! has at most `l + 1` nonzero entries.
//!
//! The crate is organized as:
//!
//! - [`model`]: documents, corpora, topics, proportions and solver settings.
//! - [`objective`]: likelihood, Dirichlet-MAP and logistic-normal MAP objectives.
//! - [`solver`]: Frank-Wolfe over the simplex and over the capped simplex.
//! - [`baselines`]: folding-in and variational Bayes for comparison.
//! - [`learning`]: an EM trainer and a synthetic corpus generator.
//! - [`eval`]: perplexity, sparsity, method comparison and iteration-cap sweeps.
//! - [`io`]: UCI bag-of-words corpora, model files and CSV outputs.
//! - [`cli`]: the `fwtopic` command line.
//!
//! See the `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod learning;
pub mod model;
pub mod objective;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    simplex_barycenter, validate_topic_matrix, Corpus, Document, InferenceReport, SolverConfig, Start,
    TopicMatrix, TopicProportion, Vocabulary,
};
pub use objective::{Objective, ObjectiveKind};
pub use solver::{fw_solve, fw_solve_capped, Trace};
