//! Adaptive design-of-experiments engine.
//!
//! Classical screening and central composite designs with least-squares
//! response surfaces sit next to a Gaussian-process Bayesian optimizer,
//! desirability optimization and NSGA-II. [`engine`] ties the surrogate and
//! acquisition pieces into a seeded, human-in-the-loop campaign, and
//! [`plant`] provides a simulated injection-moulding process to run it against.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod dataset;
pub mod designgen;
pub mod domain;
pub mod engine;
pub mod error;
pub mod gp;
pub mod linmodel;
pub mod moo;
pub mod optim;
pub mod plant;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use dataset::Dataset;
pub use domain::{DesignSpace, Factor, Goal, Objective, Provenance, Trial, TrialStatus};
pub use error::{Error, Result};
