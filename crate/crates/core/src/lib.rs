//! Automatic evaluation of open-domain dialog replies.
//!
//! A reply is scored from two directions. The *referenced* score compares it
//! with the groundtruth reply through max/min pooled word embeddings. The
//! *unreferenced* score is a learned query/reply relatedness network trained
//! by negative sampling. Both are min-max normalized and blended. Word-overlap
//! baselines and a correlation harness against human annotations are included
//! for comparison.

pub mod analysis;
pub mod baselines;
pub mod blending;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod linalg;
pub mod referenced;
pub mod unreferenced;

pub use error::{Result, RuberError};
