//! Deterministic top-down tree transducers with regular look-ahead (dtlas).
//!
//! The crate provides ranked trees with Dewey addressing and the prefix
//! lattice (`trees`), the transducer model and its exact semantics
//! (`transducer`), structural class checks (`classify`), normal forms
//! (`normalize`), a brute-force difference oracle with link/origin tracking
//! (`diffs`), closed-form height bounds and the output-branch dependency
//! graph (`bounds`), and the decision procedure that determines whether a
//! total transducer is equivalent to one without look-ahead, constructing it
//! when it exists (`removal`). The `syntax` module implements the transducer
//! file format used by the CLI.
//!
//! All values are immutable after construction and operations are pure, so
//! everything can be shared freely across threads.

pub mod bounds;
pub mod classify;
pub mod diffs;
pub mod gen;
pub mod normalize;
pub mod removal;
pub mod syntax;
pub mod transducer;
pub mod trees;

mod scc;

pub use transducer::Dtla;
pub use trees::{Branch, Context, Name, NodeAddress, Tree};

use thiserror::Error;

/// Errors shared across the crate. Operations whose contract says a missing
/// result is an ordinary value (evaluation, bounds that do not apply) return
/// `Option` or a dedicated enum instead.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid address {0} in tree")]
    InvalidAddress(String),
    #[error("arity mismatch: pattern has {holes} holes but {parts} parts were supplied")]
    ArityMismatch { holes: usize, parts: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("replacement keys overlap: one key is a proper subtree of another")]
    OverlappingKeys,
    #[error("no image for matched subtree {0}")]
    UndefinedImage(String),
    #[error("no look-ahead map entry for state {0}")]
    MissingRho(String),
    #[error("transducer is not total")]
    NotTotal,
    #[error("context budget must be at least 1")]
    BudgetZero,
    #[error("node {0} is not in the output tree")]
    NodeNotInOutput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("normalization failed to terminate within its certified step budget")]
    NonTermination,
}

pub type Result<T> = std::result::Result<T, Error>;
