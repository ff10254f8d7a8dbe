//! Planning core: an open-world logic layer, an HTN model with forward
//! decomposition, best-first search driven by arbitrary node evaluators, and the
//! service composition model that is translated into HTN problems.

pub mod composition;
pub mod domain_file;
pub mod error;
pub mod htn;
pub mod logic;
pub mod search;
pub mod sexpr;

pub use error::ParseError;
