//! Pipeline composition case study: toy learners served by a GSM, the pipeline
//! domain, the loss objective and the end-to-end search driver.

pub mod conformance;
pub mod dataset;
pub mod domain;
pub mod learners;
pub mod mlsplan;
pub mod objective;

pub use dataset::{stratified_split, Dataset, Split, SplitSpec};
pub use domain::{pipeline_domain, Portfolio, PIPELINE_DOMAIN};
pub use mlsplan::{run, RunConfig, RunError, RunOutcome};
