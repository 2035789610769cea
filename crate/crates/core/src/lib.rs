//! Symbolic prospect-theoretic modeling of binary risky choice.
//!
//! The crate covers the whole experimental pipeline:
//!
//! - [`scenario`]: synthetic safe-vs-risky choice data with a logistic
//!   data-generating process, plus CSV/metadata persistence.
//! - [`features`]: symbolic and raw feature extraction, and effect-size
//!   screening with Cramér's V and η².
//! - [`glm`]: Newton/IRLS maximum-likelihood logistic regression with
//!   optional ridge penalty and Fisher-information covariance.
//! - [`cpt`]: the parametric CPT baseline (power value function, Prelec
//!   weighting) fitted by multi-restart simplex search.
//! - [`eval`]: train/test splitting, accuracy and rank-based AUC.
//! - [`experiment`]: end-to-end orchestration and artifact emission used by
//!   the `symbolic-pt` binary.

pub mod cpt;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod glm;
pub mod scenario;

pub use error::{Error, Result};
