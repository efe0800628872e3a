//! Signed two-space proximity model (S2-SPM) for signed protein–protein
//! interaction networks.
//!
//! Each protein gets two archetypal latent positions: closeness in the
//! positive space drives up-regulatory links, closeness in the negative space
//! drives down-regulatory links, and the signed link weight is modeled as a
//! Skellam variable whose two rates come from the two spaces.

pub mod consistency;
pub mod enrich;
pub mod error;
pub mod linkpred;
pub mod model;
pub mod sgraph;
pub mod skellam;
pub mod train;
pub mod viz;
mod special;

pub use error::{Error, Result};
