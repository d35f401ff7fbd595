//! Aggregated PQ flexibility regions of radial distribution networks.
//!
//! The pipeline linearizes the network around its operating point with a single
//! backward/forward sweep, assembles a polytope over DER deviations and the PCC
//! flow change, and projects it onto the PQ-plane by Fourier-Motzkin
//! elimination.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lp;
pub mod network;
pub mod linearization;
mod par;
pub mod polytope;
pub mod uncertainty;
pub mod methods;
pub mod io;

pub use error::{Error, Result};
pub use par::is_parallel;
