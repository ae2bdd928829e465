//! Exact conversion of linear time-invariant systems into dynamic neural
//! networks (DyNNs) made of first- and second-order neurons.
//!
//! The pipeline runs in three stages:
//! [`preprocess::preprocess_lti`] brings the state matrix into block-diagonal
//! real Schur form, [`dynn::build_dynn`] maps every diagonal block to a layer
//! of chained neurons plus an output map, and [`simulate`] evaluates the
//! network neuron by neuron. [`oracle`] provides independent references.

pub mod dynn;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod preprocess;
pub mod simulate;
pub mod spectra;
pub mod systems;

pub use linalg::Matrix;
pub use model::StateSpace;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Cluster(#[from] spectra::ClusterError),
    #[error(transparent)]
    Integration(#[from] simulate::IntegrationError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("block is not in the convertible class: {0}")]
    NotConvertible(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by the mathematics of the input rather than
    /// by malformed data.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Linalg(_) | Error::Cluster(_) | Error::NotConvertible(_))
    }
}
