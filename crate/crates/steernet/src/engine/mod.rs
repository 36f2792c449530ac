//! Minimal reverse-mode differentiable execution of a [`NetworkGraph`]:
//! forward pass, per-layer analytic backward, the two task losses, Adam,
//! and a training loop that never touches fixed parameters.
//!
//! [`NetworkGraph`]: crate::netgraph::NetworkGraph

mod exec;
pub mod gradcheck;
mod loss;
mod ops;
mod optim;
mod train;

pub use exec::{backward, forward, BackwardOpts, Forward, GradientTape, Mode};
pub use loss::{focal_multilabel_bce, pixelwise_bce, FocalCfg, LossError};
pub use optim::Adam;
pub use train::{evaluate, train, Batch, EpochMetrics, TaskKind, TrainCfg};

use crate::netgraph::GraphError;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    Graph(GraphError),
    ShapeMismatch { node: String, detail: String },
    MissingActivation { wire: String },
    Divergence { epoch: usize },
    Loss(LossError),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Graph(e) => write!(f, "{e}"),
            Self::ShapeMismatch { node, detail } => {
                write!(f, "shape mismatch at '{node}': {detail}")
            }
            Self::MissingActivation { wire } => write!(f, "no activation for wire '{wire}'"),
            Self::Divergence { epoch } => {
                write!(f, "training diverged (NaN loss) at epoch {epoch}")
            }
            Self::Loss(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EngineError {}

impl From<GraphError> for EngineError {
    fn from(e: GraphError) -> Self {
        EngineError::Graph(e)
    }
}

impl From<LossError> for EngineError {
    fn from(e: LossError) -> Self {
        EngineError::Loss(e)
    }
}
