//! Saliency-driven channel pruning: zero the least salient spatial kernels
//! globally, remove fully-zero input/output channels from spatial
//! convolutions, repair every neighboring layer by graph traversal, and
//! re-initialize surviving zeros (FillZero).

mod equiv;
mod fillzero;
mod prune;
mod zero;

pub use equiv::prune_equivalence_check;
pub use fillzero::{fill_zero, FillZeroCfg};
pub use prune::{
    analyze_prune, mask_from_weights, prune, prune_zero_channels, repair_graph, PrunePlan,
};
pub use zero::zero_least_salient;

use crate::numerics::Tensor;
use std::collections::HashMap;
use std::fmt;

/// Boolean (outChannels x inChannelsPerGroup) grid per spatial layer;
/// `true` marks a fully zeroed kernel.
#[derive(Debug, Clone, Default)]
pub struct ZeroMask {
    pub layers: HashMap<String, MaskGrid>,
}

#[derive(Debug, Clone)]
pub struct MaskGrid {
    pub out: usize,
    pub ipg: usize,
    pub cells: Vec<bool>,
}

impl MaskGrid {
    pub fn get(&self, o: usize, i: usize) -> bool {
        self.cells[o * self.ipg + i]
    }

    pub fn row_all(&self, o: usize) -> bool {
        (0..self.ipg).all(|i| self.get(o, i))
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Removed channels per spatial layer plus the zeroed-vs-pruned accounting.
#[derive(Debug, Clone)]
pub struct PruneReport {
    pub fraction_spatial_zeroed: f64,
    pub fraction_params_pruned: f64,
    pub per_layer: Vec<LayerRemoval>,
    /// Non-spatial nodes whose parameters were sliced during repair.
    pub affected: Vec<String>,
    pub params_before: usize,
    pub params_after: usize,
    /// Channels kept despite being removal candidates, e.g. non-unanimous
    /// add inputs or producers that also feed un-prunable consumers.
    pub retained: Vec<String>,
}

impl PruneReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "spatially_zeroed {:.4}\nparams_pruned {:.4}\nparams_before {}\nparams_after {}\n",
            self.fraction_spatial_zeroed,
            self.fraction_params_pruned,
            self.params_before,
            self.params_after
        ));
        for l in &self.per_layer {
            s.push_str(&format!(
                "layer {} removed_out {:?} removed_in {:?}\n",
                l.layer, l.removed_out, l.removed_in
            ));
        }
        for a in &self.affected {
            s.push_str(&format!("affected {a}\n"));
        }
        for r in &self.retained {
            s.push_str(&format!("retained {r}\n"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct LayerRemoval {
    pub layer: String,
    pub removed_out: Vec<usize>,
    pub removed_in: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PruneError {
    BadFraction { fraction: f64 },
    MissingScores { layer: String },
    MaskMismatch { layer: String },
    Graph(crate::netgraph::GraphError),
}

impl fmt::Display for PruneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadFraction { fraction } => {
                write!(f, "fraction {fraction} outside [0, 1]")
            }
            Self::MissingScores { layer } => {
                write!(f, "saliency scores missing for layer '{layer}'")
            }
            Self::MaskMismatch { layer } => {
                write!(f, "zero mask does not match layer '{layer}'")
            }
            Self::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PruneError {}

impl From<crate::netgraph::GraphError> for PruneError {
    fn from(e: crate::netgraph::GraphError) -> Self {
        PruneError::Graph(e)
    }
}

pub(crate) fn kernel_is_zero(data: &[f32]) -> bool {
    data.iter().all(|&v| v == 0.0)
}

pub(crate) fn kernel_slice(t: &Tensor, o: usize, i: usize, m: usize, ipg: usize) -> &[f32] {
    &t.data()[(o * ipg + i) * m..][..m]
}
