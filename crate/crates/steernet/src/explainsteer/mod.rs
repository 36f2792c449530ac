//! Energy-spectrum explanations of spatial convolution layers: the full
//! per-basis spectrum e(d), its back-projection e(1) onto 1-D factor
//! frequencies, the per-frequency reduction e(0) for square kernels, and
//! the gradient-times-weight saliency scores that can weight them.

mod report;
mod saliency;
mod spectrum;

pub use report::{e0_csv, e1_csv, heatmap_svg, spectra_csv, COLORMAP_ANCHORS};
pub use saliency::{saliency, SaliencyCfg, SaliencyScores};
pub use spectrum::{
    backproject_e1, explain_network, explain_network_with_threads, global_spectrum, reduce_e0,
    spectrum_ed, EnergySpectrum, WeightMode,
};

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ExplainError {
    NegativeWeight { index: usize },
    SizeMismatch { detail: String },
    NonSquareKernel { h: usize, w: usize },
    NoSpatialLayers,
    MixedKernelSizes,
}

impl fmt::Display for ExplainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegativeWeight { index } => {
                write!(f, "saliency weight {index} is negative")
            }
            Self::SizeMismatch { detail } => write!(f, "size mismatch: {detail}"),
            Self::NonSquareKernel { h, w } => {
                write!(f, "e0 reduction needs square kernels, got {h}x{w}")
            }
            Self::NoSpatialLayers => write!(f, "network has no spatial layers"),
            Self::MixedKernelSizes => {
                write!(f, "heatmap groups must share one kernel size")
            }
        }
    }
}

impl std::error::Error for ExplainError {}
