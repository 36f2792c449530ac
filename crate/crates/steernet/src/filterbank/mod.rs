//! Orthonormal DCT-II basis construction and fixed spatial-filter
//! generators: Ones, DCT2, Unchanged (random / guide), GHaar, Psine and
//! GuidedSteer.

mod basis;
mod generate;

pub use basis::Basis;
pub use generate::{
    dct2_filters, ghaar_filters, ghaar_kernel_from_terms, guided_steer_filters, ones_filters,
    psine_filters, psine_kernel_from_terms, psine_powers, unchanged_guide, unchanged_random,
    ColumnDistribution, FilterSpec, GhaarStyle, GuidedSteerCfg, Method,
};

use crate::numerics::NumericsError;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum FilterError {
    KernelMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    KernelTooSmall {
        m: usize,
    },
    GuideTooSmall {
        rows: usize,
    },
    MissingGuide,
    Numerics(NumericsError),
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::KernelMismatch { expected, got } => write!(
                f,
                "kernel shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Self::KernelTooSmall { m } => write!(f, "kernel size {m} too small, need m >= 2"),
            Self::GuideTooSmall { rows } => {
                write!(f, "guide has {rows} kernels, need at least 2")
            }
            Self::MissingGuide => write!(f, "method requires guide kernels"),
            Self::Numerics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FilterError {}

impl From<NumericsError> for FilterError {
    fn from(e: NumericsError) -> Self {
        FilterError::Numerics(e)
    }
}
