//! Directed-graph intermediate representation of convolutional networks,
//! with fixed/learned flags on every parameter tensor, reference desk-scale
//! architectures, and a bit-exact two-file serialization (`.nfg` text
//! descriptor plus `.nfw` little-endian float blob).

mod build;
mod graph;
mod serial;

pub use build::{build_tiny_densenet, build_tiny_resnet, build_unetd};
pub use graph::{
    ActKind, GraphError, InitOptions, LayerKind, LayerNode, NetworkGraph, ParamTensor,
};
pub use serial::{deserialize, serialize, SerialError};
