//! Fixed spatial-filter toolkit for small convolutional networks.
//!
//! The crate is organized around a pipeline: generate fixed spatial filter
//! banks ([`filterbank`]), install them into a network graph ([`netgraph`]),
//! train the remaining weights with a minimal differentiable engine
//! ([`engine`]), explain the spatial layers as energy spectra over an
//! orthonormal basis ([`explainsteer`]), and remove the channels the
//! saliency scores mark as unnecessary ([`channelprune`]).

pub mod channelprune;
pub mod engine;
pub mod explainsteer;
pub mod filterbank;
pub mod netgraph;
pub mod numerics;
