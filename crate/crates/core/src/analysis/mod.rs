//! Diagnostics on how much class and domain information lives in the
//! amplitude and the phase of an image.

mod edges;
mod features;
mod protocol;
mod shrinkage;

pub use edges::{
    bundled_edge_images, cosine_similarity, edge_laplacian, edge_similarity_study, edge_sobel, reconstructions,
    rectify, EdgeMap, EdgeRow, EdgeStudy,
};
pub use features::{amplitude_features, phase_features, phase_randomized, LinearProbe, ProbeConfig, Standardizer};
pub use protocol::{phase_only_protocol, ProtocolReport, Representation};
pub use shrinkage::{shrinkage_experiment, ShrinkageConfig, ShrinkageReport};
