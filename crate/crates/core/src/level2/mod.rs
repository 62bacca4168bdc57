//! Level 2: real-world application kernels.

pub mod bench;
pub mod dwt;
pub mod kmeans;
pub mod lavamd;
pub mod mandelbrot;
pub mod nw;
pub mod srad;
pub mod where_filter;

pub use dwt::{dwt53_forward, dwt53_inverse, dwt97_forward, dwt97_inverse};
pub use kmeans::{kmeans, kmeans_reference, seeded_centers, KmeansResult, PointSet};
pub use lavamd::{lavamd, lavamd_all_pairs, Interactions, ParticleSpace};
pub use mandelbrot::{
    escape_dwell, mandelbrot_escape, mandelbrot_mariani_silver, DwellImage, View, INTERIOR,
};
pub use nw::{needleman_wunsch, needleman_wunsch_sequential, AlignOp, SequencePair};
pub use srad::{srad, srad_reference, Image2D};
pub use where_filter::{where_filter, where_filter_sequential, CmpOp, Condition, RecordTable};
