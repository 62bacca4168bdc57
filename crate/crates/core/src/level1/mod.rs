//! Level 1: basic parallel algorithms.

pub mod bench;
pub mod bfs;
pub mod gemm;
pub mod gups;
pub mod pathfinder;
pub mod sort;

pub use bfs::{bfs, bfs_sequential, CsrGraph, UNREACHABLE};
pub use gemm::{gemm, Matrix};
pub use gups::{apply_updates, init_table, replay_sequential};
pub use pathfinder::{pathfinder, pathfinder_sequential, GridCostMap};
pub use sort::{radix_sort, KeyValueArray};
