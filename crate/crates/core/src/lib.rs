//! Portable benchmark suite for heterogeneous-computing workloads.
//!
//! The suite is organized in levels, following the usual tiering for this
//! kind of workload collection:
//!
//! * level 0 — microbenchmarks for raw hardware characteristics (copy
//!   bandwidth, memory-hierarchy bandwidth, peak floating-point throughput),
//! * level 1 — basic parallel algorithms (GUPS, BFS, GEMM, Pathfinder, Sort),
//! * level 2 — application kernels (K-means, LavaMD, Mandelbrot,
//!   Needleman-Wunsch, SRAD, Where, DWT2D) and DNN layer kernels with both
//!   forward and backward passes.
//!
//! Every benchmark runs under one [`harness`]: preset or user-defined problem
//! sizes, seeded deterministic inputs, repeated timed passes, oracle-backed
//! verification, and structured result records ([`report`]).

pub mod dnn;
pub mod error;
pub mod harness;
pub mod level0;
pub mod level1;
pub mod level2;
pub mod parallel;
pub mod params;
pub mod plot;
pub mod real;
pub mod report;
pub mod rng;
pub mod stats;
pub mod suite;
pub mod util;

pub use error::{Error, Result};
pub use harness::{Registry, RunConfig};
pub use report::ResultRecord;
