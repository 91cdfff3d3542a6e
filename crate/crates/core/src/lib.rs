//! Sliding-window low-rank denoising of hyperspectral cubes with a
//! closed-form per-voxel variance map.

pub mod cube;
pub mod error;
pub mod io;
pub mod lowrank;
pub mod noise;
pub mod pipeline;
pub mod stats;
pub mod uq;
pub mod window;

pub use cube::{Dims, HsiCube, VoxelIndex};
pub use error::{Error, Result};
pub use io::{read_cube, write_cube, Dtype};
pub use lowrank::{godec, truncated_svd, GodecOptions, GodecResult, LowRankFactors, SparseBudget};
pub use noise::{add_gaussian, add_impulse, synth_lowrank_cube, NoiseSpec};
pub use pipeline::{denoise, denoise_with_uq, PipelineConfig, Restoration, Solver, UqRestoration};
pub use uq::{aggregate_variance, leverage_map, patch_variance, CorrelationRule, LeverageMap};
pub use window::{enumerate_patches, PatchGrid, PatchOrigin, WindowConfig};
