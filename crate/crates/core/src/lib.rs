//! Smooth, compactly supported wave packet frames for admissible tilings of
//! frequency space.
//!
//! The crate is organised around the pipeline
//! window → tiling → frame certificate → transform:
//!
//! * [`tile`]: tiles, tile sets, the shape metric and overlap counting.
//! * [`tiling`]: concrete tiling generators and the admissibility validator.
//! * [`window`]: the Ingham bump `φ`, the multiplier approximant `η` and
//!   composite windows.
//! * [`frame_cert`]: measured spectral sums, the tail functional and
//!   certified frame bounds.
//! * [`transform`]: discrete analysis/synthesis on a periodic grid and
//!   frame-operator inversion.
//! * [`pipeline`]: configuration-driven orchestration and report export.

pub mod error;
pub mod frame_cert;
pub mod pipeline;
pub mod quad;
pub mod tile;
pub mod tiling;
pub mod transform;
pub mod window;

pub use error::{Error, Result};
pub use tile::{Tile, TileNormalForm};
