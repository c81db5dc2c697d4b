//! Limited-angle fan-beam CT reconstruction with data-consistency constraints.
//!
//! The pipeline: a prior image (from a file or a built-in generator) seeds a
//! SART solver whose residuals pass through soft-threshold dead zones. Views
//! inside the measured arc are fitted to the measurements within `e1`;
//! views outside it are held within `e2` of the prior's reprojection.
//! Reweighted total variation descent runs between SART sweeps.
//!
//! Heavy kernels run on rayon when the `parallel` feature (default) is on,
//! with bit-identical results in either mode; see [`exec`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dcar;
pub mod error;
pub mod exec;
pub mod fbp;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod prior;
pub mod projector;
pub mod simulate;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{make_short_scan_geometry, partition_angles, AngularPartition, FanBeamGeometry};
pub use grid::{GridSpec, HuScale, ImageGrid};
pub use projector::Sinogram;
