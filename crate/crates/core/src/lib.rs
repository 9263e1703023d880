//! Planar camera calibration and radial undistortion.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: pinhole projection, intrinsic matrix, Rodrigues rotations.
//! - [`distortion`]: the three radial models and their inverses.
//! - [`cubic`]: closed-form cubic root extraction used by the
//!   `1 + k1 r + k2 r²` model's analytical inverse.
//! - [`calibration`]: homography-based linear initialization, nonlinear
//!   refinement of the reprojection objective, and model comparison.
//! - [`localizer`]: ground-plane line alignment for a calibrated camera.
//! - [`cli`]: file formats, the synthetic scene generator and the commands
//!   behind the `radcal` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod calibration;
pub mod cli;
pub mod cubic;
pub mod distortion;
pub mod error;
pub mod geometry;
pub mod localizer;

pub use calibration::{
    CalibrationResult, Correspondence, CorrespondenceSet, OptimizerOptions, View,
};
pub use distortion::{DistortionModel, DistortionSpec, WorkingDomain};
pub use error::{Error, Result};
pub use geometry::{
    IntrinsicMatrix, NormalizedPoint, PixelPoint, ViewExtrinsics, WorldPoint,
};
