//! Structure-level segmentation of 2D likelihood maps.
//!
//! A likelihood map is turned into a discrete Morse complex whose ridge
//! branches carry a persistence value. Thresholding the persistence yields a
//! one-parameter family of skeletons; a Gaussian over the threshold turns that
//! family into a distribution over structure-preserving segmentations, which
//! in turn gives per-branch probabilities, uncertainty maps and an ordering for
//! branch-by-branch proofreading.

pub mod components;
pub mod cubical;
pub mod error;
pub mod family;
pub mod metrics;
pub mod morse;
pub mod pipeline;
pub mod prob;
pub mod proofread;
pub mod raster;
pub mod segment;
pub mod synth;
pub mod watershed;

pub use error::{Error, Result};
pub use family::{Skeleton, SkeletonFamily};
pub use morse::MorseBranch;

pub use prob::ThresholdDistribution;
pub use raster::{BinaryMask2D, ScalarField2D};
