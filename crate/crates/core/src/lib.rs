//! Halo-controlled smoothed local histogram equalization.
//!
//! The crate is `no_std` with `alloc`. Enable the `parallel` feature (which
//! implies `std`) to run the reference equalizer row-parallel with rayon; the
//! results are bit-identical to the sequential path.
//!
//! Pipeline overview:
//!
//! 1. [`filter::local_mean`] computes the weighted local mean over the patch
//!    selected by a [`filter::SpatialKernel`].
//! 2. [`sigma::build_sigma_field`] classifies every pixel as light or dark
//!    relative to that mean and assigns its tonal kernel width.
//! 3. [`engine::equalize_reference`] / [`engine::equalize_binned`] evaluate
//!    the smoothed local CDF at each pixel's own level.
//! 4. [`hvs`] measures halos on step edges and models perceived luminance
//!    with a center-surround operator.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod engine;
mod error;
pub mod filter;
pub mod hvs;
mod math;
pub mod plane;
pub mod scale;
pub mod sigma;
pub mod tonal;

pub use error::{Error, Result};
pub use filter::{LocalMeanField, SpatialKernel};
pub use plane::{ColorImage, Image, ImagePlane};
pub use scale::IntensityScale;
pub use sigma::{GroupPolicy, LuminanceGroup, SigmaField, SigmaParams};
