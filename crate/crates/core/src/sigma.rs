//! Luminance-group classification and the per-pixel tonal width map.
//!
//! A pixel at or above its local mean belongs to the light group and gets the
//! fixed small width `sigma_min`. A pixel below its local mean belongs to the
//! dark group and gets a width that grows linearly with its relative depth
//! below the mean:
//!
//! ```text
//! sigma_light = sigma_min
//! sigma_dark  = (sigma_max - sigma_min) * (l_mean - p_in) / l_mean + sigma_min
//! ```
//!
//! The two branches meet at `p_in = l_mean`. `l_mean = 0` never reaches the
//! dark branch because every sample is `>= 0`.

use alloc::vec::Vec;

use crate::filter::LocalMeanField;
use crate::plane::ImagePlane;
use crate::scale::MAX_LEVEL;
use crate::{Error, Result};

/// Which side of the local mean a pixel falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LuminanceGroup {
    Light,
    Dark,
}

/// Which group receives the enlarged width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GroupPolicy {
    /// Dark group widens, light group stays at `sigma_min`.
    #[default]
    Paper,
    /// Mirror image: light group widens relative to the headroom above the
    /// mean, dark group stays at `sigma_min`.
    Swapped,
}

impl GroupPolicy {
    pub fn name(self) -> &'static str {
        match self {
            GroupPolicy::Paper => "paper",
            GroupPolicy::Swapped => "swapped",
        }
    }
}

/// Tonal width range and group policy. Widths are in level units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaParams {
    sigma_min: f64,
    sigma_max: f64,
    policy: GroupPolicy,
}

impl Default for SigmaParams {
    fn default() -> Self {
        SigmaParams {
            sigma_min: 64.0,
            sigma_max: 256.0,
            policy: GroupPolicy::Paper,
        }
    }
}

impl SigmaParams {
    /// Requires `0 < sigma_min <= sigma_max <= 1023`.
    pub fn new(sigma_min: f64, sigma_max: f64, policy: GroupPolicy) -> Result<Self> {
        if !(sigma_min > 0.0) || !sigma_min.is_finite() {
            return Err(Error::param("sigma_min", "must be positive"));
        }
        if !(sigma_max >= sigma_min) {
            return Err(Error::param("sigma_max", "must be at least sigma_min"));
        }
        if sigma_max > MAX_LEVEL {
            return Err(Error::param("sigma_max", "must not exceed 1023 levels"));
        }
        Ok(SigmaParams {
            sigma_min,
            sigma_max,
            policy,
        })
    }

    #[inline]
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    #[inline]
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    #[inline]
    pub fn policy(&self) -> GroupPolicy {
        self.policy
    }
}

/// Light iff `p_in >= l_mean`; ties go to the light group.
#[inline]
pub fn classify_group(p_in: f64, l_mean: f64) -> LuminanceGroup {
    if p_in >= l_mean {
        LuminanceGroup::Light
    } else {
        LuminanceGroup::Dark
    }
}

/// Tonal width for one pixel, in level units.
///
/// `p_in` and `l_mean` are unit-interval samples.
#[inline]
pub fn sigma_at(p_in: f64, l_mean: f64, params: &SigmaParams) -> f64 {
    let span = params.sigma_max - params.sigma_min;
    let depth = match params.policy {
        GroupPolicy::Paper => match classify_group(p_in, l_mean) {
            LuminanceGroup::Light => return params.sigma_min,
            // l_mean > p_in >= 0 here
            LuminanceGroup::Dark => (l_mean - p_in) / l_mean,
        },
        GroupPolicy::Swapped => {
            // Strictly above the mean implies l_mean < 1.
            if p_in <= l_mean {
                return params.sigma_min;
            }
            (p_in - l_mean) / (1.0 - l_mean)
        }
    };
    (span * depth + params.sigma_min).clamp(params.sigma_min, params.sigma_max)
}

/// Per-pixel tonal width in level units.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SigmaField {
    /// The same width at every pixel.
    pub fn uniform(width: usize, height: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", "must be positive"));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(SigmaField {
            width,
            height,
            values: alloc::vec![sigma; width * height],
        })
    }

    /// Wraps explicit per-pixel widths; every value must be positive.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(Error::SampleCount {
                expected: width * height,
                found: values.len(),
            });
        }
        if values.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::param("sigma", "must be positive"));
        }
        Ok(SigmaField {
            width,
            height,
            values,
        })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Smallest and largest width in the field.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)))
    }

    pub(crate) fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() == dims {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dims,
                found: self.dims(),
            })
        }
    }
}

/// Element-wise [`sigma_at`] over an image and its local mean.
pub fn build_sigma_field(plane: &ImagePlane, mean: &LocalMeanField, params: &SigmaParams) -> Result<SigmaField> {
    plane.ensure_same_dims(mean.plane().dims())?;
    let values = plane
        .samples()
        .iter()
        .zip(mean.plane().samples())
        .map(|(&p, &m)| sigma_at(p, m, params))
        .collect();
    let (width, height) = plane.dims();
    Ok(SigmaField {
        width,
        height,
        values,
    })
}
