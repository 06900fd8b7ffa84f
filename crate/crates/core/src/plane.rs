//! Raster types: single-channel luminance planes and RGB images.

use alloc::vec::Vec;

use crate::math;
use crate::scale::MAX_LEVEL;
use crate::{Error, Result};

/// Single-channel raster of unit-interval samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

fn check_dims(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    width
        .checked_mul(height)
        .ok_or(Error::InvalidDimensions { width, height })
}

fn check_unit(index: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::SampleOutOfRange { index, value })
    }
}

impl ImagePlane {
    /// Wraps a sample buffer after validating its size and range.
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        let expected = check_dims(width, height)?;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                expected,
                found: samples.len(),
            });
        }
        for (i, &s) in samples.iter().enumerate() {
            check_unit(i, s)?;
        }
        Ok(ImagePlane {
            width,
            height,
            samples,
        })
    }

    /// A plane filled with a single value.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        let n = check_dims(width, height)?;
        check_unit(0, value)?;
        Ok(ImagePlane {
            width,
            height,
            samples: alloc::vec![value; n],
        })
    }

    /// Builds a plane from `f(x, y)`; results are clamped into [0, 1].
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = check_dims(width, height)?;
        let mut samples = Vec::with_capacity(n);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Ok(ImagePlane {
            width,
            height,
            samples,
        })
    }

    /// Internal constructor for algorithm outputs that are in range by
    /// construction. NaNs would be a bug upstream.
    pub(crate) fn from_clamped(width: usize, height: usize, mut samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        for s in &mut samples {
            debug_assert!(!s.is_nan());
            *s = s.clamp(0.0, 1.0);
        }
        ImagePlane {
            width,
            height,
            samples,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Sample at `(x, y)`. Panics when out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.width && y < self.height);
        self.samples[y * self.width + x]
    }

    /// Sample at `(x, y)` in level units.
    #[inline]
    pub fn level(&self, x: usize, y: usize) -> f64 {
        self.get(x, y) * MAX_LEVEL
    }

    pub(crate) fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other,
            })
        }
    }

    /// Mirror left to right.
    pub fn flip_horizontal(&self) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len());
        for row in self.samples.chunks_exact(self.width) {
            samples.extend(row.iter().rev());
        }
        ImagePlane { samples, ..*self }
    }

    /// Mirror top to bottom.
    pub fn flip_vertical(&self) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len());
        for row in self.samples.chunks_exact(self.width).rev() {
            samples.extend_from_slice(row);
        }
        ImagePlane { samples, ..*self }
    }

    /// Mean of column `x` over all rows.
    pub fn column_mean(&self, x: usize) -> f64 {
        let sum: f64 = (0..self.height).map(|y| self.get(x, y)).sum();
        sum / self.height as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)))
    }
}

/// RGB raster of unit-interval channel values.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
    source_maxval: u16,
}

impl ColorImage {
    /// `source_maxval` records the depth the image was decoded from (255 or
    /// 65535); it is only used as the default depth when re-encoding.
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>, source_maxval: u16) -> Result<Self> {
        let expected = check_dims(width, height)?;
        if pixels.len() != expected {
            return Err(Error::SampleCount {
                expected,
                found: pixels.len(),
            });
        }
        for (i, px) in pixels.iter().enumerate() {
            for &c in px {
                check_unit(i, c)?;
            }
        }
        Ok(ColorImage {
            width,
            height,
            pixels,
            source_maxval,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn source_maxval(&self) -> u16 {
        self.source_maxval
    }
}

/// Either kind of raster handled by the tone mapper.
#[derive(Debug, Clone, PartialEq)]
pub enum Image {
    Gray(ImagePlane),
    Color(ColorImage),
}

impl Image {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Image::Gray(p) => p.dims(),
            Image::Color(c) => c.dims(),
        }
    }
}

/// Rec.709 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Rec.709 luminance of each pixel.
///
/// Evaluated as `G + wr*(R - G) + wb*(B - G)`, which equals the usual weighted
/// sum but is exact for gray pixels.
pub fn luminance_of(color: &ColorImage) -> ImagePlane {
    let [wr, _, wb] = LUMA_WEIGHTS;
    let samples = color
        .pixels
        .iter()
        .map(|&[r, g, b]| g + wr * (r - g) + wb * (b - g))
        .collect();
    ImagePlane::from_clamped(color.width, color.height, samples)
}

/// Transfers a new luminance onto a color image.
///
/// Each channel becomes `y_new * (c / y_old)^saturation`, clamped to [0, 1].
/// With `saturation = 1` this is a plain luminance-ratio gain; with
/// `saturation = 0` the output is gray at `y_new`. Pixels whose old luminance
/// is below one level carry no usable chroma and become gray at `y_new`.
pub fn reattach_chroma(
    color: &ColorImage,
    y_old: &ImagePlane,
    y_new: &ImagePlane,
    saturation: f64,
) -> Result<ColorImage> {
    y_old.ensure_same_dims(color.dims())?;
    y_new.ensure_same_dims(color.dims())?;
    if !(0.0..=1.0).contains(&saturation) {
        return Err(Error::param("saturation", "must lie in [0, 1]"));
    }
    let floor = 1.0 / MAX_LEVEL;
    let pixels = color
        .pixels
        .iter()
        .zip(y_old.samples().iter().zip(y_new.samples()))
        .map(|(&px, (&old, &new))| {
            if old < floor {
                return [new; 3];
            }
            if saturation == 1.0 {
                let gain = new / old;
                px.map(|c| (c * gain).clamp(0.0, 1.0))
            } else {
                px.map(|c| (new * math::powf(c / old, saturation)).clamp(0.0, 1.0))
            }
        })
        .collect();
    Ok(ColorImage {
        pixels,
        ..*color
    })
}
