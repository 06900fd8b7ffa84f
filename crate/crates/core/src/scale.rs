//! Canonical 10-bit level scale.
//!
//! Samples are stored as unit-interval reals. Tonal widths and other
//! intensity parameters are given in level units on a 1024-level scale, so
//! `level = sample * 1023`.

/// Number of discrete levels on the canonical scale.
pub const LEVEL_COUNT: usize = 1024;

/// Highest level, i.e. the level of a sample equal to 1.0.
pub const MAX_LEVEL: f64 = (LEVEL_COUNT - 1) as f64;

/// Affine map between unit-interval samples and level units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntensityScale;

impl IntensityScale {
    /// Number of levels (1024).
    pub const fn level_count(self) -> usize {
        LEVEL_COUNT
    }

    /// Sample to level units.
    #[inline]
    pub fn to_levels(self, sample: f64) -> f64 {
        sample * MAX_LEVEL
    }

    /// Level units to sample.
    #[inline]
    pub fn from_levels(self, level: f64) -> f64 {
        level / MAX_LEVEL
    }
}

/// Shorthand for `IntensityScale.to_levels`.
#[inline]
pub fn to_levels(sample: f64) -> f64 {
    IntensityScale.to_levels(sample)
}

/// Shorthand for `IntensityScale.from_levels`.
#[inline]
pub fn from_levels(level: f64) -> f64 {
    IntensityScale.from_levels(level)
}
