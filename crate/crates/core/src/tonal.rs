//! Gaussian tonal kernel CDF, `Φσ(d) = ½(1 + erf(d / (σ√2)))`.
//!
//! Evaluated through `erfc` so the far tails keep their relative accuracy
//! instead of cancelling to zero.

use core::f64::consts::FRAC_1_SQRT_2;

use crate::math;
use crate::{Error, Result};

/// `Φσ(d)` for a level difference `d` and width `sigma`, both in level units.
pub fn tonal_cdf(d: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", "must be positive"));
    }
    Ok(cdf_scaled(d * (FRAC_1_SQRT_2 / sigma)))
}

/// `Φ` with the `1 / (σ√2)` factor already applied to the argument.
#[inline]
pub(crate) fn cdf_scaled(x: f64) -> f64 {
    0.5 * math::erfc(-x)
}

/// `1 / (σ√2)`, the per-pixel factor fed to [`cdf_scaled`].
#[inline]
pub(crate) fn inv_scale(sigma: f64) -> f64 {
    FRAC_1_SQRT_2 / sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn center_is_half() {
        for s in [1.0, 50.0, 300.0, 1e6] {
            assert_eq!(tonal_cdf(0.0, s).unwrap(), 0.5);
        }
    }

    #[test]
    fn antisymmetric_pair() {
        let a = tonal_cdf(137.0, 64.0).unwrap();
        let b = tonal_cdf(-137.0, 64.0).unwrap();
        assert!((a + b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_sigma_tail() {
        // Standard normal CDF at -2, erfc(√2)/2 evaluated at 30 digits:
        // 0.0227501319481792072...
        let v = tonal_cdf(-600.0, 300.0).unwrap();
        assert!((v - 0.022_750_131_948_179_2).abs() < 1e-12, "{v}");
    }

    #[test]
    fn twelve_sigma_tail() {
        let v = tonal_cdf(-600.0, 50.0).unwrap();
        assert!(v > 0.0 && v < 1e-30, "{v}");
    }

    #[test]
    fn rejects_non_positive_sigma() {
        assert!(tonal_cdf(1.0, 0.0).is_err());
        assert!(tonal_cdf(1.0, -3.0).is_err());
        assert!(tonal_cdf(1.0, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn symmetric(d in -1023.0f64..1023.0, s in 0.5f64..2000.0) {
            let sum = tonal_cdf(d, s).unwrap() + tonal_cdf(-d, s).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-14);
        }

        #[test]
        fn increasing(a in -200.0f64..200.0, step in 0.01f64..50.0, s in 20.0f64..600.0) {
            prop_assert!(tonal_cdf(a + step, s).unwrap() > tonal_cdf(a, s).unwrap());
        }

        #[test]
        fn wider_contracts_to_half(d in -1023.0f64..1023.0, s in 1.0f64..500.0, grow in 1.01f64..4.0) {
            prop_assume!(d.abs() > 1e-6);
            let narrow = tonal_cdf(d, s).unwrap();
            let wide = tonal_cdf(d, s * grow).unwrap();
            prop_assert!((wide - 0.5).abs() <= (narrow - 0.5).abs());
        }
    }
}
