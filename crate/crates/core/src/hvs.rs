//! Halo measurement on synthetic step edges and a center-surround model of
//! perceived luminance.
//!
//! All amplitudes and thresholds are in level units.

use alloc::vec::Vec;

use crate::engine::equalize_reference;
use crate::filter::{local_mean, SpatialKernel};
use crate::plane::ImagePlane;
use crate::scale::{from_levels, MAX_LEVEL};
use crate::sigma::{build_sigma_field, GroupPolicy, SigmaField, SigmaParams};
use crate::{Error, Result};

/// Deviation (in levels) a column must exceed to count toward a halo width.
pub const WIDTH_THRESHOLD: f64 = 1.0;

/// A vertical step edge; columns left of `edge_column` are dark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEdgeSpec {
    pub width: usize,
    pub height: usize,
    pub dark_level: f64,
    pub bright_level: f64,
    pub edge_column: usize,
}

impl StepEdgeSpec {
    /// The canonical stimulus: 256x256, levels 200/800, edge in the middle.
    pub fn canonical() -> Self {
        StepEdgeSpec {
            width: 256,
            height: 256,
            dark_level: 200.0,
            bright_level: 800.0,
            edge_column: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            });
        }
        if !(0.0 <= self.dark_level && self.dark_level < self.bright_level && self.bright_level <= MAX_LEVEL) {
            return Err(Error::param("step", "need 0 <= dark < bright <= 1023"));
        }
        if self.edge_column > self.width {
            return Err(Error::param("edge_column", "must not exceed the width"));
        }
        Ok(())
    }
}

pub fn make_step_edge(spec: &StepEdgeSpec) -> Result<ImagePlane> {
    spec.validate()?;
    let dark = from_levels(spec.dark_level);
    let bright = from_levels(spec.bright_level);
    ImagePlane::from_fn(spec.width, spec.height, |x, _| if x < spec.edge_column { dark } else { bright })
}

/// Overshoot/undershoot around a step edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HaloReport {
    /// Largest rise above the bright-side plateau, bright side only.
    pub light_amp: f64,
    /// Largest drop below the dark-side plateau, dark side only.
    pub dark_amp: f64,
    /// Contiguous columns around the light peak deviating by more than one
    /// level.
    pub light_width: usize,
    pub dark_width: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median level of columns `cols`, pooled over all rows.
fn plateau(plane: &ImagePlane, cols: core::ops::Range<usize>) -> f64 {
    let mut vals: Vec<f64> = (0..plane.height())
        .flat_map(|y| cols.clone().map(move |x| (x, y)))
        .map(|(x, y)| plane.level(x, y))
        .collect();
    median(&mut vals)
}

/// Peak of `devs` and the width of the run above the threshold containing
/// it. `devs` holds signed deviations already oriented so halos are
/// positive.
fn peak_and_width(devs: &[f64]) -> (f64, usize) {
    let Some((at, &peak)) = devs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
    else {
        return (0.0, 0);
    };
    if peak <= WIDTH_THRESHOLD {
        return (peak.max(0.0), 0);
    }
    let left = devs[..at].iter().rev().take_while(|&&d| d > WIDTH_THRESHOLD).count();
    let right = devs[at + 1..].iter().take_while(|&&d| d > WIDTH_THRESHOLD).count();
    (peak, left + 1 + right)
}

/// Measures halos in `processed` around the edge declared by `spec`.
///
/// Each side's plateau is the median of the quarter of its columns farthest
/// from the edge; deviations are column means minus that plateau.
pub fn measure_halo(processed: &ImagePlane, spec: &StepEdgeSpec) -> Result<HaloReport> {
    spec.validate()?;
    processed.ensure_same_dims((spec.width, spec.height))?;
    let edge = spec.edge_column;
    let w = spec.width;
    let h = processed.height() as f64;
    // Mean of per-pixel deviations rather than deviation of the mean, so a
    // flat column reports exactly zero.
    let col_dev = |x: usize, base: f64| (0..processed.height()).map(|y| processed.level(x, y) - base).sum::<f64>() / h;

    let mut report = HaloReport::default();
    if edge > 0 {
        let quarter = (edge / 4).max(1);
        let base = plateau(processed, 0..quarter);
        let devs: Vec<f64> = (0..edge).map(|x| -col_dev(x, base)).collect();
        (report.dark_amp, report.dark_width) = peak_and_width(&devs);
    }
    if edge < w {
        let quarter = ((w - edge) / 4).max(1);
        let base = plateau(processed, w - quarter..w);
        let devs: Vec<f64> = (edge..w).map(|x| col_dev(x, base)).collect();
        (report.light_amp, report.light_width) = peak_and_width(&devs);
    }
    Ok(report)
}

/// Center-surround (difference of Gaussians) parameters, widths in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoGParams {
    pub sigma_center: f64,
    pub sigma_surround: f64,
    /// Surround weight `k` in (0, 1].
    pub surround_gain: f64,
    /// Response gain `λ >= 0`.
    pub response_gain: f64,
}

impl Default for DoGParams {
    fn default() -> Self {
        DoGParams {
            sigma_center: 1.0,
            sigma_surround: 3.0,
            surround_gain: 1.0,
            response_gain: 1.0,
        }
    }
}

impl DoGParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_center > 0.0) {
            return Err(Error::param("sigma_center", "must be positive"));
        }
        if !(self.sigma_surround > self.sigma_center) {
            return Err(Error::param("sigma_surround", "must exceed sigma_center"));
        }
        if !(self.surround_gain > 0.0 && self.surround_gain <= 1.0) {
            return Err(Error::param("surround_gain", "must lie in (0, 1]"));
        }
        if !(self.response_gain >= 0.0) {
            return Err(Error::param("response_gain", "must be non-negative"));
        }
        Ok(())
    }
}

/// Lateral-inhibition model: `P = clamp(I + λ (Gc*I - k Gs*I), 0, 1)`.
///
/// With `k = 1` the center-surround term has zero DC gain, so flat regions
/// are unchanged; near edges it produces Mach bands.
pub fn perceived_luminance(plane: &ImagePlane, params: &DoGParams) -> Result<ImagePlane> {
    params.validate()?;
    if params.response_gain == 0.0 {
        return Ok(plane.clone());
    }
    let center = local_mean(plane, &SpatialKernel::gaussian(params.sigma_center)?);
    let surround = local_mean(plane, &SpatialKernel::gaussian(params.sigma_surround)?);
    let (w, h) = plane.dims();
    let out = plane
        .samples()
        .iter()
        .zip(center.plane().samples().iter().zip(surround.plane().samples()))
        .map(|(&i, (&c, &s))| (i + params.response_gain * (c - params.surround_gain * s)).clamp(0.0, 1.0))
        .collect();
    ImagePlane::new(w, h, out)
}

/// How [`sigma_sweep`] interprets its width list.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    /// Every listed width is applied uniformly to all pixels.
    Uniform,
    /// Group-selective widths: each listed width is used as `sigma_max`
    /// with the given `sigma_min`, once per policy.
    Adaptive {
        sigma_min: f64,
        policies: Vec<GroupPolicy>,
    },
}

/// One sweep run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// The uniform width, or `sigma_max` for adaptive runs.
    pub sigma: f64,
    /// `None` for uniform runs.
    pub policy: Option<GroupPolicy>,
    /// Present for adaptive runs.
    pub sigma_min: Option<f64>,
    pub report: HaloReport,
}

/// Runs the reference equalizer on the step edge for every listed width and
/// measures the halos. Rows follow input order.
pub fn sigma_sweep(spec: &StepEdgeSpec, sigmas: &[f64], kernel: &SpatialKernel, mode: &SweepMode) -> Result<Vec<SweepRow>> {
    sigma_sweep_with(spec, sigmas, kernel, mode, |_, _| {})
}

/// [`sigma_sweep`] that also hands each processed step image to `visit`.
pub fn sigma_sweep_with(
    spec: &StepEdgeSpec,
    sigmas: &[f64],
    kernel: &SpatialKernel,
    mode: &SweepMode,
    mut visit: impl FnMut(&SweepRow, &ImagePlane),
) -> Result<Vec<SweepRow>> {
    if sigmas.is_empty() {
        return Err(Error::param("sigmas", "must not be empty"));
    }
    let edge = make_step_edge(spec)?;
    let mut rows = Vec::new();
    match mode {
        SweepMode::Uniform => {
            for &s in sigmas {
                let field = SigmaField::uniform(spec.width, spec.height, s)?;
                let out = equalize_reference(&edge, kernel, &field)?;
                let row = SweepRow {
                    sigma: s,
                    policy: None,
                    sigma_min: None,
                    report: measure_halo(&out, spec)?,
                };
                visit(&row, &out);
                rows.push(row);
            }
        }
        SweepMode::Adaptive { sigma_min, policies } => {
            if policies.is_empty() {
                return Err(Error::param("policies", "must not be empty"));
            }
            let mean = local_mean(&edge, kernel);
            for &s in sigmas {
                for &policy in policies {
                    let params = SigmaParams::new(*sigma_min, s, policy)?;
                    let field = build_sigma_field(&edge, &mean, &params)?;
                    let out = equalize_reference(&edge, kernel, &field)?;
                    let row = SweepRow {
                        sigma: s,
                        policy: Some(policy),
                        sigma_min: Some(*sigma_min),
                        report: measure_halo(&out, spec)?,
                    };
                    visit(&row, &out);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Halos as perceived through the lateral-inhibition model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackedLiReport {
    pub perceived_original: HaloReport,
    pub perceived_processed: HaloReport,
}

impl StackedLiReport {
    /// True when the processed image's perceived halos strictly exceed the
    /// original's on both sides.
    pub fn stacked(&self) -> bool {
        self.perceived_processed.light_amp > self.perceived_original.light_amp
            && self.perceived_processed.dark_amp > self.perceived_original.dark_amp
    }
}

/// Applies the lateral-inhibition model to both images and measures the
/// halos each is perceived to carry.
pub fn stacked_li_report(
    original: &ImagePlane,
    processed: &ImagePlane,
    spec: &StepEdgeSpec,
    dog: &DoGParams,
) -> Result<StackedLiReport> {
    original.ensure_same_dims(processed.dims())?;
    Ok(StackedLiReport {
        perceived_original: measure_halo(&perceived_luminance(original, dog)?, spec)?,
        perceived_processed: measure_halo(&perceived_luminance(processed, dog)?, spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::to_levels;
    use alloc::vec;

    fn spec(width: usize, height: usize) -> StepEdgeSpec {
        StepEdgeSpec {
            width,
            height,
            dark_level: 200.0,
            bright_level: 800.0,
            edge_column: width / 2,
        }
    }

    fn with_bump(spec: &StepEdgeSpec, cols: core::ops::Range<usize>, levels: f64) -> ImagePlane {
        let base = make_step_edge(spec).unwrap();
        ImagePlane::from_fn(spec.width, spec.height, |x, y| {
            let v = base.get(x, y);
            if cols.contains(&x) {
                v + from_levels(levels)
            } else {
                v
            }
        })
        .unwrap()
    }

    #[test]
    fn step_edge_examples() {
        let s = StepEdgeSpec {
            width: 4,
            height: 1,
            dark_level: 0.0,
            bright_level: 1023.0,
            edge_column: 2,
        };
        assert_eq!(make_step_edge(&s).unwrap().samples(), &[0.0, 0.0, 1.0, 1.0]);
        let s = StepEdgeSpec { edge_column: 0, ..s };
        assert_eq!(make_step_edge(&s).unwrap().samples(), &[1.0; 4]);
        let c = make_step_edge(&StepEdgeSpec::canonical()).unwrap();
        assert_eq!(c.get(127, 5), 200.0 / 1023.0);
        assert_eq!(c.get(128, 5), 800.0 / 1023.0);
    }

    #[test]
    fn invalid_specs() {
        let good = spec(8, 2);
        for bad in [
            StepEdgeSpec { dark_level: 800.0, ..good },
            StepEdgeSpec { bright_level: 2000.0, ..good },
            StepEdgeSpec { edge_column: 9, ..good },
            StepEdgeSpec { width: 0, ..good },
        ] {
            assert!(make_step_edge(&bad).is_err());
        }
    }

    #[test]
    fn unprocessed_edge_has_no_halo() {
        for s in [spec(64, 3), StepEdgeSpec::canonical(), StepEdgeSpec { edge_column: 0, ..spec(8, 2) }] {
            let r = measure_halo(&make_step_edge(&s).unwrap(), &s).unwrap();
            assert_eq!(r, HaloReport::default());
        }
    }

    #[test]
    fn constructed_bump() {
        let s = spec(64, 4);
        let bumped = with_bump(&s, 32..37, 10.0);
        let r = measure_halo(&bumped, &s).unwrap();
        assert!((r.light_amp - 10.0).abs() < 1e-9, "{r:?}");
        assert_eq!(r.light_width, 5);
        assert_eq!((r.dark_amp, r.dark_width), (0.0, 0));
    }

    #[test]
    fn small_deviation_has_no_width() {
        let s = spec(64, 2);
        let r = measure_halo(&with_bump(&s, 32..40, 0.5), &s).unwrap();
        assert!((r.light_amp - 0.5).abs() < 1e-9);
        assert_eq!(r.light_width, 0);
    }

    #[test]
    fn measure_rejects_wrong_size() {
        let s = spec(64, 2);
        let p = ImagePlane::filled(63, 2, 0.5).unwrap();
        assert!(matches!(measure_halo(&p, &s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dog_fixes_constants_and_identity() {
        let p = ImagePlane::filled(40, 30, 0.42).unwrap();
        let out = perceived_luminance(&p, &DoGParams::default()).unwrap();
        assert!(out.samples().iter().all(|&v| (v - 0.42).abs() <= 1e-6));

        let s = spec(40, 3);
        let e = make_step_edge(&s).unwrap();
        let off = DoGParams {
            response_gain: 0.0,
            ..Default::default()
        };
        assert_eq!(perceived_luminance(&e, &off).unwrap(), e);
    }

    #[test]
    fn dog_param_validation() {
        let d = DoGParams::default();
        assert!(DoGParams { sigma_surround: 1.0, ..d }.validate().is_err());
        assert!(DoGParams { surround_gain: 0.0, ..d }.validate().is_err());
        assert!(DoGParams { response_gain: -1.0, ..d }.validate().is_err());
        assert!(DoGParams { sigma_center: 0.0, ..d }.validate().is_err());
    }

    /// Direct convolution with the composite kernel weights and clamped
    /// indices, independent of the running-sum implementation.
    fn direct_blur_row(row: &[f64], kernel: &SpatialKernel) -> Vec<f64> {
        let wts = kernel.weights_1d();
        let r = (wts.len() / 2) as isize;
        let total: f64 = wts.iter().sum();
        let n = row.len() as isize;
        (0..n)
            .map(|x| {
                (-r..=r)
                    .map(|i| wts[(i + r) as usize] * row[(x + i).clamp(0, n - 1) as usize])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    #[test]
    fn mach_bands_on_step() {
        let s = spec(64, 3);
        let e = make_step_edge(&s).unwrap();
        let dog = DoGParams::default();
        let p = perceived_luminance(&e, &dog).unwrap();

        // Oracle: rows are identical and vertical blur of identical rows is
        // the identity, so a 1-D direct convolution gives the profile.
        let row: Vec<f64> = (0..64).map(|x| e.get(x, 0)).collect();
        let c = direct_blur_row(&row, &SpatialKernel::gaussian(1.0).unwrap());
        let sr = direct_blur_row(&row, &SpatialKernel::gaussian(3.0).unwrap());
        for x in 0..64 {
            let expect = (row[x] + c[x] - sr[x]).clamp(0.0, 1.0);
            assert!((p.get(x, 1) - expect).abs() < 1e-9, "x={x}");
        }

        let r = measure_halo(&p, &s).unwrap();
        assert!(r.light_amp > 0.0 && r.dark_amp > 0.0, "{r:?}");
        // Overshoot sits next to the edge.
        assert!(to_levels(p.get(32, 0)) > 800.0);
        assert!(to_levels(p.get(31, 0)) < 200.0);
    }

    #[test]
    fn stacked_li_identical_inputs() {
        let s = spec(48, 2);
        let e = make_step_edge(&s).unwrap();
        let r = stacked_li_report(&e, &e, &s, &DoGParams::default()).unwrap();
        assert_eq!(r.perceived_original, r.perceived_processed);
        assert!(!r.stacked());
    }

    #[test]
    fn stacked_li_with_bump() {
        let s = spec(64, 2);
        let e = make_step_edge(&s).unwrap();
        let bumped = with_bump(&s, 32..37, 10.0);
        let r = stacked_li_report(&e, &bumped, &s, &DoGParams::default()).unwrap();
        assert!(r.perceived_processed.light_amp > r.perceived_original.light_amp, "{r:?}");
    }

    #[test]
    fn sweep_single_row_matches_direct() {
        let s = spec(96, 2);
        let k = SpatialKernel::boxed(8).unwrap();
        let rows = sigma_sweep(&s, &[50.0], &k, &SweepMode::Uniform).unwrap();
        assert_eq!(rows.len(), 1);
        let field = SigmaField::uniform(96, 2, 50.0).unwrap();
        let out = equalize_reference(&make_step_edge(&s).unwrap(), &k, &field).unwrap();
        assert_eq!(rows[0].report, measure_halo(&out, &s).unwrap());
        assert_eq!(rows[0].policy, None);
    }

    #[test]
    fn sweep_uniform_monotone_small() {
        let s = spec(128, 2);
        let k = SpatialKernel::boxed(16).unwrap();
        let rows = sigma_sweep(&s, &[50.0, 100.0, 200.0, 500.0], &k, &SweepMode::Uniform).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].report.light_amp <= pair[0].report.light_amp);
            assert!(pair[1].report.dark_amp <= pair[0].report.dark_amp);
        }
        assert!(rows[3].report.dark_amp < rows[0].report.dark_amp);
    }

    #[test]
    fn sweep_adaptive_rows() {
        let s = spec(96, 2);
        let k = SpatialKernel::boxed(8).unwrap();
        let mode = SweepMode::Adaptive {
            sigma_min: 64.0,
            policies: vec![GroupPolicy::Paper, GroupPolicy::Swapped],
        };
        let rows = sigma_sweep(&s, &[256.0, 512.0], &k, &mode).unwrap();
        let order: Vec<_> = rows.iter().map(|r| (r.sigma, r.policy)).collect();
        assert_eq!(
            order,
            vec![
                (256.0, Some(GroupPolicy::Paper)),
                (256.0, Some(GroupPolicy::Swapped)),
                (512.0, Some(GroupPolicy::Paper)),
                (512.0, Some(GroupPolicy::Swapped)),
            ]
        );
        assert!(sigma_sweep(&s, &[], &k, &SweepMode::Uniform).is_err());
    }
}
