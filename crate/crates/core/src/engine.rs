//! Smoothed local histogram equalization.
//!
//! Output at pixel `p` is the local histogram's smoothed CDF evaluated at the
//! pixel's own level:
//!
//! ```text
//! O(p) = Σq W(p - q) Φσ(p)(I(p) - I(q)) / Σq W(p - q)
//! ```
//!
//! [`equalize_reference`] evaluates that sum directly and is the oracle.
//! [`equalize_binned`] splats samples onto `B` histogram nodes, filters every
//! node plane with `W` (cost independent of the window size) and reads `Φ`
//! from a table indexed by tonal width.

use alloc::vec;
use alloc::vec::Vec;

use crate::filter::{local_mean, FixedFilter, SpatialKernel, FIXED_ONE};
use crate::math;
use crate::plane::{luminance_of, reattach_chroma, Image, ImagePlane};
use crate::scale::MAX_LEVEL;
use crate::sigma::{build_sigma_field, SigmaField, SigmaParams};
use crate::tonal::{cdf_scaled, inv_scale};
use crate::{Error, Result};

/// Which equalizer implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EngineKind {
    /// Direct evaluation, O(|Ω|) per pixel.
    Reference,
    /// Histogram-node engine, O(B) per pixel.
    #[default]
    Binned,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Reference => "reference",
            EngineKind::Binned => "binned",
        }
    }
}

/// Equalizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerConfig {
    pub engine: EngineKind,
    /// Number of histogram nodes, at least 16.
    pub bins: usize,
    /// Number of log-spaced tonal widths in the lookup table. At least 2
    /// unless the width field is uniform.
    pub lut_levels: usize,
    /// Blend between input (0) and equalized output (1).
    pub strength: f64,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        EqualizerConfig {
            engine: EngineKind::Binned,
            bins: 256,
            lut_levels: 16,
            strength: 1.0,
        }
    }
}

impl EqualizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 16 {
            return Err(Error::param("bins", "must be at least 16"));
        }
        if self.bins > 1 << 16 {
            return Err(Error::param("bins", "must be at most 65536"));
        }
        if self.lut_levels == 0 {
            return Err(Error::param("lut_levels", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::param("strength", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn check_inputs(plane: &ImagePlane, sigmas: &SigmaField) -> Result<()> {
    sigmas.ensure_dims(plane.dims())
}

/// Exact smoothed local equalization.
///
/// Window sums pair mirrored offsets (`-i`, `+i`) before accumulating, rows
/// first and then columns, so flipped inputs produce exactly flipped outputs.
/// With the `parallel` feature rows run on the rayon pool; every pixel's
/// summation order is unchanged, so the result is bit-identical.
pub fn equalize_reference(plane: &ImagePlane, kernel: &SpatialKernel, sigmas: &SigmaField) -> Result<ImagePlane> {
    check_inputs(plane, sigmas)?;
    let (w, h) = plane.dims();
    let levels: Vec<f64> = plane.samples().iter().map(|&s| s * MAX_LEVEL).collect();
    let weights = kernel.weights_1d();
    let norm = {
        let s: f64 = weights.iter().sum();
        s * s
    };
    let ctx = ReferenceCtx {
        levels: &levels,
        sigmas: sigmas.values(),
        weights: &weights,
        norm,
        width: w,
        height: h,
    };
    let mut out = vec![0.0; w * h];

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(w)
            .enumerate()
            .for_each(|(y, row)| ctx.fill_row(y, row));
    }
    #[cfg(not(feature = "parallel"))]
    for (y, row) in out.chunks_mut(w).enumerate() {
        ctx.fill_row(y, row);
    }

    Ok(ImagePlane::from_clamped(w, h, out))
}

/// Reference equalization of rows `rows` only; the result has `rows.len()`
/// rows but sees the full image as context. Used to time the reference
/// engine on a strip of a large image.
pub fn equalize_reference_rows(
    plane: &ImagePlane,
    kernel: &SpatialKernel,
    sigmas: &SigmaField,
    rows: core::ops::Range<usize>,
) -> Result<Vec<f64>> {
    check_inputs(plane, sigmas)?;
    let (w, h) = plane.dims();
    if rows.start > rows.end || rows.end > h {
        return Err(Error::param("rows", "outside the image"));
    }
    let levels: Vec<f64> = plane.samples().iter().map(|&s| s * MAX_LEVEL).collect();
    let weights = kernel.weights_1d();
    let s: f64 = weights.iter().sum();
    let ctx = ReferenceCtx {
        levels: &levels,
        sigmas: sigmas.values(),
        weights: &weights,
        norm: s * s,
        width: w,
        height: h,
    };
    let mut out = vec![0.0; w * rows.len()];
    for (row, y) in out.chunks_mut(w).zip(rows) {
        ctx.fill_row(y, row);
    }
    Ok(out)
}

struct ReferenceCtx<'a> {
    levels: &'a [f64],
    sigmas: &'a [f64],
    weights: &'a [f64],
    norm: f64,
    width: usize,
    height: usize,
}

impl ReferenceCtx<'_> {
    fn fill_row(&self, y: usize, out: &mut [f64]) {
        let w = self.width;
        let r = (self.weights.len() / 2) as isize;
        let clamp_x = |x: isize| x.clamp(0, w as isize - 1) as usize;
        let clamp_y = |y: isize| y.clamp(0, self.height as isize - 1) as usize;

        for (x, o) in out.iter_mut().enumerate() {
            let idx = y * w + x;
            let center = self.levels[idx];
            let k = inv_scale(self.sigmas[idx]);
            let phi = |q: f64| cdf_scaled((center - q) * k);

            let row_sum = |yy: usize| {
                let row = &self.levels[yy * w..(yy + 1) * w];
                let xi = x as isize;
                let mut acc = self.weights[r as usize] * phi(row[x]);
                for i in 1..=r {
                    let pair = phi(row[clamp_x(xi - i)]) + phi(row[clamp_x(xi + i)]);
                    acc += self.weights[(r + i) as usize] * pair;
                }
                acc
            };

            let yi = y as isize;
            let mut total = self.weights[r as usize] * row_sum(y);
            for j in 1..=r {
                let pair = row_sum(clamp_y(yi - j)) + row_sum(clamp_y(yi + j));
                total += self.weights[(r + j) as usize] * pair;
            }
            *o = total / self.norm;
        }
    }
}

/// Linear splat of every sample onto the two nearest of `bins` histogram
/// nodes at `b / (bins - 1)`.
///
/// The node weights are fixed-point and sum to exactly [`FIXED_ONE`] per
/// pixel.
struct Splat {
    lower: Vec<u32>,
    upper_weight: Vec<i64>,
    occupied: Vec<bool>,
}

impl Splat {
    fn new(plane: &ImagePlane, bins: usize) -> Self {
        let top = (bins - 1) as f64;
        let n = plane.samples().len();
        let mut lower = Vec::with_capacity(n);
        let mut upper_weight = Vec::with_capacity(n);
        let mut occupied = vec![false; bins];
        for &s in plane.samples() {
            let u = s * top;
            let lo = (math::floor(u) as usize).min(bins - 2);
            let w1 = math::round((u - lo as f64) * FIXED_ONE as f64) as i64;
            let w1 = w1.clamp(0, FIXED_ONE);
            if w1 < FIXED_ONE {
                occupied[lo] = true;
            }
            if w1 > 0 {
                occupied[lo + 1] = true;
            }
            lower.push(lo as u32);
            upper_weight.push(w1);
        }
        Splat {
            lower,
            upper_weight,
            occupied,
        }
    }

    /// Fixed-point indicator plane of node `b`.
    fn fill_indicator(&self, b: usize, dst: &mut [i64]) {
        let b = b as u32;
        for ((d, &lo), &w1) in dst.iter_mut().zip(&self.lower).zip(&self.upper_weight) {
            *d = if lo == b {
                FIXED_ONE - w1
            } else if lo + 1 == b {
                w1
            } else {
                0
            };
        }
    }
}

/// Per-pixel kernel-weighted histogram over `B` nodes.
///
/// `mass(p, b)` is the `W`-weighted share of the patch around `p` splatted
/// onto node `b`. Holds `B` full planes, so this is meant for inspection on
/// small images; the binned engine streams one node at a time instead.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedHistogramField {
    bins: usize,
    width: usize,
    height: usize,
    masses: Vec<f64>,
}

impl BinnedHistogramField {
    pub fn build(plane: &ImagePlane, kernel: &SpatialKernel, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::param("bins", "must be at least 2"));
        }
        let (w, h) = plane.dims();
        let splat = Splat::new(plane, bins);
        let mut filter = FixedFilter::new(*kernel, w, h);
        let mut ind = vec![0i64; w * h];
        let mut masses = vec![0.0; bins * w * h];
        for (b, dst) in masses.chunks_exact_mut(w * h).enumerate() {
            splat.fill_indicator(b, &mut ind);
            filter.apply(&ind, dst);
        }
        Ok(BinnedHistogramField {
            bins,
            width: w,
            height: h,
            masses,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Node position as a unit-interval sample.
    pub fn node(&self, b: usize) -> f64 {
        b as f64 / (self.bins - 1) as f64
    }

    pub fn mass(&self, x: usize, y: usize, b: usize) -> f64 {
        self.masses[b * self.width * self.height + y * self.width + x]
    }
}

/// `Φ` tables for a ladder of log-spaced tonal widths, sampled on a level
/// grid that divides the node spacing into `sub` steps.
struct CdfTable {
    sigmas: Vec<f64>,
    log_lo: f64,
    log_step: f64,
    /// Grid index of `d = 0`.
    zero: usize,
    sub: usize,
    len: usize,
    rows: Vec<f64>,
}

impl CdfTable {
    fn new(bins: usize, sigma_lo: f64, sigma_hi: f64, levels: usize) -> Self {
        let spacing = MAX_LEVEL / (bins - 1) as f64;
        // Grid step of at most 1/8 level keeps the interpolation error far
        // below one output level.
        let sub = (libm::ceil(8.0 * spacing) as usize).max(4);
        let zero = (bins - 1) * sub;
        let len = 2 * zero + 2;
        let step = spacing / sub as f64;

        let levels = if sigma_hi > sigma_lo { levels } else { 1 };
        let ratio = if levels > 1 { math::ln(sigma_hi / sigma_lo) } else { 0.0 };
        let sigmas: Vec<f64> = (0..levels)
            .map(|k| {
                if k == 0 {
                    sigma_lo
                } else if k == levels - 1 {
                    sigma_hi
                } else {
                    sigma_lo * math::exp(ratio * k as f64 / (levels - 1) as f64)
                }
            })
            .collect();

        let mut rows = Vec::with_capacity(levels * len);
        for &s in &sigmas {
            let k = inv_scale(s);
            rows.extend((0..len).map(|j| cdf_scaled((j as f64 - zero as f64) * step * k)));
        }
        CdfTable {
            log_lo: math::ln(sigma_lo),
            log_step: if levels > 1 { ratio / (levels - 1) as f64 } else { 0.0 },
            sigmas,
            zero,
            sub,
            len,
            rows,
        }
    }

    /// Lower ladder index and interpolation weight toward the next rung.
    fn locate(&self, sigma: f64) -> (usize, f64) {
        let n = self.sigmas.len();
        if n == 1 {
            return (0, 0.0);
        }
        let pos = (math::ln(sigma) - self.log_lo) / self.log_step;
        let k = (math::floor(pos).max(0.0) as usize).min(n - 2);
        let (a, b) = (self.sigmas[k], self.sigmas[k + 1]);
        (k, ((sigma - a) / (b - a)).clamp(0.0, 1.0))
    }
}

struct PixelLookup {
    row: u32,
    sigma_frac: f64,
    /// Floor of the pixel position on the table grid.
    base: u32,
    frac: f64,
}

/// Fast equalization over `cfg.bins` histogram nodes.
///
/// Agrees with [`equalize_reference`] to within about one level for
/// `B >= 256`, `K >= 16` and widths of 32 levels or more.
pub fn equalize_binned(
    plane: &ImagePlane,
    kernel: &SpatialKernel,
    sigmas: &SigmaField,
    cfg: &EqualizerConfig,
) -> Result<ImagePlane> {
    check_inputs(plane, sigmas)?;
    cfg.validate()?;
    let (lo, hi) = sigmas.range();
    if hi > lo && cfg.lut_levels < 2 {
        return Err(Error::param("lut_levels", "need at least 2 for a non-uniform width field"));
    }
    let bins = cfg.bins;
    let (w, h) = plane.dims();
    let n = w * h;

    let table = CdfTable::new(bins, lo, hi, cfg.lut_levels);
    let top = (bins - 1) as f64;
    let lookups: Vec<PixelLookup> = plane
        .samples()
        .iter()
        .zip(sigmas.values())
        .map(|(&s, &sigma)| {
            let (row, sigma_frac) = table.locate(sigma);
            let g = s * top * table.sub as f64;
            let base = math::floor(g);
            PixelLookup {
                row: row as u32,
                sigma_frac,
                base: base as u32,
                frac: g - base,
            }
        })
        .collect();

    let splat = Splat::new(plane, bins);
    let mut filter = FixedFilter::new(*kernel, w, h);
    let mut indicator = vec![0i64; n];
    let mut mass = vec![0.0; n];
    let mut out = vec![0.0; n];
    let two_rows = table.sigmas.len() > 1;

    for b in 0..bins {
        if !splat.occupied[b] {
            continue;
        }
        splat.fill_indicator(b, &mut indicator);
        filter.apply(&indicator, &mut mass);
        let shift = b * table.sub;
        for ((o, &m), px) in out.iter_mut().zip(&mass).zip(&lookups) {
            if m == 0.0 {
                continue;
            }
            // Grid index of d = I(p) - node_b; always within [0, 2 * zero].
            let j = table.zero + px.base as usize - shift;
            let row = px.row as usize * table.len;
            let lerp = |r: usize| {
                let t = &table.rows[r + j..r + j + 2];
                t[0] + (t[1] - t[0]) * px.frac
            };
            let mut v = lerp(row);
            if two_rows {
                v += (lerp(row + table.len) - v) * px.sigma_frac;
            }
            *o += m * v;
        }
    }
    Ok(ImagePlane::from_clamped(w, h, out))
}

/// Runs the engine selected by `cfg.engine`. Does not apply the strength
/// blend.
pub fn equalize(plane: &ImagePlane, kernel: &SpatialKernel, sigmas: &SigmaField, cfg: &EqualizerConfig) -> Result<ImagePlane> {
    match cfg.engine {
        EngineKind::Reference => {
            cfg.validate()?;
            equalize_reference(plane, kernel, sigmas)
        }
        EngineKind::Binned => equalize_binned(plane, kernel, sigmas, cfg),
    }
}

/// Full tone-mapping configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneMapSettings {
    /// Equalizer window `W`.
    pub kernel: SpatialKernel,
    /// Window for the local mean; `None` shares `kernel`.
    pub mean_kernel: Option<SpatialKernel>,
    pub sigma: SigmaParams,
    pub equalizer: EqualizerConfig,
    /// Chroma exponent for color inputs, in [0, 1].
    pub saturation: f64,
}

impl ToneMapSettings {
    pub fn new(kernel: SpatialKernel, sigma: SigmaParams, equalizer: EqualizerConfig, saturation: f64) -> Self {
        ToneMapSettings {
            kernel,
            mean_kernel: None,
            sigma,
            equalizer,
            saturation,
        }
    }
}

/// Tone-maps a luminance plane: local mean, width field, equalization and
/// strength blend.
pub fn tone_map_plane(y: &ImagePlane, settings: &ToneMapSettings) -> Result<ImagePlane> {
    settings.equalizer.validate()?;
    let alpha = settings.equalizer.strength;
    if alpha == 0.0 {
        return Ok(y.clone());
    }
    let mean = local_mean(y, settings.mean_kernel.as_ref().unwrap_or(&settings.kernel));
    let sigmas = build_sigma_field(y, &mean, &settings.sigma)?;
    let eq = equalize(y, &settings.kernel, &sigmas, &settings.equalizer)?;
    if alpha == 1.0 {
        return Ok(eq);
    }
    let (w, h) = y.dims();
    let blended = eq
        .samples()
        .iter()
        .zip(y.samples())
        .map(|(&o, &i)| alpha * o + (1.0 - alpha) * i)
        .collect();
    Ok(ImagePlane::from_clamped(w, h, blended))
}

/// Tone-maps a gray or color image; color inputs are processed on their
/// luminance and the chroma is reattached.
pub fn tone_map_with(image: &Image, settings: &ToneMapSettings) -> Result<Image> {
    if !(0.0..=1.0).contains(&settings.saturation) {
        return Err(Error::param("saturation", "must lie in [0, 1]"));
    }
    match image {
        Image::Gray(p) => Ok(Image::Gray(tone_map_plane(p, settings)?)),
        Image::Color(c) => {
            settings.equalizer.validate()?;
            if settings.equalizer.strength == 0.0 {
                return Ok(image.clone());
            }
            let y_old = luminance_of(c);
            let y_new = tone_map_plane(&y_old, settings)?;
            Ok(Image::Color(reattach_chroma(c, &y_old, &y_new, settings.saturation)?))
        }
    }
}

/// Convenience form of [`tone_map_with`] sharing one window for the mean and
/// the equalizer.
pub fn tone_map(
    image: &Image,
    kernel: &SpatialKernel,
    params: &SigmaParams,
    cfg: &EqualizerConfig,
    saturation: f64,
) -> Result<Image> {
    tone_map_with(image, &ToneMapSettings::new(*kernel, *params, *cfg, saturation))
}
