//! Spatial weighting over the local patch: box and three-pass-box Gaussian
//! filters with replicate borders, and the weighted local mean.
//!
//! All filtering runs on fixed-point integers. Integer running sums are
//! exact, so the O(1)-per-pixel sliding implementation yields the same bits
//! as summing every window directly, in any order, and flipped inputs give
//! exactly flipped outputs.
//!
//! The fixed-point unit [`FIXED_ONE`] is divisible by 255, 1023 and 65535, so
//! samples decoded from 8-bit, 10-bit or 16-bit data are represented exactly
//! and a constant window reproduces its value bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::plane::ImagePlane;
use crate::{Error, Result};

/// Fixed-point representation of 1.0: `lcm(255, 1023, 65535) * 256`.
pub const FIXED_ONE: i64 = 3 * 5 * 11 * 17 * 31 * 257 * 256;

/// Largest accepted box radius. Keeps `(2r+1)^2 * FIXED_ONE` inside `i64`.
pub const MAX_RADIUS: usize = 4096;

#[inline]
pub(crate) fn to_fixed(sample: f64) -> i64 {
    math::round(sample * FIXED_ONE as f64) as i64
}

/// The weighting function over the local patch.
///
/// Both variants are separable and symmetric; borders replicate the edge
/// pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialKernel {
    /// Uniform weights over a `(2r+1) x (2r+1)` window.
    Box { radius: usize },
    /// Gaussian approximated by three successive box passes.
    Gauss3Box { sigma: f64, radii: [usize; 3] },
}

impl SpatialKernel {
    pub fn boxed(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::param("radius", "must be at least 1"));
        }
        if radius > MAX_RADIUS {
            return Err(Error::param("radius", "exceeds the supported maximum"));
        }
        Ok(SpatialKernel::Box { radius })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma_s", "must be positive"));
        }
        let radii = gauss_box_radii(sigma);
        if radii.iter().sum::<usize>() > MAX_RADIUS {
            return Err(Error::param("sigma_s", "exceeds the supported maximum"));
        }
        Ok(SpatialKernel::Gauss3Box { sigma, radii })
    }

    /// Half-width of the effective support Ω.
    pub fn support_radius(&self) -> usize {
        match *self {
            SpatialKernel::Box { radius } => radius,
            SpatialKernel::Gauss3Box { radii, .. } => radii.iter().sum(),
        }
    }

    /// Unnormalized 1-D weights over `-R..=R` with `R = support_radius()`.
    ///
    /// The weights are small integers stored as `f64` (all ones for the box,
    /// the convolution of three box indicators otherwise), so every partial
    /// sum is exact. The 2-D weight is the outer product.
    pub fn weights_1d(&self) -> Vec<f64> {
        match *self {
            SpatialKernel::Box { radius } => vec![1.0; 2 * radius + 1],
            SpatialKernel::Gauss3Box { radii, .. } => composite_box_counts(&radii)
                .into_iter()
                .map(|c| c as f64)
                .collect(),
        }
    }
}

/// Variance of a box of odd width `w` (in pixels squared).
fn box_variance(w: usize) -> f64 {
    ((w * w - 1) as f64) / 12.0
}

fn composite_box_counts(radii: &[usize]) -> Vec<u64> {
    let mut k = vec![1u64];
    for &r in radii {
        let w = 2 * r + 1;
        let mut next = vec![0u64; k.len() + w - 1];
        for (i, &v) in k.iter().enumerate() {
            for slot in &mut next[i..i + w] {
                *slot += v;
            }
        }
        k = next;
    }
    k
}

/// Picks three box radii approximating a Gaussian of standard deviation
/// `sigma`.
///
/// Candidates are odd widths within ±4 of the ideal equal-width box
/// (`sqrt(12 sigma^2 / 3 + 1)`); the triple whose separable 2-D impulse
/// response is closest to the sampled 2-D Gaussian in max-abs deviation
/// wins. Plain variance matching leaves the flatter three-box peak several
/// percent below the Gaussian peak.
pub fn gauss_box_radii(sigma: f64) -> [usize; 3] {
    let ideal = math::sqrt(12.0 * sigma * sigma / 3.0 + 1.0);
    let mut base = math::floor(ideal) as usize;
    if base % 2 == 0 {
        base = base.saturating_sub(1).max(1);
    }
    let lo = base.saturating_sub(4).max(1) | 1;
    let widths: Vec<usize> = (lo..=base + 4).step_by(2).collect();

    let mut best = ([base; 3], f64::INFINITY);
    for (i, &a) in widths.iter().enumerate() {
        for (j, &b) in widths.iter().enumerate().skip(i) {
            for &c in &widths[j..] {
                let var = box_variance(a) + box_variance(b) + box_variance(c);
                // Skip triples that are far off in scale; they can only lose.
                if var > 2.0 * sigma * sigma + 1.0 {
                    continue;
                }
                let dev = peak_deviation([a, b, c], sigma);
                if dev < best.1 {
                    best = ([a, b, c], dev);
                }
            }
        }
    }
    best.0.map(|w| w / 2)
}

/// Max |K2 - G2| / max G2 for the separable kernels, evaluated on a grid of
/// at most ~128x128 points.
fn peak_deviation(widths: [usize; 3], sigma: f64) -> f64 {
    let radii = widths.map(|w| w / 2);
    let counts = composite_box_counts(&radii);
    let kr = counts.len() / 2;
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let support = kr.max(math::floor(5.0 * sigma) as usize + 1);

    let mut gauss: Vec<f64> = (0..=2 * support)
        .map(|i| {
            let d = i as f64 - support as f64;
            math::exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect();
    let gsum: f64 = gauss.iter().sum();
    gauss.iter_mut().for_each(|g| *g /= gsum);

    let boxk: Vec<f64> = (0..=2 * support)
        .map(|i| {
            let off = i as isize - support as isize + kr as isize;
            if off >= 0 && (off as usize) < counts.len() {
                counts[off as usize] as f64 / total
            } else {
                0.0
            }
        })
        .collect();

    let stride = ((2 * support + 1) / 128).max(1);
    let peak = gauss[support] * gauss[support];
    let mut worst = 0.0f64;
    // Walk outward from the center so the peak is always sampled.
    let idx: Vec<usize> = (0..=support)
        .step_by(stride)
        .flat_map(|d| [support - d, support + d])
        .collect();
    for &i in &idx {
        for &j in &idx {
            worst = worst.max((boxk[i] * boxk[j] - gauss[i] * gauss[j]).abs());
        }
    }
    worst / peak
}

/// Scratch-holding separable filter over fixed-point planes.
///
/// Reusing one instance across many planes of the same size avoids
/// reallocating the intermediate buffers.
pub(crate) struct FixedFilter {
    kernel: SpatialKernel,
    width: usize,
    height: usize,
    tmp: Vec<i64>,
    tmp2: Vec<i64>,
}


impl FixedFilter {
    pub(crate) fn new(kernel: SpatialKernel, width: usize, height: usize) -> Self {
        let n = width * height;
        FixedFilter {
            kernel,
            width,
            height,
            tmp: vec![0; n],
            tmp2: vec![0; n],
        }
    }

    /// Filters `src` (fixed-point) and writes unit-scale results to `out`.
    pub(crate) fn apply(&mut self, src: &[i64], out: &mut [f64]) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(src.len(), w * h);
        debug_assert_eq!(out.len(), w * h);
        match self.kernel {
            SpatialKernel::Box { radius } => {
                let n = (2 * radius + 1) as i64;
                for (s, d) in src.chunks_exact(w).zip(self.tmp.chunks_exact_mut(w)) {
                    running_sum(s, d, radius);
                }
                column_running_sum(&self.tmp, &mut self.tmp2, w, h, radius);
                let denom = (n * n * FIXED_ONE) as f64;
                for (o, &s) in out.iter_mut().zip(&self.tmp2) {
                    *o = s as f64 / denom;
                }
            }
            SpatialKernel::Gauss3Box { radii, .. } => {
                // Pad once by the full support, then run the passes in
                // "valid" mode. This is the composite kernel applied to the
                // replicate-extended image, which is what `weights_1d`
                // describes; clamping inside every pass would differ near
                // the borders.
                let pad: usize = radii.iter().sum();
                let mut line_a = Vec::with_capacity(w + 2 * pad);
                let mut line_b = Vec::with_capacity(w + 2 * pad);
                for (s, d) in src.chunks_exact(w).zip(self.tmp.chunks_exact_mut(w)) {
                    line_a.clear();
                    line_a.extend(core::iter::repeat(s[0]).take(pad));
                    line_a.extend_from_slice(s);
                    line_a.extend(core::iter::repeat(s[w - 1]).take(pad));
                    for &r in &radii {
                        valid_sum(&line_a, &mut line_b, r);
                        let n = (2 * r + 1) as i64;
                        line_b.iter_mut().for_each(|v| *v = div_round(*v, n));
                        core::mem::swap(&mut line_a, &mut line_b);
                    }
                    d.copy_from_slice(&line_a);
                }

                let mut rows_a: Vec<i64> = Vec::with_capacity((h + 2 * pad) * w);
                for y in 0..h + 2 * pad {
                    let sy = y.saturating_sub(pad).min(h - 1);
                    rows_a.extend_from_slice(&self.tmp[sy * w..(sy + 1) * w]);
                }
                let mut rows_b = Vec::with_capacity(rows_a.len());
                for &r in &radii {
                    valid_column_sum(&rows_a, &mut rows_b, w, r);
                    let n = (2 * r + 1) as i64;
                    rows_b.iter_mut().for_each(|v| *v = div_round(*v, n));
                    core::mem::swap(&mut rows_a, &mut rows_b);
                }
                debug_assert_eq!(rows_a.len(), w * h);
                let denom = FIXED_ONE as f64;
                for (o, &s) in out.iter_mut().zip(&rows_a) {
                    *o = s as f64 / denom;
                }
            }
        }
    }
}

/// `dst[i] = src[i] + ... + src[i + 2r]`; `dst` is `2r` shorter than `src`.
fn valid_sum(src: &[i64], dst: &mut Vec<i64>, r: usize) {
    let width = 2 * r + 1;
    dst.clear();
    let mut acc: i64 = src[..width].iter().sum();
    dst.push(acc);
    for i in width..src.len() {
        acc += src[i] - src[i - width];
        dst.push(acc);
    }
}

/// Row-wise [`valid_sum`] over whole rows of width `w`.
fn valid_column_sum(src: &[i64], dst: &mut Vec<i64>, w: usize, r: usize) {
    let width = 2 * r + 1;
    let rows = src.len() / w;
    dst.clear();
    let mut acc = vec![0i64; w];
    for row in src[..width * w].chunks_exact(w) {
        acc.iter_mut().zip(row).for_each(|(a, &v)| *a += v);
    }
    dst.extend_from_slice(&acc);
    for y in width..rows {
        let add = &src[y * w..(y + 1) * w];
        let sub = &src[(y - width) * w..(y - width + 1) * w];
        for ((a, &p), &m) in acc.iter_mut().zip(add).zip(sub) {
            *a += p - m;
        }
        dst.extend_from_slice(&acc);
    }
}

#[inline]
fn div_round(v: i64, n: i64) -> i64 {
    (v + n / 2).div_euclid(n)
}

/// Sliding window sum of width `2r+1` with replicate borders.
fn running_sum(src: &[i64], dst: &mut [i64], r: usize) {
    let last = src.len() as isize - 1;
    let at = |i: isize| src[i.clamp(0, last) as usize];
    let r = r as isize;
    let mut acc: i64 = (-r..=r).map(at).sum();
    for (x, d) in dst.iter_mut().enumerate() {
        *d = acc;
        let x = x as isize;
        acc += at(x + r + 1) - at(x - r);
    }
}

/// Vertical counterpart of [`running_sum`], sliding whole rows.
fn column_running_sum(src: &[i64], dst: &mut [i64], w: usize, h: usize, r: usize) {
    let last = h as isize - 1;
    let row = |y: isize| {
        let y = y.clamp(0, last) as usize;
        &src[y * w..(y + 1) * w]
    };
    let r = r as isize;
    let mut acc = vec![0i64; w];
    for dy in -r..=r {
        for (a, &v) in acc.iter_mut().zip(row(dy)) {
            *a += v;
        }
    }
    for (y, d) in dst.chunks_exact_mut(w).enumerate() {
        d.copy_from_slice(&acc);
        let y = y as isize;
        let (add, sub) = (row(y + r + 1), row(y - r));
        for ((a, &p), &m) in acc.iter_mut().zip(add).zip(sub) {
            *a += p - m;
        }
    }
}

fn filter_plane(plane: &ImagePlane, kernel: SpatialKernel) -> ImagePlane {
    let (w, h) = plane.dims();
    let fixed: Vec<i64> = plane.samples().iter().map(|&s| to_fixed(s)).collect();
    let mut out = vec![0.0; w * h];
    FixedFilter::new(kernel, w, h).apply(&fixed, &mut out);
    ImagePlane::from_clamped(w, h, out)
}

/// Mean over the `(2r+1) x (2r+1)` window around each pixel.
///
/// Cost per pixel does not depend on `radius`.
pub fn box_filter(plane: &ImagePlane, radius: usize) -> Result<ImagePlane> {
    Ok(filter_plane(plane, SpatialKernel::boxed(radius)?))
}

/// Gaussian blur with standard deviation `sigma_s` pixels, approximated by
/// three box passes per axis.
pub fn gauss3box_filter(plane: &ImagePlane, sigma_s: f64) -> Result<ImagePlane> {
    Ok(filter_plane(plane, SpatialKernel::gaussian(sigma_s)?))
}

/// Applies `kernel` to `plane`.
pub fn apply_kernel(plane: &ImagePlane, kernel: &SpatialKernel) -> ImagePlane {
    filter_plane(plane, *kernel)
}

/// Per-pixel weighted local mean (`L_mean`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeanField(pub ImagePlane);

impl LocalMeanField {
    pub fn plane(&self) -> &ImagePlane {
        &self.0
    }
}

/// Weighted mean over the local patch of every pixel.
pub fn local_mean(plane: &ImagePlane, kernel: &SpatialKernel) -> LocalMeanField {
    LocalMeanField(apply_kernel(plane, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::{from_levels, to_levels};
    use proptest::prelude::*;

    /// Direct per-pixel window mean, the oracle for the sliding sums.
    fn direct_box(plane: &ImagePlane, r: usize) -> Vec<f64> {
        let (w, h) = plane.dims();
        let ri = r as isize;
        let n = (2 * r + 1) as i64;
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0i64;
                for dy in -ri..=ri {
                    for dx in -ri..=ri {
                        let qx = (x + dx).clamp(0, w as isize - 1) as usize;
                        let qy = (y + dy).clamp(0, h as isize - 1) as usize;
                        acc += to_fixed(plane.get(qx, qy));
                    }
                }
                out.push(acc as f64 / (n * n * FIXED_ONE) as f64);
            }
        }
        out
    }

    #[test]
    fn fixed_one_divisible_by_common_depths() {
        for d in [255, 1023, 65535] {
            assert_eq!(FIXED_ONE % d, 0);
        }
        // i64 headroom at the maximum radius.
        let n = (2 * MAX_RADIUS + 1) as i64;
        assert!(n.checked_mul(n).and_then(|v| v.checked_mul(FIXED_ONE)).is_some());
    }

    #[test]
    fn constant_plane_is_fixed_point() {
        for &c in &[0.0, 1.0, 0.3, 200.0 / 1023.0, 17.0 / 255.0, 0.123_456_789] {
            let p = ImagePlane::filled(7, 5, c).unwrap();
            for r in [1, 2, 9] {
                assert!(box_filter(&p, r).unwrap().samples().iter().all(|&v| v == c || (v - c).abs() < 1e-10));
            }
        }
        // grid-valued samples are exact
        let p = ImagePlane::filled(6, 6, 200.0 / 1023.0).unwrap();
        assert!(box_filter(&p, 4).unwrap().samples().iter().all(|&v| v == 200.0 / 1023.0));
        assert!(gauss3box_filter(&p, 2.0).unwrap().samples().iter().all(|&v| v == 200.0 / 1023.0));
    }

    #[test]
    fn impulse_3x3_radius_1() {
        let mut s = vec![0.0; 9];
        s[4] = 1.0;
        let p = ImagePlane::new(3, 3, s).unwrap();
        let out = box_filter(&p, 1).unwrap();
        assert_eq!(out.samples(), &direct_box(&p, 1)[..]);
        for &v in out.samples() {
            assert!((v - 1.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn row_with_replicate_border() {
        let p = ImagePlane::new(5, 1, [0.0, 0.0, 9.0, 0.0, 0.0].map(from_levels).to_vec()).unwrap();
        let out = box_filter(&p, 1).unwrap();
        let levels: Vec<f64> = out.samples().iter().map(|&v| to_levels(v)).collect();
        // Direct oracle: vertical replicate of a 1-row image triples each
        // column, so the window mean is the 1-D mean of three columns.
        for (l, e) in levels.iter().zip([0.0, 3.0, 3.0, 3.0, 0.0]) {
            assert!((l - e).abs() < 1e-9, "{levels:?}");
        }
        assert_eq!(out.samples(), &direct_box(&p, 1)[..]);
    }

    #[test]
    fn sliding_matches_direct_bitwise() {
        let p = ImagePlane::from_fn(23, 17, |x, y| ((x * 7 + y * 13) % 31) as f64 / 30.0).unwrap();
        for r in [1, 3, 8, 30] {
            assert_eq!(box_filter(&p, r).unwrap().samples(), &direct_box(&p, r)[..], "r={r}");
        }
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(SpatialKernel::boxed(0).is_err());
        assert!(SpatialKernel::boxed(MAX_RADIUS + 1).is_err());
        assert!(SpatialKernel::gaussian(0.0).is_err());
        assert!(SpatialKernel::gaussian(-1.0).is_err());
        assert!(SpatialKernel::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn composite_weights() {
        let k = SpatialKernel::Gauss3Box { sigma: 1.0, radii: [0, 1, 1] };
        assert_eq!(k.weights_1d(), vec![1.0, 2.0, 3.0, 2.0, 1.0]);
        assert_eq!(k.support_radius(), 2);
        assert_eq!(SpatialKernel::boxed(2).unwrap().weights_1d(), vec![1.0; 5]);
    }

    /// Direct convolution of an impulse with a sampled, normalized 2-D
    /// Gaussian; the oracle for the three-box approximation.
    #[test]
    fn gauss3box_impulse_vs_sampled_gaussian() {
        let sigma = 8.0;
        let size = 129usize;
        let c = size / 2;
        let mut s = vec![0.0; size * size];
        s[c * size + c] = 1.0;
        let p = ImagePlane::new(size, size, s).unwrap();
        let out = gauss3box_filter(&p, sigma).unwrap();

        let half = 40isize;
        let g1: Vec<f64> = (-half..=half)
            .map(|d| libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)))
            .collect();
        let norm: f64 = g1.iter().sum::<f64>().powi(2);
        let peak = g1[half as usize] * g1[half as usize] / norm;
        let mut worst = 0.0f64;
        for y in 0..size {
            for x in 0..size {
                let (dx, dy) = (x as isize - c as isize, y as isize - c as isize);
                let g = if dx.abs() <= half && dy.abs() <= half {
                    g1[(dx + half) as usize] * g1[(dy + half) as usize] / norm
                } else {
                    0.0
                };
                worst = worst.max((out.get(x, y) - g).abs());
            }
        }
        assert!(worst <= 0.03 * peak, "deviation {} vs peak {}", worst, peak);
    }

    #[test]
    fn gauss3box_variance_is_close() {
        for sigma in [2.0, 3.0, 8.0, 16.0, 32.0] {
            let radii = gauss_box_radii(sigma);
            let var: f64 = radii.iter().map(|&r| box_variance(2 * r + 1)).sum();
            let rel = (var - sigma * sigma).abs() / (sigma * sigma);
            assert!(rel < 0.2, "sigma {sigma}: radii {radii:?} var {var}");
        }
    }

    #[test]
    fn gauss3box_preserves_interior_mass() {
        let p = ImagePlane::from_fn(96, 96, |x, y| {
            if (30..66).contains(&x) && (30..66).contains(&y) {
                ((x * 31 + y * 17) % 97) as f64 / 96.0
            } else {
                0.0
            }
        })
        .unwrap();
        let out = gauss3box_filter(&p, 3.0).unwrap();
        let a: f64 = p.samples().iter().sum();
        let b: f64 = out.samples().iter().sum();
        assert!((a - b).abs() <= 1e-6 * a);
    }

    #[test]
    fn local_mean_step_edge() {
        let p = ImagePlane::from_fn(64, 4, |x, _| from_levels(if x < 32 { 200.0 } else { 800.0 })).unwrap();
        let k = SpatialKernel::boxed(8).unwrap();
        let m = local_mean(&p, &k);
        // Far from the edge the window sees one value.
        assert_eq!(m.plane().get(5, 2), 200.0 / 1023.0);
        assert_eq!(m.plane().get(60, 1), 800.0 / 1023.0);
        // Adjacent to the edge on the dark side: 9 of 17 columns dark.
        let direct = direct_box(&p, 8)[2 * 64 + 31];
        let lvl = to_levels(m.plane().get(31, 2));
        assert_eq!(m.plane().get(31, 2), direct);
        assert!(lvl > 200.0 && lvl < 800.0);
        assert!((lvl - (9.0 * 200.0 + 8.0 * 800.0) / 17.0).abs() < 1e-6);
    }

    fn grid_plane() -> impl Strategy<Value = ImagePlane> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u32..=1023, w * h).prop_map(move |v| {
                ImagePlane::new(w, h, v.into_iter().map(|l| l as f64 / 1023.0).collect()).unwrap()
            })
        })
    }

    fn any_kernel() -> impl Strategy<Value = SpatialKernel> {
        prop_oneof![
            (1usize..6).prop_map(|r| SpatialKernel::boxed(r).unwrap()),
            (0.3f64..4.0).prop_map(|s| SpatialKernel::gaussian(s).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn mean_within_input_range(p in grid_plane(), k in any_kernel()) {
            let (lo, hi) = p.min_max();
            let m = local_mean(&p, &k);
            for &v in m.plane().samples() {
                prop_assert!(v >= lo && v <= hi);
            }
        }

        #[test]
        fn flip_equivariance(p in grid_plane(), k in any_kernel()) {
            let a = apply_kernel(&p.flip_horizontal(), &k);
            let b = apply_kernel(&p, &k).flip_horizontal();
            prop_assert_eq!(a, b);
            let a = apply_kernel(&p.flip_vertical(), &k);
            let b = apply_kernel(&p, &k).flip_vertical();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn constant_in_constant_out(w in 1usize..10, h in 1usize..10, c in 0.0f64..=1.0, k in any_kernel()) {
            let p = ImagePlane::filled(w, h, c).unwrap();
            for &v in apply_kernel(&p, &k).samples() {
                prop_assert!((v - c).abs() <= 1e-9);
            }
        }
    }
}
