//! Engine timing harness.
//!
//! The binned engine is timed on the full image. The reference engine is
//! timed on a strip of rows from the middle of the image (it still sees the
//! whole image as context) and its throughput is scaled from the strip; the
//! error column compares binned output against the reference on that strip.

use std::fmt::Write;
use std::time::{Duration, Instant};

use slhe_core::engine::{equalize_binned, equalize_reference_rows, EngineKind, EqualizerConfig};
use slhe_core::filter::local_mean;
use slhe_core::scale::MAX_LEVEL;
use slhe_core::sigma::build_sigma_field;
use slhe_core::{ImagePlane, Result, SigmaParams, SpatialKernel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Rows of the reference strip.
    pub reference_rows: usize,
    /// Each cell keeps the fastest of this many runs.
    pub repeats: usize,
    pub sigma: SigmaParams,
    pub equalizer: EqualizerConfig,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            reference_rows: 8,
            repeats: 3,
            sigma: SigmaParams::default(),
            equalizer: EqualizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub engine: EngineKind,
    pub radius: usize,
    /// Pixels actually processed per run.
    pub pixels: usize,
    pub wall: Duration,
    pub megapixels_per_second: f64,
    /// Max |engine - reference| in levels on the reference strip.
    pub max_error: f64,
}

/// Deterministic test pattern: a ramp, a hard step and two-scale texture.
pub fn bench_image(size: usize) -> Result<ImagePlane> {
    let n = size.max(1) as f64;
    ImagePlane::from_fn(size, size, |x, y| {
        let (u, v) = (x as f64 / n, y as f64 / n);
        let ramp = 0.15 + 0.35 * u;
        let step = if u > 0.6 && v > 0.3 { 0.3 } else { 0.0 };
        let texture = 0.08 * (u * 37.0).sin() * (v * 23.0).cos() + 0.04 * ((x * 7 + y * 13) % 17) as f64 / 17.0;
        ramp + step + texture
    })
}

fn fastest<T>(repeats: usize, mut run: impl FnMut() -> Result<T>) -> Result<(Duration, T)> {
    let mut best: Option<(Duration, T)> = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let out = run()?;
        let t = start.elapsed();
        if best.as_ref().map_or(true, |(b, _)| t < *b) {
            best = Some((t, out));
        }
    }
    Ok(best.expect("at least one run"))
}

fn mpx(pixels: usize, wall: Duration) -> f64 {
    pixels as f64 / wall.as_secs_f64().max(1e-9) / 1e6
}

/// Times both engines at every radius with a box window.
pub fn bench_engines(image: &ImagePlane, radii: &[usize], opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let (w, h) = image.dims();
    let strip = opts.reference_rows.clamp(1, h);
    let first = (h - strip) / 2;
    let rows = first..first + strip;
    let mut out = Vec::new();
    for &radius in radii {
        let kernel = SpatialKernel::boxed(radius)?;
        let sigmas = build_sigma_field(image, &local_mean(image, &kernel), &opts.sigma)?;

        let (ref_wall, reference) =
            fastest(opts.repeats, || equalize_reference_rows(image, &kernel, &sigmas, rows.clone()))?;
        let cfg = EqualizerConfig {
            engine: EngineKind::Binned,
            ..opts.equalizer
        };
        let (bin_wall, binned) = fastest(opts.repeats, || equalize_binned(image, &kernel, &sigmas, &cfg))?;

        let max_error = binned.samples()[first * w..(first + strip) * w]
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs() * MAX_LEVEL)
            .fold(0.0, f64::max);
        out.push(BenchRow {
            engine: EngineKind::Reference,
            radius,
            pixels: strip * w,
            wall: ref_wall,
            megapixels_per_second: mpx(strip * w, ref_wall),
            max_error: 0.0,
        });
        out.push(BenchRow {
            engine: EngineKind::Binned,
            radius,
            pixels: w * h,
            wall: bin_wall,
            megapixels_per_second: mpx(w * h, bin_wall),
            max_error,
        });
    }
    Ok(out)
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = String::from("engine     radius     pixels    wall_ms        MP/s  max_err\n");
    for r in rows {
        writeln!(
            s,
            "{:<10} {:>6} {:>10} {:>10.1} {:>11.4} {:>8.3}",
            r.engine.name(),
            r.radius,
            r.pixels,
            r.wall.as_secs_f64() * 1e3,
            r.megapixels_per_second,
            r.max_error
        )
        .expect("writing to a String");
    }
    s
}
