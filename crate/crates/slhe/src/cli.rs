//! Command-line front end.
//!
//! Exit codes: 0 success (including `--help` / `--version`), 1 runtime
//! failure (unreadable or malformed input, dimension mismatch), 2 usage or
//! configuration error. Outputs are written through a temporary file in the
//! destination directory and renamed into place, so a failed run leaves no
//! output behind.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use slhe_core::engine::tone_map_with;
use slhe_core::hvs::{measure_halo, perceived_luminance, sigma_sweep_with, stacked_li_report, DoGParams, StepEdgeSpec, SweepMode};
use slhe_core::plane::luminance_of;
use slhe_core::{Image, ImagePlane};
use thiserror::Error;

use crate::bench::{bench_engines, bench_image, bench_table, BenchOptions};
use crate::config::{parse_config, ConfigError, RunConfig};
use crate::pnm::{decode_pnm, encode_pnm, PnmError};
use crate::report::{halo_text, policy_label, sweep_csv};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

impl From<slhe_core::Error> for CliError {
    fn from(e: slhe_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn pnm_err(path: &Path, e: PnmError) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "slhe", version, about = "Halo-controlled smoothed local histogram equalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Tone-mapping parameters; each overrides the same key from `--config`.
#[derive(Debug, Args, Default)]
struct RunFlags {
    /// Tonal width for pixels far below their local mean (levels)
    #[arg(long)]
    sigma_min: Option<String>,
    /// Upper end of the tonal width range (levels)
    #[arg(long)]
    sigma_max: Option<String>,
    /// Window radius in pixels
    #[arg(long)]
    radius: Option<String>,
    /// Window shape: box or gauss
    #[arg(long)]
    kernel: Option<String>,
    /// Gaussian window scale in pixels (default radius / 2)
    #[arg(long)]
    sigma_s: Option<String>,
    /// Box radius of the local-mean window (default: the equalizer window)
    #[arg(long)]
    mean_radius: Option<String>,
    /// Histogram nodes for the binned engine
    #[arg(long)]
    bins: Option<String>,
    /// Tonal width table rungs for the binned engine
    #[arg(long)]
    lut_levels: Option<String>,
    /// reference or binned
    #[arg(long)]
    engine: Option<String>,
    /// Group policy: paper or swapped
    #[arg(long)]
    policy: Option<String>,
    /// Blend strength in [0, 1]
    #[arg(long)]
    alpha: Option<String>,
    /// Chroma exponent in [0, 1] for color inputs
    #[arg(long)]
    saturation: Option<String>,
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunFlags {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path).map_err(|e| io_err(path, e))?,
            None => String::new(),
        };
        let pairs = [
            ("sigma_min", &self.sigma_min),
            ("sigma_max", &self.sigma_max),
            ("radius", &self.radius),
            ("kernel", &self.kernel),
            ("sigma_s", &self.sigma_s),
            ("mean_radius", &self.mean_radius),
            ("bins", &self.bins),
            ("lut_levels", &self.lut_levels),
            ("engine", &self.engine),
            ("policy", &self.policy),
            ("alpha", &self.alpha),
            ("saturation", &self.saturation),
        ];
        let overrides: Vec<(&str, &str)> = pairs
            .iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (*k, v)))
            .collect();
        Ok(parse_config(&text, &overrides)?)
    }
}

#[derive(Debug, Args)]
struct DogFlags {
    /// Center Gaussian scale in pixels
    #[arg(long, default_value_t = 1.0)]
    sigma_center: f64,
    /// Surround Gaussian scale in pixels
    #[arg(long, default_value_t = 3.0)]
    sigma_surround: f64,
    /// Surround weight k
    #[arg(long, default_value_t = 1.0)]
    surround_gain: f64,
    /// Response gain
    #[arg(long, default_value_t = 1.0)]
    response_gain: f64,
}

impl DogFlags {
    fn params(&self) -> Result<DoGParams, CliError> {
        let p = DoGParams {
            sigma_center: self.sigma_center,
            sigma_surround: self.sigma_surround,
            surround_gain: self.surround_gain,
            response_gain: self.response_gain,
        };
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Uniform,
    Adaptive,
}

fn parse_step(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected DARK,BRIGHT")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad level `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad level `{b}`"))?;
    Ok((a, b))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tone-map a PNM image
    Tonemap {
        input: PathBuf,
        output: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Measure halos on a synthetic step edge over a list of tonal widths
    Sweep {
        /// Widths in levels (sigma_max in adaptive mode)
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        /// Dark and bright levels
        #[arg(long, value_parser = parse_step, default_value = "200,800")]
        step: (f64, f64),
        /// Side of the square stimulus
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// First bright column (default size / 2)
        #[arg(long)]
        edge_column: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Uniform)]
        mode: Mode,
        /// Directory for the processed step images
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// CSV destination (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Compare halos of an original and a processed step-edge image
    HaloReport {
        original: PathBuf,
        processed: PathBuf,
        /// Dark and bright levels of the stimulus
        #[arg(long, value_parser = parse_step, default_value = "200,800")]
        step: (f64, f64),
        /// First bright column (default width / 2)
        #[arg(long)]
        edge_column: Option<usize>,
        /// Also write the report here
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        dog: DogFlags,
    },
    /// Apply the center-surround perceived-luminance model
    Perceive {
        input: PathBuf,
        output: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        dog: DogFlags,
    },
    /// Time the reference and binned engines
    Bench {
        /// Side of the square test pattern
        #[arg(long, default_value_t = 1024)]
        size: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,64")]
        radii: Vec<usize>,
        /// Rows of the strip the reference engine is timed on
        #[arg(long, default_value_t = 8)]
        reference_rows: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Also write the table here
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    builder.prefix(".slhe-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn save(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| io_err(path, e))
}

fn read_pnm(path: &Path) -> Result<(Image, u16), CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let d = decode_pnm(&bytes).map_err(|e| pnm_err(path, e))?;
    Ok((d.image, d.maxval))
}

fn gray(image: Image) -> ImagePlane {
    match image {
        Image::Gray(p) => p,
        Image::Color(c) => luminance_of(&c),
    }
}

fn output_path(positional: Option<PathBuf>, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    match (positional, flag) {
        (Some(_), Some(_)) => Err(CliError::Usage("give the output either positionally or with --out".into())),
        (Some(p), None) | (None, Some(p)) => Ok(p),
        (None, None) => Err(CliError::Usage("missing output path".into())),
    }
}

fn step_spec(step: (f64, f64), width: usize, height: usize, edge_column: Option<usize>) -> Result<StepEdgeSpec, CliError> {
    let spec = StepEdgeSpec {
        width,
        height,
        dark_level: step.0,
        bright_level: step.1,
        edge_column: edge_column.unwrap_or(width / 2),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn run(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let console = |e: io::Error| CliError::Runtime(format!("stdout: {e}"));
    match command {
        Command::Tonemap { input, output, out, run } => {
            let output = output_path(output, out)?;
            let settings = run.resolve()?.settings()?;
            let (image, maxval) = read_pnm(&input)?;
            let mapped = tone_map_with(&image, &settings)?;
            let bytes = encode_pnm(&mapped, maxval).map_err(|e| pnm_err(&output, e))?;
            save(&output, &bytes)
        }
        Command::Sweep {
            sigmas,
            step,
            size,
            edge_column,
            mode,
            profiles,
            out,
            run,
        } => {
            let cfg = run.resolve()?;
            let kernel = cfg.kernel()?;
            let spec = step_spec(step, size, size, edge_column)?;
            let mode = match mode {
                Mode::Uniform => SweepMode::Uniform,
                Mode::Adaptive => SweepMode::Adaptive {
                    sigma_min: cfg.sigma_min,
                    policies: vec![cfg.policy],
                },
            };
            let mut images = Vec::new();
            let keep = profiles.is_some();
            let rows = sigma_sweep_with(&spec, &sigmas, &kernel, &mode, |row, img| {
                if keep {
                    images.push((format!("sigma{}_{}.pgm", row.sigma, policy_label(row)), img.clone()));
                }
            })?;
            if let Some(dir) = profiles {
                std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                for (name, img) in images {
                    let path = dir.join(name);
                    let bytes = encode_pnm(&Image::Gray(img), 65535).map_err(|e| pnm_err(&path, e))?;
                    save(&path, &bytes)?;
                }
            }
            let csv = sweep_csv(&rows);
            match out {
                Some(path) => save(&path, csv.as_bytes()),
                None => stdout.write_all(csv.as_bytes()).map_err(console),
            }
        }
        Command::HaloReport {
            original,
            processed,
            step,
            edge_column,
            out,
            dog,
        } => {
            let dog = dog.params()?;
            let orig = gray(read_pnm(&original)?.0);
            let proc = gray(read_pnm(&processed)?.0);
            let (w, h) = orig.dims();
            let spec = step_spec(step, w, h, edge_column)?;
            let li = stacked_li_report(&orig, &proc, &spec, &dog)?;
            let text = halo_text(&measure_halo(&orig, &spec)?, &measure_halo(&proc, &spec)?, &li);
            stdout.write_all(text.as_bytes()).map_err(console)?;
            match out {
                Some(path) => save(&path, text.as_bytes()),
                None => Ok(()),
            }
        }
        Command::Perceive { input, output, out, dog } => {
            let output = output_path(output, out)?;
            let dog = dog.params()?;
            let (image, maxval) = read_pnm(&input)?;
            let perceived = perceived_luminance(&gray(image), &dog)?;
            let bytes = encode_pnm(&Image::Gray(perceived), maxval).map_err(|e| pnm_err(&output, e))?;
            save(&output, &bytes)
        }
        Command::Bench {
            size,
            radii,
            reference_rows,
            repeats,
            out,
            run,
        } => {
            if size < 256 {
                return Err(CliError::Usage("bench: --size must be at least 256".into()));
            }
            if radii.is_empty() || reference_rows == 0 || repeats == 0 {
                return Err(CliError::Usage("bench: radii, reference rows and repeats must be non-empty".into()));
            }
            let cfg = run.resolve()?;
            let opts = BenchOptions {
                reference_rows,
                repeats,
                sigma: cfg.sigma_params()?,
                equalizer: cfg.equalizer()?,
            };
            let image = bench_image(size)?;
            let table = bench_table(&bench_engines(&image, &radii, &opts)?);
            stdout.write_all(table.as_bytes()).map_err(console)?;
            match out {
                Some(path) => save(&path, table.as_bytes()),
                None => Ok(()),
            }
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                return 2;
            }
            let _ = stdout.write_all(text.as_bytes());
            return 0;
        }
    };
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "slhe: {e}");
            e.exit_code()
        }
    }
}
