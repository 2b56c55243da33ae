//! Command-line front end for the QHSL toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error,
//! 3 verification failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use qhsl_core::color::LightnessMapping;
use qhsl_core::image::{
    build_preparation_circuit, simulate_preparation, Backend, DenseImageState, QhslImage, StructuredState,
    DEFAULT_QUBIT_BUDGET,
};
use qhsl_core::io;
use qhsl_core::retrieval::{retrieve_image, BranchSelection, RetrievalMode, RetrievalReport};
use qhsl_core::transforms::{
    apply_transform, apply_transform_circuit, pseudocolor, pseudocolor_via_circuit, AxisPredicate,
    LightnessPredicate, RegionConstraint, RegionMethod, RegisterPattern, Transform,
};
use qhsl_core::{QhslError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Largest amplitude difference `verify` accepts between backends.
const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "qhsl", version, about = "Quantum hue-saturation-lightness image toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a PPM/PGM/PNG image into a QHSL dump.
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Render a QHSL dump or retrieval report as PPM/PNG.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the preparation circuit of a dump as circuit text.
    Prepare {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply a color transform, optionally restricted to a region.
    Transform {
        /// QHSL dump or raster image.
        input: PathBuf,
        /// `.ppm`/`.png` writes an image, anything else a dump.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        op: TransformOp,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        exec: ExecArgs,
        /// Also write the transform circuit as circuit text.
        #[arg(long)]
        circuit_out: Option<PathBuf>,
    },
    /// Map gray levels to hues with a `lo hi hue_degrees` map file.
    Pseudocolor {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Recover hue, saturation and lightness from measurement statistics.
    Retrieve {
        input: PathBuf,
        /// Report text, or `.ppm`/`.png` to render the recovered image.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Shots per measurement basis per pixel.
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BranchArg::Oracle)]
        branch: BranchArg,
        #[arg(long, value_enum, default_value_t = BackendArg::Structured)]
        backend: BackendArg,
        #[arg(long, default_value_t = DEFAULT_QUBIT_BUDGET)]
        budget: usize,
    },
    /// Cross-check the dense and structured backends on a small dump.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUBIT_BUDGET)]
        budget: usize,
        #[command(flatten)]
        op: TransformOp,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Patterns)]
        method: MethodArg,
    },
}

#[derive(Debug, Args)]
struct LoadArgs {
    /// Grid exponent for raster input (side 2^n); smallest fit by default.
    #[arg(long)]
    n: Option<u32>,
    /// Lightness qubits for raster input.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(0..=16))]
    q: u32,
    /// Manual lightness table (one fraction per line, 2^q lines).
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct TransformOp {
    /// Hue rotation in degrees.
    #[arg(long, allow_hyphen_values = true)]
    hue_shift: Option<f64>,
    /// Polar-angle rotation of the chroma qubit in degrees.
    #[arg(long, allow_hyphen_values = true)]
    sat_shift: Option<f64>,
    /// Saturating lightness addition.
    #[arg(long)]
    light_add: Option<u32>,
    /// Lightness subtraction clamped at zero.
    #[arg(long)]
    light_sub: Option<u32>,
    /// Invert lightness bits and complement the hue.
    #[arg(long)]
    invert: bool,
}

impl TransformOp {
    fn transform(&self) -> Option<Transform> {
        if let Some(d) = self.hue_shift {
            Some(Transform::HueShift(d.to_radians()))
        } else if let Some(d) = self.sat_shift {
            Some(Transform::SaturationShift(d.to_radians()))
        } else if let Some(k) = self.light_add {
            Some(Transform::LightnessAdd(k))
        } else if let Some(k) = self.light_sub {
            Some(Transform::LightnessSub(k))
        } else if self.invert {
            Some(Transform::Invert)
        } else {
            None
        }
    }
}

#[derive(Debug, Args)]
struct RegionArgs {
    /// Select lightness codes `a:b` (inclusive).
    #[arg(long, value_parser = parse_range)]
    light_range: Option<(u32, u32)>,
    /// Select lightness codes at most this value.
    #[arg(long, conflicts_with = "light_range")]
    light_max: Option<u32>,
    /// Select lightness codes at least this value.
    #[arg(long, conflicts_with_all = ["light_range", "light_max"])]
    light_min: Option<u32>,
    /// Select rows `a:b` (inclusive).
    #[arg(long, value_parser = parse_range)]
    y_range: Option<(u32, u32)>,
    /// Select columns `a:b` (inclusive).
    #[arg(long, value_parser = parse_range)]
    x_range: Option<(u32, u32)>,
    /// Row bit pattern, most significant first, `x` for free (e.g. `1x`).
    #[arg(long, conflicts_with = "y_range")]
    y_bits: Option<String>,
    /// Column bit pattern, most significant first.
    #[arg(long, conflicts_with = "x_range")]
    x_bits: Option<String>,
}

fn parse_range(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `a:b`, found {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|_| format!("bad bound {v:?}"));
    Ok((parse(a)?, parse(b)?))
}

impl RegionArgs {
    fn constraint(&self) -> Result<Option<RegionConstraint>> {
        let lightness = match (self.light_range, self.light_max, self.light_min) {
            (Some((a, b)), _, _) => Some(LightnessPredicate::Between(a, b)),
            (_, Some(b), _) => Some(LightnessPredicate::AtMost(b)),
            (_, _, Some(a)) => Some(LightnessPredicate::AtLeast(a)),
            _ => None,
        };
        let axis = |range: Option<(u32, u32)>, bits: &Option<String>| -> Result<Option<AxisPredicate>> {
            Ok(match (range, bits) {
                (Some((a, b)), _) => Some(AxisPredicate::Range(a, b)),
                (_, Some(p)) => Some(AxisPredicate::Bits(RegisterPattern::parse(p)?)),
                _ => None,
            })
        };
        let region = RegionConstraint {
            lightness,
            y: axis(self.y_range, &self.y_bits)?,
            x: axis(self.x_range, &self.x_bits)?,
        };
        Ok((region != RegionConstraint::default()).then_some(region))
    }
}

#[derive(Debug, Args)]
struct ExecArgs {
    /// Update pixel values directly, or run the circuit on a simulator.
    #[arg(long, value_enum, default_value_t = EngineArg::Pixel)]
    engine: EngineArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Patterns)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = BackendArg::Structured)]
    backend: BackendArg,
    /// Qubit cap for the dense backend.
    #[arg(long, default_value_t = DEFAULT_QUBIT_BUDGET)]
    budget: usize,
}

impl ExecArgs {
    fn backend(&self) -> Backend {
        self.backend.resolve(self.budget)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Pixel,
    Circuit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Patterns,
    Comparator,
}

impl From<MethodArg> for RegionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Patterns => RegionMethod::Patterns,
            MethodArg::Comparator => RegionMethod::Comparator,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Structured,
    Dense,
}

impl BackendArg {
    fn resolve(self, budget: usize) -> Backend {
        match self {
            BackendArg::Structured => Backend::Structured,
            BackendArg::Dense => Backend::Dense { budget },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Shots,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BranchArg {
    Oracle,
    Rejection,
}

enum Failure {
    Usage(String),
    Data(QhslError),
    Verify(String),
}

impl From<QhslError> for Failure {
    fn from(e: QhslError) -> Self {
        Failure::Data(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            EXIT_VERIFY
        }
    }
}

fn is_raster_path(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm" | "pnm" | "pgm" | "png")
    )
}

/// First whitespace-separated token of a text file, if it is text.
fn leading_token(path: &Path) -> Result<Option<String>> {
    let bytes = std::fs::read(path)?;
    let head = &bytes[..bytes.len().min(64)];
    Ok(std::str::from_utf8(head)
        .ok()
        .and_then(|s| s.split_whitespace().next())
        .map(str::to_string))
}

fn mapping_for(load: &LoadArgs) -> Result<LightnessMapping> {
    match &load.table {
        None => Ok(LightnessMapping::Average),
        Some(p) => {
            let abs = std::path::absolute(p)?;
            Ok(LightnessMapping::Manual(io::read_manual_table(&abs, load.q)?))
        }
    }
}

/// Load a dump, or a raster through the load options.
fn load_input(path: &Path, load: &LoadArgs) -> Result<QhslImage> {
    match leading_token(path)?.as_deref() {
        Some("QHSL") => io::read_dump(path),
        _ => io::load_image(path, load.n, load.q, &mapping_for(load)?),
    }
}

fn write_output(img: &QhslImage, path: &Path) -> Result<()> {
    if is_raster_path(path) {
        io::save_image(img, path)
    } else {
        io::write_dump(img, path)
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Encode { input, output, load } => {
            let img = io::load_image(&input, load.n, load.q, &mapping_for(&load)?)?;
            io::write_dump(&img, &output)?;
        }
        Command::Decode { input, output } => match leading_token(&input)?.as_deref() {
            Some("QHSL-REPORT") => io::save_report(&io::read_report(&input)?, &output)?,
            _ => io::save_image(&io::read_dump(&input)?, &output)?,
        },
        Command::Prepare { input, output } => {
            let img = io::read_dump(&input)?;
            io::export_circuit(&build_preparation_circuit(&img)?, &output)?;
        }
        Command::Transform {
            input,
            output,
            load,
            op,
            region,
            exec,
            circuit_out,
        } => {
            let t = op
                .transform()
                .ok_or_else(|| Failure::Usage("choose one of --hue-shift, --sat-shift, --light-add, --light-sub, --invert".into()))?;
            let img = load_input(&input, &load)?;
            let region = region.constraint()?;
            let method = exec.method.into();
            if let Some(path) = circuit_out {
                let c = qhsl_core::transforms::build_transform_circuit(
                    img.layout(),
                    t,
                    region.as_ref(),
                    method,
                    exec.backend().max_qubits(),
                )?;
                io::export_circuit(&c, &path)?;
            }
            let out = match exec.engine {
                EngineArg::Pixel => apply_transform(&img, t, region.as_ref())?,
                EngineArg::Circuit => apply_transform_circuit(&img, t, region.as_ref(), method, exec.backend())?,
            };
            write_output(&out, &output)?;
        }
        Command::Pseudocolor {
            input,
            output,
            map,
            load,
            exec,
        } => {
            let img = load_input(&input, &load)?;
            let map = io::read_pseudocolor_map(&map, img.q())?;
            let out = match exec.engine {
                EngineArg::Pixel => pseudocolor(&img, &map)?,
                EngineArg::Circuit => pseudocolor_via_circuit(&img, &map, exec.method.into(), exec.backend())?,
            };
            write_output(&out, &output)?;
        }
        Command::Retrieve {
            input,
            output,
            mode,
            shots,
            seed,
            branch,
            backend,
            budget,
        } => {
            let img = io::read_dump(&input)?;
            let mode = match mode {
                ModeArg::Exact => RetrievalMode::Exact,
                ModeArg::Shots => {
                    if shots == 0 {
                        return Err(Failure::Usage("--shots must be at least 1".into()));
                    }
                    RetrievalMode::Shots {
                        shots,
                        seed,
                        branch: match branch {
                            BranchArg::Oracle => BranchSelection::Oracle,
                            BranchArg::Rejection => BranchSelection::Rejection,
                        },
                    }
                }
            };
            let report = retrieve(&img, mode, backend.resolve(budget))?;
            if is_raster_path(&output) {
                io::save_report(&report, &output)?;
            } else {
                io::write_report(&report, &output)?;
            }
        }
        Command::Verify {
            input,
            budget,
            op,
            region,
            method,
        } => {
            let img = io::read_dump(&input)?;
            verify(&img, budget, op.transform(), region.constraint()?, method.into())?;
        }
    }
    Ok(())
}

fn retrieve(img: &QhslImage, mode: RetrievalMode, backend: Backend) -> Result<RetrievalReport> {
    match backend {
        Backend::Structured => retrieve_image(&StructuredState::from_image(img), mode, img.mapping()),
        Backend::Dense { budget } => retrieve_image(&DenseImageState::prepare(img, budget)?, mode, img.mapping()),
    }
}

fn verify(
    img: &QhslImage,
    budget: usize,
    t: Option<Transform>,
    region: Option<RegionConstraint>,
    method: RegionMethod,
) -> CliResult {
    let dense = simulate_preparation(img, budget)?;
    let structured = StructuredState::from_image(img).to_dense(budget)?;
    let diff = dense
        .amplitudes()
        .iter()
        .zip(structured.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("preparation: max amplitude difference {diff:.3e}");
    if diff > VERIFY_TOLERANCE {
        return Err(Failure::Verify(format!("preparation differs by {diff:.3e}")));
    }
    if let Some(t) = t {
        let a = apply_transform_circuit(img, t, region.as_ref(), method, Backend::Dense { budget })?;
        let b = apply_transform_circuit(img, t, region.as_ref(), method, Backend::Structured)?;
        let sa = StructuredState::from_image(&a).to_dense(budget)?;
        let sb = StructuredState::from_image(&b).to_dense(budget)?;
        let diff = sa
            .amplitudes()
            .iter()
            .zip(sb.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        println!("transform: max amplitude difference {diff:.3e}");
        if diff > VERIFY_TOLERANCE {
            return Err(Failure::Verify(format!("transform differs by {diff:.3e}")));
        }
    }
    println!("ok");
    Ok(())
}
