//! Command-line front end.
//!
//! Every command writes its report to `out`, diagnostics to `err`, and
//! returns the process exit code:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 2    | unreadable or malformed input                        |
//! | 3    | singular or degenerate calibration configuration     |
//! | 4    | optimizer hit its caps (output still written)        |
//! | 5    | some points had no undistortion solution             |
//! | 6    | localization geometry failure                        |

pub mod formats;
pub mod synth;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::Serialize;

use crate::calibration::{self, CorrespondenceSet, OptimizerOptions};
use crate::distortion::{distort_pixel, undistort_pixel, DistortionModel};
use crate::error::Error;
use crate::geometry::{PixelPoint, WorldPoint};
use crate::localizer::{self, LineMap, LocalizeOptions};
use formats::{CalibrationFile, PoseFile};

pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
    pub const NO_SOLUTION: i32 = 5;
    pub const GEOMETRY: i32 = 6;
}

#[derive(Debug, Parser)]
#[command(name = "radcal", version, about = "Planar camera calibration and analytical radial undistortion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate intrinsics, distortion and poses from planar correspondences.
    Calibrate(CalibrateArgs),
    /// Calibrate under all three distortion models and tabulate the results.
    Compare(CompareArgs),
    /// Undistort (or distort) a table of pixel coordinates.
    Undistort(UndistortArgs),
    /// Recover yaw and position error from one observed ground line.
    Localize(LocalizeArgs),
    /// Generate a synthetic correspondence file and its ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct OptimizerFlags {
    #[arg(long, default_value_t = 1e-5)]
    pub tol_x: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_fun: f64,
    #[arg(long, default_value_t = 120)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 8000)]
    pub max_fun_evals: usize,
}

impl From<OptimizerFlags> for OptimizerOptions {
    fn from(f: OptimizerFlags) -> Self {
        Self {
            tol_x: f.tol_x,
            tol_fun: f.tol_fun,
            max_iter: f.max_iter,
            max_fun_evals: f.max_fun_evals,
        }
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Distortion model: 1, 2 or 3.
    #[arg(long)]
    pub model: DistortionModel,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
    /// Emit the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Args)]
pub struct UndistortArgs {
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Direction::Inverse)]
    pub direction: Direction,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub pose: PathBuf,
    /// Mapped line endpoints `Ax,Ay,Bx,By` on the ground plane.
    #[arg(long, value_parser = parse_quad, allow_hyphen_values = true)]
    pub line_map: [f64; 4],
    /// Observed distorted endpoints `uA,vA,uB,vB` in pixels.
    #[arg(long, value_parser = parse_quad, allow_hyphen_values = true)]
    pub observed: [f64; 4],
    /// Try both endpoint orderings.
    #[arg(long)]
    pub try_both_orderings: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Ground-truth sidecar; defaults to `<output>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number `{p}`")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated numbers, got {}", v.len()))
}

/// Failure carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::new(exit::PARSE, format!("{}: {e}", path.display()))
    }
}

fn calibration_error(e: Error) -> CliError {
    let code = match e {
        Error::InvalidInput(_) => exit::PARSE,
        Error::InsufficientViews { required, got } => {
            return CliError::new(
                exit::DEGENERATE,
                format!("calibration needs at least {required} views, input has {got}"),
            )
        }
        _ => exit::DEGENERATE,
    };
    CliError::new(code, e.to_string())
}

fn geometry_error(e: Error) -> CliError {
    let cause = match e {
        Error::RayParallelToGround => "RayParallelToGround",
        Error::PointBehindCamera { .. } => "PointBehindCamera",
        Error::DegenerateLine => "DegenerateLine",
        Error::EndpointsCoincide => "EndpointsCoincide",
        Error::NoRealSolution { .. } => "NoRealSolution",
        Error::NotConverged { .. } => "NotConverged",
        Error::InvalidInput(_) => return CliError::new(exit::PARSE, e.to_string()),
        _ => "GeometryFailure",
    };
    CliError::new(exit::GEOMETRY, format!("{cause}: {e}"))
}

fn read_correspondences(path: &Path) -> Result<CorrespondenceSet, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    formats::read_correspondences(f).map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    formats::write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Parse `argv` and run; returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                exit::PARSE
            } else {
                exit::OK
            }
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Undistort(a) => cmd_undistort(&a, out),
        Command::Localize(a) => cmd_localize(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let opts: OptimizerOptions = args.optimizer.into();
    opts.validate().map_err(calibration_error)?;
    let corr = read_correspondences(&args.input)?;
    let cal = calibration::calibrate(&corr, args.model, &opts).map_err(calibration_error)?;
    let refined = &cal.refinement;
    let converged = refined.converged();
    let file = CalibrationFile::from_result(&refined.result, &opts, converged);
    write_file(&args.output, file.to_json().as_bytes())?;

    for id in &cal.linear.dropped_views {
        let _ = writeln!(out, "dropped view {id}: homography estimation failed");
    }
    let _ = writeln!(out, "J_init: {}", refined.stats.j_init);
    let _ = writeln!(out, "J_final: {}", refined.result.j_final);
    let _ = writeln!(out, "iterations: {}", refined.stats.iterations);
    let _ = writeln!(out, "rms_px: {}", refined.result.rms_px);
    if !converged {
        let _ = writeln!(
            out,
            "warning: optimizer stopped on {:?}; best parameters written",
            refined.stats.termination
        );
        return Ok(exit::NOT_CONVERGED);
    }
    Ok(exit::OK)
}

/// Row labels of the comparison table.
pub const COMPARE_ROWS: [&str; 8] = ["J", "alpha", "gamma", "u0", "beta", "v0", "k1", "k2"];

pub fn format_comparison(report: &calibration::ComparisonReport) -> String {
    let mut s = format!("{:<8}", "");
    for row in &report.rows {
        s.push_str(&format!("{:>16}", row.model.to_string()));
    }
    s.push('\n');
    for (i, label) in COMPARE_ROWS.iter().enumerate() {
        s.push_str(&format!("{label:<8}"));
        for row in &report.rows {
            let cell = match &row.fit {
                Some(f) => {
                    let v = [f.j, f.alpha, f.gamma, f.u0, f.beta, f.v0, f.k1, f.k2][i];
                    format!("{v:>16.6}")
                }
                None => format!("{:>16}", "failed"),
            };
            s.push_str(&cell);
        }
        s.push('\n');
    }
    for row in &report.rows {
        if let Some(e) = &row.error {
            s.push_str(&format!("{}: {e}\n", row.model));
        }
    }
    s
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let opts: OptimizerOptions = args.optimizer.into();
    opts.validate().map_err(calibration_error)?;
    let corr = read_correspondences(&args.input)?;
    let report = calibration::compare_models(&corr, &opts).map_err(calibration_error)?;
    if args.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        let _ = write!(out, "{}", format_comparison(&report));
    }
    let failed = report.rows.iter().any(|r| r.fit.is_none());
    let capped = report
        .rows
        .iter()
        .any(|r| r.fit.as_ref().is_some_and(|f| !f.converged));
    Ok(if failed {
        exit::DEGENERATE
    } else if capped {
        exit::NOT_CONVERGED
    } else {
        exit::OK
    })
}

pub fn cmd_undistort(args: &UndistortArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let calib = CalibrationFile::load(&args.calib).map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let a = calib.intrinsics().map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let spec = calib.distortion().map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let f = fs::File::open(&args.points).map_err(|e| CliError::io(&args.points, e))?;
    let pts = formats::read_points(f)
        .map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", args.points.display())))?;

    let mut failed = 0usize;
    let mapped: Vec<PixelPoint> = pts
        .iter()
        .map(|&p| match args.direction {
            Direction::Forward => distort_pixel(&spec, p, &a),
            Direction::Inverse => undistort_pixel(&spec, p, &a).unwrap_or_else(|_| {
                failed += 1;
                PixelPoint::new(f64::NAN, f64::NAN)
            }),
        })
        .collect();
    let mut buf = Vec::new();
    formats::write_points(&mut buf, &mapped).map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    write_file(&args.output, &buf)?;
    let _ = writeln!(out, "points: {}, failed: {failed}", pts.len());
    Ok(if failed > 0 { exit::NO_SOLUTION } else { exit::OK })
}

#[derive(Debug, Serialize)]
struct LocalizeReport {
    delta_theta_rad: f64,
    delta_theta_deg: f64,
    t1: [f64; 3],
    recovered_a: [f64; 3],
    recovered_b: [f64; 3],
    length_discrepancy: f64,
    swapped: bool,
}

pub fn cmd_localize(args: &LocalizeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let calib = CalibrationFile::load(&args.calib).map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let a = calib.intrinsics().map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let spec = calib.distortion().map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    let pose = PoseFile::load(&args.pose)
        .map_err(|e| CliError::new(exit::PARSE, e.to_string()))?
        .extrinsics();
    let [ax, ay, bx, by] = args.line_map;
    let map = LineMap::new(WorldPoint::planar(ax, ay), WorldPoint::planar(bx, by)).map_err(geometry_error)?;
    let [ua, va, ub, vb] = args.observed;
    let opts = LocalizeOptions {
        try_both_orderings: args.try_both_orderings,
    };
    let fix = localizer::localize(
        &map,
        [PixelPoint::new(ua, va), PixelPoint::new(ub, vb)],
        &a,
        &spec,
        &pose,
        opts,
    )
    .map_err(geometry_error)?;

    let v3 = |v: Vector3<f64>| [v.x, v.y, v.z];
    let report = LocalizeReport {
        delta_theta_rad: fix.delta_theta,
        delta_theta_deg: fix.delta_theta.to_degrees(),
        t1: v3(fix.t1),
        recovered_a: v3(fix.recovered_a.to_vector()),
        recovered_b: v3(fix.recovered_b.to_vector()),
        length_discrepancy: fix.length_discrepancy,
        swapped: fix.swapped,
    };
    if args.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        let _ = writeln!(
            out,
            "delta_theta: {} rad ({} deg)",
            report.delta_theta_rad, report.delta_theta_deg
        );
        let _ = writeln!(out, "t1: {:?}", report.t1);
        let _ = writeln!(out, "recovered A: {:?}", report.recovered_a);
        let _ = writeln!(out, "recovered B: {:?}", report.recovered_b);
        let _ = writeln!(out, "segment length discrepancy: {}", report.length_discrepancy);
    }
    Ok(exit::OK)
}

/// Default sidecar path: `corr.csv` → `corr.truth.json`.
pub fn truth_path(output: &Path) -> PathBuf {
    output.with_extension("truth.json")
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = fs::read_to_string(&args.spec).map_err(|e| CliError::io(&args.spec, e))?;
    let spec: synth::SynthSpec = serde_json::from_str(&text).map_err(|e| CliError::io(&args.spec, e))?;
    let scene = synth::generate(&spec).map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;

    let mut csv = Vec::new();
    formats::write_correspondences(&mut csv, &scene.correspondences)
        .map_err(|e| CliError::new(exit::PARSE, e.to_string()))?;
    write_file(&args.output, &csv)?;

    let truth = calibration::CalibrationResult::evaluate(
        &scene.correspondences,
        scene.intrinsics,
        scene.distortion,
        scene.extrinsics.clone(),
    )
    .map_err(calibration_error)?;
    let truth_file = CalibrationFile::from_result(&truth, &OptimizerOptions::default(), true);
    let truth_out = args.truth.clone().unwrap_or_else(|| truth_path(&args.output));
    write_file(&truth_out, truth_file.to_json().as_bytes())?;
    let _ = writeln!(
        out,
        "wrote {} rows over {} views to {}; ground truth in {}",
        scene.correspondences.num_points(),
        scene.correspondences.views().len(),
        args.output.display(),
        truth_out.display()
    );
    Ok(exit::OK)
}
