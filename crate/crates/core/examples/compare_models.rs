// Fit all three distortion models to data generated under model1.

use radcal::calibration::{compare_models, ComparisonReport, OptimizerOptions};
use radcal::cli::format_comparison;
use radcal::cli::formats::IntrinsicsJson;
use radcal::cli::synth::{generate, DistortionJson, GridSpec, PoseRanges, SynthSpec};
use radcal::DistortionModel;

pub fn run_example() -> radcal::Result<ComparisonReport> {
    let spec = SynthSpec {
        grid: GridSpec { rows: 10, cols: 10, spacing: 0.1 },
        views: 5,
        poses: PoseRanges { tilt_deg: [15.0, 35.0], roll_deg: 20.0, distance: [0.9, 1.2], offset: 0.05 },
        intrinsics: IntrinsicsJson { alpha: 277.1, beta: 270.6, gamma: -0.57, u0: 154.0, v0: 119.8 },
        distortion: DistortionJson { model: DistortionModel::Model1, k1: -0.3435, k2: 0.1232 },
        noise_sigma: 0.3,
        seed: 21,
    };
    let scene = generate(&spec)?;
    let report = compare_models(&scene.correspondences, &OptimizerOptions::default())?;
    print!("{}", format_comparison(&report));
    Ok(report)
}

#[allow(dead_code)]
fn main() -> radcal::Result<()> {
    run_example().map(|_| ())
}
