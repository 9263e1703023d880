// Calibrate from a noisy synthetic three-view scene.

use radcal::calibration::{calibrate, OptimizerOptions};
use radcal::cli::formats::IntrinsicsJson;
use radcal::cli::synth::{generate, DistortionJson, GridSpec, PoseRanges, SynthSpec};
use radcal::DistortionModel;

pub fn run_example() -> radcal::Result<f64> {
    let spec = SynthSpec {
        grid: GridSpec { rows: 8, cols: 8, spacing: 0.03 },
        views: 3,
        poses: PoseRanges::default(),
        intrinsics: IntrinsicsJson { alpha: 800.0, beta: 800.0, gamma: 0.2, u0: 320.0, v0: 240.0 },
        distortion: DistortionJson { model: DistortionModel::Model3, k1: -0.12, k2: -0.14 },
        noise_sigma: 0.2,
        seed: 11,
    };
    let scene = generate(&spec)?;
    let cal = calibrate(&scene.correspondences, DistortionModel::Model3, &OptimizerOptions::default())?;

    let linear = &cal.linear.intrinsics;
    let r = &cal.refinement.result;
    println!("linear  alpha {:.2} beta {:.2} u0 {:.2} v0 {:.2}", linear.alpha, linear.beta, linear.u0, linear.v0);
    println!(
        "refined alpha {:.2} beta {:.2} gamma {:.3} u0 {:.2} v0 {:.2} k1 {:.4} k2 {:.4}",
        r.intrinsics.alpha,
        r.intrinsics.beta,
        r.intrinsics.gamma,
        r.intrinsics.u0,
        r.intrinsics.v0,
        r.distortion.k1(),
        r.distortion.k2()
    );
    println!(
        "J {:.4} -> {:.4} in {} iterations, rms {:.3} px",
        cal.refinement.stats.j_init, r.j_final, cal.refinement.stats.iterations, r.rms_px
    );
    Ok(r.rms_px)
}

#[allow(dead_code)]
fn main() -> radcal::Result<()> {
    run_example().map(|_| ())
}
