// Recover a robot's yaw and position error from one observed floor line.

use nalgebra::Vector3;
use radcal::distortion::{distort_normalized, DistortionModel, DistortionSpec};
use radcal::geometry::{IntrinsicMatrix, ViewExtrinsics, WorldPoint};
use radcal::localizer::{delta_rotation, localize, LineMap, LocalizationFix, LocalizeOptions};

pub fn run_example() -> radcal::Result<LocalizationFix> {
    let a = IntrinsicMatrix::new(400.0, 400.0, 0.0, 320.0, 240.0)?;
    let spec = DistortionSpec::new(DistortionModel::Model3, -0.1, -0.05)?;
    let map = LineMap::new(WorldPoint::planar(0.0, 0.0), WorldPoint::planar(1.0, 0.0))?;

    // where the robot believes its camera is
    let assumed = ViewExtrinsics::new(Vector3::new(0.6, 0.0, 0.0), Vector3::new(0.5, -0.8, -0.7));
    // where it actually is: yawed by 0.2 rad and shifted on the floor
    let true_rot = delta_rotation(0.2).transpose() * assumed.rotation_matrix();
    let truth = ViewExtrinsics::from_rotation_matrix(&true_rot, assumed.translation - Vector3::new(0.1, 0.05, 0.0))?;

    let observe = |p: WorldPoint| -> radcal::Result<_> {
        let n = truth.to_camera(p).normalize()?;
        Ok(a.to_pixel(distort_normalized(&spec, n)))
    };
    let observed = [observe(map.a)?, observe(map.b)?];
    let fix = localize(&map, observed, &a, &spec, &assumed, LocalizeOptions::default())?;
    println!(
        "yaw error {:.6} rad ({:.3} deg), true position {:?}",
        fix.delta_theta,
        fix.delta_theta.to_degrees(),
        fix.t1.as_slice()
    );
    println!("segment length discrepancy {:.2e}", fix.length_discrepancy);
    Ok(fix)
}

#[allow(dead_code)]
fn main() -> radcal::Result<()> {
    run_example().map(|_| ())
}
