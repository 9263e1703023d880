// Closed-form undistortion under model3 compared with the forward warp.

use radcal::distortion::{
    distort_normalized, undistort, validate_monotone, DistortionModel, DistortionSpec,
    WorkingDomain,
};
use radcal::geometry::NormalizedPoint;

pub fn run_example() -> radcal::Result<f64> {
    let spec = DistortionSpec::new(DistortionModel::Model3, -0.2, 0.05)?;
    let domain = WorkingDomain::new(0.8)?;
    println!("monotone on r <= 0.8: {}", validate_monotone(&spec, &domain));

    let mut worst = 0.0f64;
    for i in 0..8 {
        let phi = i as f64 * std::f64::consts::FRAC_PI_4;
        let p = NormalizedPoint::new(0.6 * phi.cos(), 0.6 * phi.sin());
        let d = distort_normalized(&spec, p);
        let back = undistort(&spec, d)?;
        let err = (back.x - p.x).hypot(back.y - p.y);
        worst = worst.max(err);
        println!("r_d = {:.6}  recovered r = {:.15}  error {err:.1e}", d.radius(), back.radius());
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> radcal::Result<()> {
    run_example().map(|_| ())
}
