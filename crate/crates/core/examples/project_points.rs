// Project target points through a camera with model3 radial distortion.

use nalgebra::Vector3;
use radcal::distortion::{distort_normalized, DistortionModel, DistortionSpec};
use radcal::geometry::{normalize_world, IntrinsicMatrix, ViewExtrinsics, WorldPoint};

pub fn run_example() -> radcal::Result<Vec<(f64, f64)>> {
    let a = IntrinsicMatrix::new(800.0, 800.0, 0.2, 320.0, 240.0)?;
    let spec = DistortionSpec::new(DistortionModel::Model3, -0.12, -0.14)?;
    // camera centre half a unit in front of the target, looking straight at it
    let pose = ViewExtrinsics::new(Vector3::zeros(), Vector3::new(0.0, 0.0, -0.5));

    let mut pixels = Vec::new();
    for (x, y) in [(0.0, 0.0), (0.1, 0.0), (0.1, 0.1), (-0.2, 0.15)] {
        let n = normalize_world(WorldPoint::planar(x, y), &pose)?;
        let d = distort_normalized(&spec, n);
        let px = a.to_pixel(d);
        println!(
            "({x:5.2}, {y:5.2}) -> ideal ({:8.3}, {:8.3}) distorted ({:8.3}, {:8.3})",
            a.to_pixel(n).u,
            a.to_pixel(n).v,
            px.u,
            px.v
        );
        pixels.push((px.u, px.v));
    }
    Ok(pixels)
}

#[allow(dead_code)]
fn main() -> radcal::Result<()> {
    run_example().map(|_| ())
}
