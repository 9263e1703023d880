use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use radcal::distortion::{distort_normalized, undistort, DistortionModel, DistortionSpec};
use radcal::geometry::{IntrinsicMatrix, PixelPoint, ViewExtrinsics, WorldPoint};
use radcal::localizer::{delta_rotation, intersect_ground, localize, LineMap, LocalizeOptions};

fn setup() -> (IntrinsicMatrix, DistortionSpec, ViewExtrinsics, LineMap) {
    let a = IntrinsicMatrix::new(400.0, 400.0, 0.0, 320.0, 240.0).unwrap();
    let spec = DistortionSpec::new(DistortionModel::Model3, -0.1, -0.05).unwrap();
    let assumed = ViewExtrinsics::new(Vector3::new(0.6, 0.0, 0.0), Vector3::new(0.5, -0.8, -0.7));
    let map = LineMap::new(WorldPoint::planar(0.0, 0.0), WorldPoint::planar(1.0, 0.0)).unwrap();
    (a, spec, assumed, map)
}

fn deviated(assumed: &ViewExtrinsics, dtheta: f64, dt: Vector3<f64>) -> ViewExtrinsics {
    let r1 = delta_rotation(dtheta).transpose() * assumed.rotation_matrix();
    ViewExtrinsics::from_rotation_matrix(&r1, assumed.translation - dt).unwrap()
}

fn observe(p: WorldPoint, pose: &ViewExtrinsics, a: &IntrinsicMatrix, spec: &DistortionSpec) -> PixelPoint {
    a.to_pixel(distort_normalized(spec, pose.to_camera(p).normalize().unwrap()))
}

#[test]
fn recovered_segment_is_parallel_to_rotated_map() {
    let (a, spec, assumed, map) = setup();
    let truth = deviated(&assumed, 0.25, Vector3::new(0.3, -0.1, 0.0));
    let obs = [observe(map.a, &truth, &a, &spec), observe(map.b, &truth, &a, &spec)];
    let fix = localize(&map, obs, &a, &spec, &assumed, LocalizeOptions::default()).unwrap();
    let m = fix.delta_rotation() * (map.a.to_vector() - map.b.to_vector());
    let o = fix.recovered_a.to_vector() - fix.recovered_b.to_vector();
    let angle = m.cross(&o).norm().atan2(m.dot(&o));
    assert!(angle < 1e-9, "{angle}");
}

#[test]
fn ground_intersection_reprojects_to_observation() {
    let (a, spec, assumed, _) = setup();
    for (u, v) in [(320.0, 300.0), (100.0, 400.0), (500.0, 250.0)] {
        let obs = PixelPoint::new(u, v);
        let n = undistort(&spec, a.to_normalized(obs)).unwrap();
        let g = intersect_ground(n, &assumed).unwrap();
        let back = observe(g, &assumed, &a, &spec);
        assert!((back.u - u).hypot(back.v - v) < 1e-9);
    }
}

#[test]
fn pure_translation_round_trip() {
    let (a, spec, _, map) = setup();
    // pitched towards the line so both endpoints stay near the image centre
    let assumed = ViewExtrinsics::new(Vector3::new(-0.6, 0.0, 0.0), Vector3::new(1.0, -0.9, -0.7));
    let dt = Vector3::new(0.5, -0.2, 0.0);
    let truth = deviated(&assumed, 0.0, dt);
    let obs = [observe(map.a, &truth, &a, &spec), observe(map.b, &truth, &a, &spec)];
    let fix = localize(&map, obs, &a, &spec, &assumed, LocalizeOptions::default()).unwrap();
    assert!(fix.delta_theta.abs() < 1e-9, "{}", fix.delta_theta);
    // t2 = t1 + Δt
    assert!((assumed.translation - (fix.t1 + dt)).norm() < 1e-9);
}

fn percentile95(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() as f64 * 0.95) as usize]
}

#[test]
fn noisy_observations_monte_carlo() {
    let (a, spec, assumed, map) = setup();
    let truth = deviated(&assumed, 0.25, Vector3::new(0.3, -0.1, 0.0));
    let clean = [observe(map.a, &truth, &a, &spec), observe(map.b, &truth, &a, &spec)];
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut yaw, mut pos) = (Vec::new(), Vec::new());
    for _ in 0..500 {
        let obs = clean.map(|p| PixelPoint::new(p.u + noise.sample(&mut rng), p.v + noise.sample(&mut rng)));
        let fix = localize(&map, obs, &a, &spec, &assumed, LocalizeOptions::default()).unwrap();
        yaw.push((fix.delta_theta - 0.25).abs());
        pos.push((fix.t1 - truth.translation).norm());
    }
    let (yaw95, pos95) = (percentile95(yaw), percentile95(pos));
    println!("95th percentile: yaw {yaw95:.3e} rad, position {pos95:.3e}");
    assert!(yaw95.is_finite() && pos95.is_finite());
    // regression baseline, a few times the observed spread
    assert!(yaw95 < 1e-3, "{yaw95}");
    assert!(pos95 < 5e-3, "{pos95}");
}
