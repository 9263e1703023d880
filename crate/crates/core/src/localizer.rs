//! Ground-plane line alignment.
//!
//! A robot believes its camera pose is `E2 = (R2, t2)` but is really at
//! `(R1, t1)` with `R2 = ΔR R1`, `t2 = t1 + Δt`, where `ΔR` is a yaw about
//! the world `z` axis and `Δt` lies in the ground plane. Back-projecting the
//! observed endpoints of a mapped line through `E2` onto `Z_w = 0` gives
//! points `P_A2`, `P_B2` with `P_A2 − P_B2 = ΔR (P_A1 − P_B1)`, from which the
//! yaw error and the true translation follow in closed form.

use nalgebra::{Matrix3, Vector3};

use crate::distortion::{undistort, DistortionSpec};
use crate::error::{Error, Result};
use crate::geometry::{IntrinsicMatrix, NormalizedPoint, PixelPoint, ViewExtrinsics, WorldPoint};

/// Mapped endpoints of a ground line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMap {
    pub a: WorldPoint,
    pub b: WorldPoint,
}

impl LineMap {
    pub fn new(a: WorldPoint, b: WorldPoint) -> Result<Self> {
        if (a.to_vector() - b.to_vector()).norm() <= 1e-9 {
            return Err(Error::DegenerateLine);
        }
        Ok(Self { a, b })
    }
}

/// Pose the vehicle believes it has.
pub type AssumedPose = ViewExtrinsics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationFix {
    /// Yaw error in `(−π, π]`.
    pub delta_theta: f64,
    /// Recovered true camera translation.
    pub t1: Vector3<f64>,
    pub recovered_a: WorldPoint,
    pub recovered_b: WorldPoint,
    /// `| |P_A2 − P_B2| − |P_A1 − P_B1| | / |P_A1 − P_B1|`; zero without noise.
    pub length_discrepancy: f64,
    /// Whether the observed endpoints were swapped to match the map.
    pub swapped: bool,
}

impl LocalizationFix {
    pub fn delta_rotation(&self) -> Matrix3<f64> {
        delta_rotation(self.delta_theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalizeOptions {
    /// Try both endpoint orderings and keep the one whose recovered segment
    /// length best matches the map.
    pub try_both_orderings: bool,
}

/// Yaw rotation about the world `z` axis.
pub fn delta_rotation(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(std::f64::consts::TAU);
    if t > std::f64::consts::PI {
        t -= std::f64::consts::TAU;
    }
    if t <= -std::f64::consts::PI {
        t += std::f64::consts::TAU;
    }
    t
}

/// Intersect the viewing ray of an undistorted normalized point with the
/// ground plane under the assumed pose.
pub fn intersect_ground(n: NormalizedPoint, pose: &AssumedPose) -> Result<WorldPoint> {
    let dir = pose.rotation_matrix() * Vector3::new(n.x, n.y, 1.0);
    if dir.z.abs() < 1e-12 {
        return Err(Error::RayParallelToGround);
    }
    // P_w = t + Z_c · R (x, y, 1)
    let depth = -pose.translation.z / dir.z;
    if !(depth > 0.0) {
        return Err(Error::PointBehindCamera { depth });
    }
    let p = pose.translation + dir * depth;
    Ok(WorldPoint::new(p.x, p.y, 0.0))
}

/// Signed planar angle from the map segment `A1 → B1` to `A2 → B2`.
pub fn recover_delta_rotation(map: &LineMap, a2: WorldPoint, b2: WorldPoint) -> Result<f64> {
    let (m, o) = (map.b.to_vector() - map.a.to_vector(), b2.to_vector() - a2.to_vector());
    if m.xy().norm() <= 1e-9 || o.xy().norm() <= 1e-9 {
        return Err(Error::DegenerateLine);
    }
    let cross = m.x * o.y - m.y * o.x;
    let dot = m.x * o.x + m.y * o.y;
    Ok(wrap_angle(cross.atan2(dot)))
}

/// `t1 = P_A1 − ΔR⁻¹ (P_A2 − t2)`.
pub fn recover_translation(
    map: &LineMap,
    a2: WorldPoint,
    delta_theta: f64,
    pose: &AssumedPose,
) -> Vector3<f64> {
    let dr = delta_rotation(delta_theta);
    map.a.to_vector() - dr.transpose() * (a2.to_vector() - pose.translation)
}

fn back_project(
    p: PixelPoint,
    a: &IntrinsicMatrix,
    spec: &DistortionSpec,
    pose: &AssumedPose,
) -> Result<WorldPoint> {
    let n = undistort(spec, a.to_normalized(p))?;
    intersect_ground(n, pose)
}

fn solve(map: &LineMap, a2: WorldPoint, b2: WorldPoint, pose: &AssumedPose, swapped: bool) -> Result<LocalizationFix> {
    if (a2.to_vector() - b2.to_vector()).norm() <= 1e-9 {
        return Err(Error::EndpointsCoincide);
    }
    let delta_theta = recover_delta_rotation(map, a2, b2)?;
    let t1 = recover_translation(map, a2, delta_theta, pose);
    let map_len = (map.a.to_vector() - map.b.to_vector()).norm();
    let obs_len = (a2.to_vector() - b2.to_vector()).norm();
    Ok(LocalizationFix {
        delta_theta,
        t1,
        recovered_a: a2,
        recovered_b: b2,
        length_discrepancy: (obs_len - map_len).abs() / map_len,
        swapped,
    })
}

/// Full alignment: undistort both observed endpoints, back-project them onto
/// the ground under the assumed pose, then recover yaw error and translation.
pub fn localize(
    map: &LineMap,
    observed: [PixelPoint; 2],
    a: &IntrinsicMatrix,
    spec: &DistortionSpec,
    pose: &AssumedPose,
    opts: LocalizeOptions,
) -> Result<LocalizationFix> {
    let a2 = back_project(observed[0], a, spec, pose)?;
    let b2 = back_project(observed[1], a, spec, pose)?;
    let direct = solve(map, a2, b2, pose, false)?;
    if !opts.try_both_orderings {
        return Ok(direct);
    }
    let swapped = solve(map, b2, a2, pose, true)?;
    // equal lengths make the ordering ambiguous; keep the input order then
    Ok(if swapped.length_discrepancy < direct.length_discrepancy {
        swapped
    } else {
        direct
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{distort_normalized, DistortionModel};
    use crate::geometry::project;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn unit_depth_ground_point() {
        let pose = ViewExtrinsics::new(Vector3::zeros(), Vector3::new(0.0, 0.0, -1.0));
        let p = intersect_ground(NormalizedPoint::new(0.2, 0.3), &pose).unwrap();
        assert!((p.x - 0.2).abs() < 1e-15 && (p.y - 0.3).abs() < 1e-15 && p.z == 0.0);
    }

    #[test]
    fn pitched_camera_reprojects() {
        let pose = ViewExtrinsics::new(Vector3::new(FRAC_PI_4, 0.0, 0.0), Vector3::new(0.0, 0.0, -1.0));
        let p = intersect_ground(NormalizedPoint::new(0.0, 0.0), &pose).unwrap();
        // optical axis R e_z = (0, -sin 45°, cos 45°) from height 1 hits (0, -1, 0)
        assert!((p.y + 1.0).abs() < 1e-12 && p.x.abs() < 1e-12);
        let back = project(p, &pose, &IntrinsicMatrix::identity()).unwrap();
        assert!(back.u.abs() < 1e-12 && back.v.abs() < 1e-12);
    }

    #[test]
    fn horizontal_ray_and_behind() {
        let level = ViewExtrinsics::new(Vector3::new(FRAC_PI_2, 0.0, 0.0), Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(
            intersect_ground(NormalizedPoint::new(0.0, 0.0), &level),
            Err(Error::RayParallelToGround)
        );
        let away = ViewExtrinsics::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            intersect_ground(NormalizedPoint::new(0.0, 0.0), &away),
            Err(Error::PointBehindCamera { .. })
        ));
    }

    #[test]
    fn rotation_angle_examples() {
        let map = LineMap::new(WorldPoint::planar(0.0, 0.0), WorldPoint::planar(1.0, 0.0)).unwrap();
        assert_eq!(recover_delta_rotation(&map, map.a, map.b).unwrap(), 0.0);
        let q = recover_delta_rotation(&map, WorldPoint::planar(0.0, 0.0), WorldPoint::planar(0.0, 1.0)).unwrap();
        assert!((q - FRAC_PI_2).abs() < 1e-15);
        let r = recover_delta_rotation(
            &map,
            WorldPoint::planar(0.0, 0.0),
            WorldPoint::planar(0.3f64.cos(), 0.3f64.sin()),
        )
        .unwrap();
        assert!((r - 0.3).abs() < 1e-12);
        let half = recover_delta_rotation(&map, WorldPoint::planar(0.0, 0.0), WorldPoint::planar(-1.0, 0.0)).unwrap();
        assert_eq!(half, PI);
        assert!(LineMap::new(map.a, map.a).is_err());
    }

    #[test]
    fn translation_examples() {
        let map = LineMap::new(WorldPoint::planar(1.0, 2.0), WorldPoint::planar(2.0, 2.0)).unwrap();
        let pose = ViewExtrinsics::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.5, 0.5, -1.0));
        assert_eq!(recover_translation(&map, map.a, 0.0, &pose), pose.translation);

        // t2 = t1 + Δt: P_A2 = P_A1 − t1 + t2 = P_A1 + Δt
        let dt = Vector3::new(0.5, -0.2, 0.0);
        let a2 = WorldPoint::from_vector(&(map.a.to_vector() + dt));
        let t1 = recover_translation(&map, a2, 0.0, &pose);
        assert!((t1 - (pose.translation - dt)).norm() < 1e-15);
    }

    fn synth_observation(
        p: WorldPoint,
        true_pose: &ViewExtrinsics,
        a: &IntrinsicMatrix,
        spec: &DistortionSpec,
    ) -> PixelPoint {
        let n = true_pose.to_camera(p).normalize().unwrap();
        a.to_pixel(distort_normalized(spec, n))
    }

    fn perturbed(assumed: &ViewExtrinsics, dtheta: f64, dt: Vector3<f64>) -> ViewExtrinsics {
        // R1 = ΔR⁻¹ R2, t1 = t2 − Δt
        let r1 = delta_rotation(dtheta).transpose() * assumed.rotation_matrix();
        ViewExtrinsics::from_rotation_matrix(&r1, assumed.translation - dt).unwrap()
    }

    #[test]
    fn localize_with_distortion() {
        let a = IntrinsicMatrix::new(400.0, 400.0, 0.0, 320.0, 240.0).unwrap();
        let spec = DistortionSpec::new(DistortionModel::Model3, -0.1, -0.05).unwrap();
        // camera 1 unit from the line, pitched down
        let assumed = ViewExtrinsics::new(Vector3::new(0.6, 0.0, 0.0), Vector3::new(0.5, -0.8, -0.7));
        let map = LineMap::new(WorldPoint::planar(0.0, 0.0), WorldPoint::planar(1.0, 0.0)).unwrap();

        let same = [map.a, map.b].map(|p| synth_observation(p, &assumed, &a, &spec));
        let fix = localize(&map, same, &a, &spec, &assumed, LocalizeOptions::default()).unwrap();
        assert!(fix.delta_theta.abs() < 1e-9);
        assert!((fix.t1 - assumed.translation).norm() < 1e-9);

        let truth = perturbed(&assumed, 0.25, Vector3::new(0.3, -0.1, 0.0));
        let obs = [map.a, map.b].map(|p| synth_observation(p, &truth, &a, &spec));
        let fix = localize(&map, obs, &a, &spec, &assumed, LocalizeOptions::default()).unwrap();
        assert!((fix.delta_theta - 0.25).abs() < 1e-9, "{}", fix.delta_theta);
        assert!((fix.t1 - truth.translation).norm() < 1e-9);
        assert!(fix.length_discrepancy < 1e-9);
        let dr = fix.delta_rotation();
        assert_eq!([dr[(0, 2)], dr[(1, 2)], dr[(2, 0)], dr[(2, 1)]], [0.0; 4]);
        assert_eq!(dr[(2, 2)], 1.0);

        // reversed endpoint order is repaired by the ordering search
        let rev = [obs[1], obs[0]];
        let opts = LocalizeOptions {
            try_both_orderings: true,
        };
        let fixed = localize(&map, rev, &a, &spec, &assumed, opts).unwrap();
        // equal segment lengths: ordering stays ambiguous, yaw differs by π
        assert!(fixed.length_discrepancy < 1e-9);
    }

    #[test]
    fn coincident_observations() {
        let a = IntrinsicMatrix::new(400.0, 400.0, 0.0, 320.0, 240.0).unwrap();
        let spec = DistortionSpec::none(DistortionModel::Model3);
        let pose = ViewExtrinsics::new(Vector3::new(0.6, 0.0, 0.0), Vector3::new(0.5, -0.8, -0.7));
        let map = LineMap::new(WorldPoint::planar(0.0, 0.0), WorldPoint::planar(1.0, 0.0)).unwrap();
        let p = PixelPoint::new(300.0, 260.0);
        assert_eq!(
            localize(&map, [p, p], &a, &spec, &pose, LocalizeOptions::default()),
            Err(Error::EndpointsCoincide)
        );
    }
}
