use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Homography, IntrinsicMatrix, ViewExtrinsics};

/// Nearest rotation in the Frobenius sense.
pub(crate) fn nearest_rotation(q: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = q.svd(true, true);
    let u = svd.u.expect("SVD requested U");
    let v_t = svd.v_t.expect("SVD requested V^T");
    let d = (u * v_t).determinant().signum();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t
}

/// Pose of the target plane from its homography and the intrinsics.
pub fn extrinsics_from_homography(h: &Homography, a: &IntrinsicMatrix) -> Result<ViewExtrinsics> {
    let a_inv = a.inverse_matrix();
    let m = h.matrix();
    let q1 = a_inv * m.column(0);
    let q2 = a_inv * m.column(1);
    let q3 = a_inv * m.column(2);
    let mut lambda = 1.0 / q1.norm();
    if !lambda.is_finite() {
        return Err(Error::DegenerateConfiguration(
            "homography first column maps to zero".into(),
        ));
    }
    // target origin must sit in front of the camera
    if q3.z * lambda < 0.0 {
        lambda = -lambda;
    }
    let t_cw = q3 * lambda;
    if !(t_cw.z > 0.0) {
        return Err(Error::BehindCamera);
    }
    let r1 = q1 * lambda;
    let r2 = q2 * lambda;
    let r3 = r1.cross(&r2);
    let r_cw = nearest_rotation(&Matrix3::from_columns(&[r1, r2, r3]));
    ViewExtrinsics::from_camera_from_world(&r_cw, &t_cw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homography_equal_to_intrinsics() {
        let a = IntrinsicMatrix::new(800.0, 790.0, 0.2, 320.0, 240.0).unwrap();
        let h = Homography::new(a.matrix()).unwrap();
        let e = extrinsics_from_homography(&h, &a).unwrap();
        assert!(e.rotation.norm() < 1e-10);
        // camera-from-world t' = (0,0,1), so the camera centre is at z = -1
        assert!((e.translation - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-10);
    }

    #[test]
    fn nearest_rotation_is_orthonormal() {
        let q = Matrix3::new(1.0, 0.1, 0.0, -0.05, 0.98, 0.02, 0.01, 0.0, 1.03);
        let r = nearest_rotation(&q);
        assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-14);
        assert!((r.determinant() - 1.0).abs() < 1e-14);
    }
}
