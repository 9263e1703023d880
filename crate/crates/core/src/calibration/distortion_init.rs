use nalgebra::{Matrix2, Vector2};

use super::CorrespondenceSet;
use crate::distortion::{DistortionModel, DistortionSpec};
use crate::error::Result;
use crate::geometry::{normalize_world, IntrinsicMatrix, ViewExtrinsics};

/// Linear least-squares distortion coefficients given intrinsics and poses.
///
/// Each observation contributes
/// `(u − u0)(k1 φ1 + k2 φ2) = u_d − u` and the same for `v`, where `(u, v)`
/// is the undistorted prediction and `φ` the model basis at its radius.
/// Falls back to zero coefficients when the normal equations are singular.
pub fn init_distortion(
    corr: &CorrespondenceSet,
    a: &IntrinsicMatrix,
    extrinsics: &[ViewExtrinsics],
    model: DistortionModel,
) -> Result<DistortionSpec> {
    let mut ata = Matrix2::<f64>::zeros();
    let mut atb = Vector2::<f64>::zeros();
    for (view, e) in corr.views().iter().zip(extrinsics) {
        for c in &view.points {
            let n = normalize_world(c.world, e)?;
            let p = a.to_pixel(n);
            let (b1, b2) = model.basis(n.radius());
            for (delta, obs, pred) in [
                (p.u - a.u0, c.observed.u, p.u),
                (p.v - a.v0, c.observed.v, p.v),
            ] {
                let row = Vector2::new(delta * b1, delta * b2);
                ata += row * row.transpose();
                atb += row * (obs - pred);
            }
        }
    }
    let (k1, k2) = if model.uses_k2() {
        match ata.try_inverse() {
            Some(inv) if ata.determinant().abs() > 1e-20 * ata.norm_squared() => {
                let k = inv * atb;
                (k[0], k[1])
            }
            _ => (0.0, 0.0),
        }
    } else if ata[(0, 0)] > 0.0 {
        (atb[0] / ata[(0, 0)], 0.0)
    } else {
        (0.0, 0.0)
    };
    if !k1.is_finite() || !k2.is_finite() {
        return Ok(DistortionSpec::none(model));
    }
    DistortionSpec::new(model, k1, k2)
}
