//! The reprojection objective: sum over all views and target points of the
//! squared pixel distance between the observation and the forward-distorted
//! projection.
//!
//! Parameters are packed as
//! `[alpha, beta, gamma, u0, v0, k1, k2, (w, t) for each view]`, i.e.
//! `7 + 6N` entries.

use nalgebra::{DMatrix, DVector, Vector3};

use super::CorrespondenceSet;
use crate::autodiff::{Jet, Scalar};
use crate::distortion::{warp_factor_generic, DistortionModel, DistortionSpec};
use crate::error::{Error, Result};
use crate::geometry::{rodrigues, IntrinsicMatrix, ViewExtrinsics};

pub const GLOBAL_PARAMS: usize = 7;
pub const VIEW_PARAMS: usize = 6;
const LOCAL_PARAMS: usize = GLOBAL_PARAMS + VIEW_PARAMS;

pub fn parameter_count(views: usize) -> usize {
    GLOBAL_PARAMS + VIEW_PARAMS * views
}

pub fn pack_parameters(
    a: &IntrinsicMatrix,
    spec: &DistortionSpec,
    extrinsics: &[ViewExtrinsics],
) -> DVector<f64> {
    let mut x = DVector::zeros(parameter_count(extrinsics.len()));
    x[0] = a.alpha;
    x[1] = a.beta;
    x[2] = a.gamma;
    x[3] = a.u0;
    x[4] = a.v0;
    x[5] = spec.k1();
    x[6] = spec.k2();
    for (i, e) in extrinsics.iter().enumerate() {
        let o = GLOBAL_PARAMS + VIEW_PARAMS * i;
        x.fixed_rows_mut::<3>(o).copy_from(&e.rotation);
        x.fixed_rows_mut::<3>(o + 3).copy_from(&e.translation);
    }
    x
}

pub fn unpack_parameters(
    model: DistortionModel,
    x: &DVector<f64>,
) -> Result<(IntrinsicMatrix, DistortionSpec, Vec<ViewExtrinsics>)> {
    if x.len() < GLOBAL_PARAMS || !(x.len() - GLOBAL_PARAMS).is_multiple_of(VIEW_PARAMS) {
        return Err(Error::InvalidInput(format!(
            "parameter vector of length {} does not match 7 + 6N",
            x.len()
        )));
    }
    let a = IntrinsicMatrix::new(x[0], x[1], x[2], x[3], x[4])?;
    let spec = DistortionSpec::new(model, x[5], x[6])?;
    let views = (x.len() - GLOBAL_PARAMS) / VIEW_PARAMS;
    let ext = (0..views)
        .map(|i| {
            let o = GLOBAL_PARAMS + VIEW_PARAMS * i;
            ViewExtrinsics::new(
                Vector3::new(x[o], x[o + 1], x[o + 2]),
                Vector3::new(x[o + 3], x[o + 4], x[o + 5]),
            )
        })
        .collect();
    Ok((a, spec, ext))
}

/// Forward-distorted pixel prediction for a target point `(wx, wy, 0)`.
///
/// `global` is `[alpha, beta, gamma, u0, v0, k1, k2]`, `view` is `[w, t]`.
/// Returns `None` when the point is not in front of the camera.
pub(crate) fn predict<T: Scalar>(
    model: DistortionModel,
    global: &[T; GLOBAL_PARAMS],
    view: &[T; VIEW_PARAMS],
    wx: f64,
    wy: f64,
) -> Option<[T; 2]> {
    let r = rodrigues([view[0], view[1], view[2]]);
    let d = [
        T::from_f64(wx) - view[3],
        T::from_f64(wy) - view[4],
        -view[5],
    ];
    // P_c = Rᵀ (P_w − t)
    let pc: [T; 3] = std::array::from_fn(|i| r[0][i] * d[0] + r[1][i] * d[1] + r[2][i] * d[2]);
    if !(pc[2].value() > 0.0) {
        return None;
    }
    let x = pc[0] / pc[2];
    let y = pc[1] / pc[2];
    let f = warp_factor_generic(model, global[5], global[6], x * x + y * y);
    let (xd, yd) = (x * f, y * f);
    Some([
        global[0] * xd + global[2] * yd + global[3],
        global[1] * yd + global[4],
    ])
}

fn split(x: &DVector<f64>, view: usize) -> ([f64; GLOBAL_PARAMS], [f64; VIEW_PARAMS]) {
    let o = GLOBAL_PARAMS + VIEW_PARAMS * view;
    (
        std::array::from_fn(|i| x[i]),
        std::array::from_fn(|i| x[o + i]),
    )
}

fn check_layout(corr: &CorrespondenceSet, x: &DVector<f64>) -> Result<()> {
    if x.len() != parameter_count(corr.views().len()) {
        return Err(Error::InvalidInput(format!(
            "parameter vector has {} entries, expected {} for {} views",
            x.len(),
            parameter_count(corr.views().len()),
            corr.views().len()
        )));
    }
    Ok(())
}

/// Residual vector `predicted − observed`, two entries per point, in view order.
pub fn residual_vector(
    corr: &CorrespondenceSet,
    model: DistortionModel,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_layout(corr, x)?;
    let mut r = DVector::zeros(2 * corr.num_points());
    let mut row = 0;
    for (vi, view) in corr.views().iter().enumerate() {
        let (g, v) = split(x, vi);
        for c in &view.points {
            let m = predict(model, &g, &v, c.world.x, c.world.y).ok_or_else(|| {
                Error::DepthNotPositive {
                    depth: ViewExtrinsics::new(
                        Vector3::new(v[0], v[1], v[2]),
                        Vector3::new(v[3], v[4], v[5]),
                    )
                    .to_camera(c.world)
                    .z,
                }
            })?;
            r[row] = m[0] - c.observed.u;
            r[row + 1] = m[1] - c.observed.v;
            row += 2;
        }
    }
    Ok(r)
}

/// Residuals and their exact Jacobian (forward-mode differentiation).
pub fn residuals_and_jacobian(
    corr: &CorrespondenceSet,
    model: DistortionModel,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_layout(corr, x)?;
    let rows = 2 * corr.num_points();
    let mut r = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut row = 0;
    for (vi, view) in corr.views().iter().enumerate() {
        let (g, v) = split(x, vi);
        let gj: [Jet<LOCAL_PARAMS>; GLOBAL_PARAMS] =
            std::array::from_fn(|i| Jet::variable(g[i], i));
        let vj: [Jet<LOCAL_PARAMS>; VIEW_PARAMS] =
            std::array::from_fn(|i| Jet::variable(v[i], GLOBAL_PARAMS + i));
        let o = GLOBAL_PARAMS + VIEW_PARAMS * vi;
        for c in &view.points {
            let m = predict(model, &gj, &vj, c.world.x, c.world.y).ok_or(
                Error::DepthNotPositive { depth: f64::NAN },
            )?;
            for (k, mk) in m.iter().enumerate() {
                let obs = if k == 0 { c.observed.u } else { c.observed.v };
                r[row + k] = mk.v - obs;
                for i in 0..GLOBAL_PARAMS {
                    jac[(row + k, i)] = mk.d[i];
                }
                for i in 0..VIEW_PARAMS {
                    jac[(row + k, o + i)] = mk.d[GLOBAL_PARAMS + i];
                }
            }
            row += 2;
        }
    }
    Ok((r, jac))
}

/// Objective value for a packed parameter vector.
pub fn objective_from_vector(
    corr: &CorrespondenceSet,
    model: DistortionModel,
    x: &DVector<f64>,
) -> Result<f64> {
    Ok(residual_vector(corr, model, x)?.norm_squared())
}

/// Gradient `2 Jᵀ r` of the objective.
pub fn gradient_from_vector(
    corr: &CorrespondenceSet,
    model: DistortionModel,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (r, jac) = residuals_and_jacobian(corr, model, x)?;
    Ok(jac.tr_mul(&r) * 2.0)
}

/// Sum of squared reprojection errors in pixels².
pub fn objective(
    corr: &CorrespondenceSet,
    a: &IntrinsicMatrix,
    spec: &DistortionSpec,
    extrinsics: &[ViewExtrinsics],
) -> Result<f64> {
    let x = pack_parameters(a, spec, extrinsics);
    objective_from_vector(corr, spec.model(), &x)
}
