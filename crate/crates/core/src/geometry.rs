//! Pinhole geometry: point types, the intrinsic matrix, per-view extrinsics
//! and the projection / normalization maps.
//!
//! World-to-camera convention used throughout the crate:
//! `P_c = R⁻¹ (P_w − t)`, i.e. `R` rotates camera-frame directions into the
//! world frame and `t` is the camera centre in world coordinates. The
//! `[R' | t']` form used by homography decomposition is converted with
//! [`ViewExtrinsics::from_camera_from_world`].

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// A point on the `Z_w = 0` plane.
    pub fn planar(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CameraPoint {
    /// Perspective division onto the unit focal plane.
    pub fn normalize(self) -> Result<NormalizedPoint> {
        if !(self.z > 0.0) {
            return Err(Error::DepthNotPositive { depth: self.z });
        }
        Ok(NormalizedPoint::new(self.x / self.z, self.y / self.z))
    }
}

/// Point on the unit focal plane (undistorted or distorted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn radius(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl std::ops::Neg for NormalizedPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Image coordinates in pixels. Not clamped to the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// The five intrinsic parameters of the upper-triangular camera matrix
///
/// ```text
///     | alpha gamma u0 |
/// A = |   0   beta  v0 |
///     |   0    0     1 |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicMatrix {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub u0: f64,
    pub v0: f64,
}

impl IntrinsicMatrix {
    pub fn new(alpha: f64, beta: f64, gamma: f64, u0: f64, v0: f64) -> Result<Self> {
        let k = Self {
            alpha,
            beta,
            gamma,
            u0,
            v0,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
            u0: 0.0,
            v0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.alpha, self.beta, self.gamma, self.u0, self.v0]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "intrinsics require finite values with alpha > 0 and beta > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.alpha, self.gamma, self.u0, //
            0.0, self.beta, self.v0, //
            0.0, 0.0, 1.0,
        )
    }

    /// Closed-form inverse of the upper-triangular matrix.
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        Matrix3::new(
            1.0 / a,
            -g / (a * b),
            -self.u0 / a + self.v0 * g / (a * b),
            0.0,
            1.0 / b,
            -self.v0 / b,
            0.0,
            0.0,
            1.0,
        )
    }

    /// `A⁻¹ [u, v, 1]ᵀ`.
    pub fn to_normalized(&self, p: PixelPoint) -> NormalizedPoint {
        let y = (p.v - self.v0) / self.beta;
        let x = (p.u - self.u0 - self.gamma * y) / self.alpha;
        NormalizedPoint::new(x, y)
    }

    /// `A [x, y, 1]ᵀ`.
    pub fn to_pixel(&self, n: NormalizedPoint) -> PixelPoint {
        PixelPoint::new(
            self.alpha * n.x + self.gamma * n.y + self.u0,
            self.beta * n.y + self.v0,
        )
    }

    pub fn principal_point(&self) -> PixelPoint {
        PixelPoint::new(self.u0, self.v0)
    }
}

/// Free-function form of [`IntrinsicMatrix::to_normalized`].
pub fn to_normalized(p: PixelPoint, a: &IntrinsicMatrix) -> NormalizedPoint {
    a.to_normalized(p)
}

/// Free-function form of [`IntrinsicMatrix::to_pixel`].
pub fn to_pixel(n: NormalizedPoint, a: &IntrinsicMatrix) -> PixelPoint {
    a.to_pixel(n)
}

/// Rodrigues map from an axis-angle vector to a rotation matrix, written over
/// [`Scalar`] so the optimizer can differentiate through it.
pub fn rodrigues<T: Scalar>(w: [T; 3]) -> [[T; 3]; 3] {
    let zero = T::from_f64(0.0);
    let one = T::from_f64(1.0);
    let theta2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    // [w]x
    let wx = [
        [zero, -w[2], w[1]],
        [w[2], zero, -w[0]],
        [-w[1], w[0], zero],
    ];
    let (a, b) = if theta2.value() > 1e-14 {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (one - theta.cos()) / theta2)
    } else {
        // second-order expansion; exact derivatives at the origin
        (one - theta2 / T::from_f64(6.0), T::from_f64(0.5) - theta2 / T::from_f64(24.0))
    };
    let mut r = [[zero; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let wx2 = (0..3).fold(zero, |acc, k| acc + wx[i][k] * wx[k][j]);
            let id = if i == j { one } else { zero };
            r[i][j] = id + a * wx[i][j] + b * wx2;
        }
    }
    r
}

pub fn rotation_from_axis_angle(w: &Vector3<f64>) -> Matrix3<f64> {
    let r = rodrigues([w.x, w.y, w.z]);
    Matrix3::from_fn(|i, j| r[i][j])
}

/// Inverse Rodrigues map. Fails if `r` is not orthonormal within `1e-8`.
pub fn axis_angle_from_rotation(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let deviation = (r.transpose() * r - Matrix3::identity()).abs().max();
    if !(deviation <= 1e-8) || !(r.determinant() > 0.0) {
        return Err(Error::NotARotation { deviation });
    }
    Ok(Rotation3::from_matrix_unchecked(*r).scaled_axis())
}

/// Pose of one view: axis-angle rotation `w` (camera-to-world) and camera
/// centre `t`, so that `P_c = R(w)ᵀ (P_w − t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewExtrinsics {
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl ViewExtrinsics {
    pub fn new(rotation: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn from_rotation_matrix(r: &Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        Ok(Self::new(axis_angle_from_rotation(r)?, translation))
    }

    /// Build from the `P_c = R' P_w + t'` form.
    pub fn from_camera_from_world(r_cw: &Matrix3<f64>, t_cw: &Vector3<f64>) -> Result<Self> {
        let r = r_cw.transpose();
        Self::from_rotation_matrix(&r, -(r * t_cw))
    }

    /// The `(R', t')` pair with `P_c = R' P_w + t'`.
    pub fn camera_from_world(&self) -> (Matrix3<f64>, Vector3<f64>) {
        let rt = self.rotation_matrix().transpose();
        let t = -(rt * self.translation);
        (rt, t)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rotation_from_axis_angle(&self.rotation)
    }

    pub fn to_camera(&self, p: WorldPoint) -> CameraPoint {
        let pc = self.rotation_matrix().transpose() * (p.to_vector() - self.translation);
        CameraPoint {
            x: pc.x,
            y: pc.y,
            z: pc.z,
        }
    }

    /// Camera-frame point to world frame.
    pub fn to_world(&self, p: CameraPoint) -> WorldPoint {
        let pw = self.rotation_matrix() * Vector3::new(p.x, p.y, p.z) + self.translation;
        WorldPoint::from_vector(&pw)
    }
}

pub fn normalize_world(p: WorldPoint, e: &ViewExtrinsics) -> Result<NormalizedPoint> {
    e.to_camera(p).normalize()
}

/// Undistorted pinhole projection of a world point into pixels.
pub fn project(p: WorldPoint, e: &ViewExtrinsics, a: &IntrinsicMatrix) -> Result<PixelPoint> {
    Ok(a.to_pixel(normalize_world(p, e)?))
}

/// Plane-to-image homography, stored with unit Frobenius norm and positive
/// bottom-right entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let norm = m.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateConfiguration(
                "homography has zero or non-finite norm".into(),
            ));
        }
        let mut h = m / norm;
        let sign_ref = if h[(2, 2)].abs() > 1e-12 {
            h[(2, 2)]
        } else {
            // fall back to the largest entry when h33 vanishes
            h.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc })
        };
        if sign_ref < 0.0 {
            h = -h;
        }
        if h.determinant().abs() < 1e-14 {
            return Err(Error::DegenerateConfiguration("homography is rank deficient".into()));
        }
        Ok(Self(h))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let p = self.0 * Vector3::new(x, y, 1.0);
        (p.x / p.z, p.y / p.z)
    }
}

/// Image of the absolute conic, `B = A⁻ᵀ A⁻¹`, defined up to scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteConic(Matrix3<f64>);

impl AbsoluteConic {
    pub fn from_intrinsics(a: &IntrinsicMatrix) -> Self {
        let inv = a.inverse_matrix();
        Self(inv.transpose() * inv)
    }

    /// From the six distinct entries `(B11, B12, B22, B13, B23, B33)`.
    pub fn from_entries(b: [f64; 6]) -> Self {
        Self(Matrix3::new(
            b[0], b[1], b[3], //
            b[1], b[2], b[4], //
            b[3], b[4], b[5],
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Closed-form extraction of `(alpha, beta, gamma, u0, v0)`. The overall
    /// sign of `B` is free; it is flipped so that `B11 > 0`.
    pub fn intrinsics(&self) -> Result<IntrinsicMatrix> {
        let mut b = self.0;
        if b[(0, 0)] < 0.0 {
            b = -b;
        }
        let (b11, b12, b22) = (b[(0, 0)], b[(0, 1)], b[(1, 1)]);
        let (b13, b23, b33) = (b[(0, 2)], b[(1, 2)], b[(2, 2)]);
        let denom = b11 * b22 - b12 * b12;
        let scale = b11.abs().max(b22.abs());
        if !(b11 > 0.0) || !(denom > 1e-12 * scale * scale) {
            return Err(Error::SingularConfiguration(
                "absolute conic is not positive definite".into(),
            ));
        }
        let v0 = (b12 * b13 - b11 * b23) / denom;
        let lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
        if !(lambda > 0.0) {
            return Err(Error::SingularConfiguration(
                "absolute conic is not positive definite".into(),
            ));
        }
        let alpha = (lambda / b11).sqrt();
        let beta = (lambda * b11 / denom).sqrt();
        let gamma = -b12 * alpha * alpha * beta / lambda;
        let u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;
        IntrinsicMatrix::new(alpha, beta, gamma, u0, v0)
            .map_err(|e| Error::SingularConfiguration(e.to_string()))
    }
}
