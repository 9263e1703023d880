//! Radial distortion models and their inverses.
//!
//! | model  | `f(r)`                  | inverse                           |
//! |--------|-------------------------|-----------------------------------|
//! | model1 | `1 + k1 r² + k2 r⁴`     | damped Newton on the radius       |
//! | model2 | `1 + k1 r²`             | closed-form depressed cubic       |
//! | model3 | `1 + k1 r + k2 r²`      | closed-form cubic, see [`crate::cubic`] |
//!
//! A distorted normalized point is `(x f(r), y f(r))` with `r` the radius of
//! the undistorted point. Coefficients are tied to their model: the same
//! numbers mean different things under different models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::cubic::{self, CubicCoeffs};
use crate::error::{Error, Result};
use crate::geometry::{IntrinsicMatrix, NormalizedPoint, PixelPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum DistortionModel {
    /// `f(r) = 1 + k1 r² + k2 r⁴`
    Model1,
    /// `f(r) = 1 + k1 r²`
    Model2,
    /// `f(r) = 1 + k1 r + k2 r²`
    Model3,
}

impl DistortionModel {
    pub const ALL: [DistortionModel; 3] = [Self::Model1, Self::Model2, Self::Model3];

    pub fn number(self) -> u8 {
        match self {
            Self::Model1 => 1,
            Self::Model2 => 2,
            Self::Model3 => 3,
        }
    }

    /// Whether `k2` is a free parameter.
    pub fn uses_k2(self) -> bool {
        !matches!(self, Self::Model2)
    }

    /// Basis functions `(φ1(r), φ2(r))` with `f(r) = 1 + k1 φ1 + k2 φ2`.
    pub fn basis(self, r: f64) -> (f64, f64) {
        let r2 = r * r;
        match self {
            Self::Model1 => (r2, r2 * r2),
            Self::Model2 => (r2, 0.0),
            Self::Model3 => (r, r2),
        }
    }
}

impl From<DistortionModel> for u8 {
    fn from(m: DistortionModel) -> u8 {
        m.number()
    }
}

impl TryFrom<u8> for DistortionModel {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::Model1),
            2 => Ok(Self::Model2),
            3 => Ok(Self::Model3),
            other => Err(format!("unknown distortion model {other}, expected 1, 2 or 3")),
        }
    }
}

impl FromStr for DistortionModel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim().trim_start_matches("model");
        t.parse::<u8>()
            .map_err(|_| format!("unknown distortion model '{s}'"))
            .and_then(Self::try_from)
    }
}

impl fmt::Display for DistortionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model{}", self.number())
    }
}

/// A distortion model together with its coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionSpec {
    model: DistortionModel,
    k1: f64,
    k2: f64,
}

impl DistortionSpec {
    /// `k2` is dropped (stored as zero) for [`DistortionModel::Model2`].
    pub fn new(model: DistortionModel, k1: f64, k2: f64) -> Result<Self> {
        let k2 = if model.uses_k2() { k2 } else { 0.0 };
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "distortion coefficients must be finite, got ({k1}, {k2})"
            )));
        }
        Ok(Self { model, k1, k2 })
    }

    pub fn none(model: DistortionModel) -> Self {
        Self {
            model,
            k1: 0.0,
            k2: 0.0,
        }
    }

    pub fn model(&self) -> DistortionModel {
        self.model
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn coefficients(&self) -> (f64, f64) {
        (self.k1, self.k2)
    }

    /// `F'(r) = d/dr [r f(r)]`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let (k1, k2) = (self.k1, self.k2);
        let r2 = r * r;
        match self.model {
            DistortionModel::Model1 => 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2,
            DistortionModel::Model2 => 1.0 + 3.0 * k1 * r2,
            DistortionModel::Model3 => 1.0 + 2.0 * k1 * r + 3.0 * k2 * r2,
        }
    }
}

/// Radius bound on which a fitted model is expected to be invertible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingDomain {
    r_max: f64,
}

impl WorkingDomain {
    pub fn new(r_max: f64) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "working-domain radius must be finite and positive, got {r_max}"
            )));
        }
        Ok(Self { r_max })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

impl Default for WorkingDomain {
    fn default() -> Self {
        Self { r_max: 1.0 }
    }
}

/// `f(r)` for the given model.
pub fn warp_factor(spec: &DistortionSpec, r: f64) -> f64 {
    let (b1, b2) = spec.model.basis(r);
    1.0 + spec.k1 * b1 + spec.k2 * b2
}

/// `f(r)` evaluated from `r²`, differentiable in all arguments.
pub(crate) fn warp_factor_generic<T: Scalar>(model: DistortionModel, k1: T, k2: T, r2: T) -> T {
    let one = T::from_f64(1.0);
    match model {
        DistortionModel::Model1 => one + k1 * r2 + k2 * r2 * r2,
        DistortionModel::Model2 => one + k1 * r2,
        DistortionModel::Model3 => {
            if r2.value() > 0.0 {
                one + k1 * r2.sqrt() + k2 * r2
            } else {
                // x·r is differentiable at the origin with zero slope
                one + k2 * r2
            }
        }
    }
}

pub fn distort_normalized(spec: &DistortionSpec, n: NormalizedPoint) -> NormalizedPoint {
    n.scale(warp_factor(spec, n.radius()))
}

/// Pixel-domain form `u_d − u0 = (u − u0) f(r)`, `v_d − v0 = (v − v0) f(r)`.
pub fn distort_pixel(spec: &DistortionSpec, p: PixelPoint, a: &IntrinsicMatrix) -> PixelPoint {
    let f = warp_factor(spec, a.to_normalized(p).radius());
    PixelPoint::new(a.u0 + (p.u - a.u0) * f, a.v0 + (p.v - a.v0) * f)
}

/// Invert the distortion on the unit focal plane.
pub fn undistort(spec: &DistortionSpec, d: NormalizedPoint) -> Result<NormalizedPoint> {
    if d.x == 0.0 && d.y == 0.0 {
        return Ok(d);
    }
    match spec.model {
        DistortionModel::Model3 => cubic::undistort_point_model3(d, spec.k1, spec.k2),
        DistortionModel::Model2 => undistort_model2(spec.k1, d),
        DistortionModel::Model1 => {
            let r_d = d.radius();
            let r = newton_radius_inverse(spec, r_d)?;
            Ok(d.scale(r / r_d))
        }
    }
}

/// Undistort an observed pixel: normalize, invert, map back through `A`.
pub fn undistort_pixel(
    spec: &DistortionSpec,
    p: PixelPoint,
    a: &IntrinsicMatrix,
) -> Result<PixelPoint> {
    Ok(a.to_pixel(undistort(spec, a.to_normalized(p))?))
}

fn undistort_model2(k1: f64, d: NormalizedPoint) -> Result<NormalizedPoint> {
    let (major, minor) = if d.x.abs() >= d.y.abs() {
        (d.x, d.y)
    } else {
        (d.y, d.x)
    };
    let c = minor / major;
    // x_d = x + k1 (1 + c²) x³
    let roots = cubic::real_roots(CubicCoeffs::new(major, 0.0, k1 * (1.0 + c * c)));
    let x = roots
        .iter()
        .filter(|x| x.abs() > 1e-14 && x.signum() == major.signum())
        .min_by(|a, b| (a - major).abs().total_cmp(&(b - major).abs()))
        .ok_or(Error::NoRealSolution { x: d.x, y: d.y })?;
    Ok(if d.x.abs() >= d.y.abs() {
        NormalizedPoint::new(x, c * x)
    } else {
        NormalizedPoint::new(c * x, x)
    })
}

/// Solve `r_d = r f(r)` for `r` with damped Newton iteration starting at
/// `r = r_d`. Works for every model; it is the only inverse for model1.
pub fn newton_radius_inverse(spec: &DistortionSpec, r_d: f64) -> Result<f64> {
    const MAX_ITER: usize = 50;
    const TOL: f64 = 1e-12;
    if r_d == 0.0 {
        return Ok(0.0);
    }
    let g = |r: f64| r * warp_factor(spec, r) - r_d;
    let mut r = r_d;
    let mut gr = g(r);
    for _ in 0..MAX_ITER {
        let slope = spec.radial_derivative(r);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let step = gr / slope;
        let mut lambda = 1.0;
        let mut next = r - step;
        let mut gn = g(next);
        while (gn.abs() > gr.abs() || next < 0.0) && lambda > 1e-6 {
            lambda *= 0.5;
            next = r - lambda * step;
            gn = g(next);
        }
        let moved = (next - r).abs();
        r = next;
        gr = gn;
        if moved <= TOL * r.max(1.0) || gr == 0.0 {
            return Ok(r);
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_ITER,
    })
}

/// True iff `F(r) = r f(r)` is strictly increasing on `[0, r_max]`.
///
/// `F'` is a quadratic in `r` (model3) or in `r²` (model1, model2), so the
/// check reduces to locating the real roots of that quadratic.
pub fn validate_monotone(spec: &DistortionSpec, dom: &WorkingDomain) -> bool {
    let (k1, k2) = (spec.k1, spec.k2);
    let r_max = dom.r_max;
    // F'(z) = 1 + b z + a z² on z ∈ [0, z_max]
    let (a, b, z_max) = match spec.model {
        DistortionModel::Model1 => (5.0 * k2, 3.0 * k1, r_max * r_max),
        DistortionModel::Model2 => (0.0, 3.0 * k1, r_max * r_max),
        DistortionModel::Model3 => (3.0 * k2, 2.0 * k1, r_max),
    };
    quadratic_positive_on(a, b, z_max)
}

fn quadratic_positive_on(a: f64, b: f64, z_max: f64) -> bool {
    let g = |z: f64| 1.0 + b * z + a * z * z;
    if !(g(z_max) > 0.0) {
        return false;
    }
    if a == 0.0 {
        // linear, positive at both ends
        return true;
    }
    let disc = b * b - 4.0 * a;
    if disc < 0.0 {
        return true;
    }
    let h = -0.5 * (b + b.signum() * disc.sqrt());
    let roots = [h / a, if h != 0.0 { 1.0 / h } else { f64::INFINITY }];
    !roots.iter().any(|&z| (0.0..=z_max).contains(&z))
}
