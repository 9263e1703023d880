//! Closed-form undistortion for the `1 + k1 r + k2 r²` model.
//!
//! Along the ray `y = c x` the forward model reduces to the scalar cubic
//! `x_d = x + p x² + q x³` with `p = ±k1 √(1+c²)` (sign of `x`) and
//! `q = k2 (1+c²)`. Its real roots come from [`real_roots`]; the candidate
//! selection lives in [`undistort_component`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::NormalizedPoint;

/// Roots closer to zero than this count as `x = 0`.
const ZERO_ROOT: f64 = 1e-14;

/// Coefficients of `y = x + p x² + q x³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub y: f64,
    pub p: f64,
    pub q: f64,
}

impl CubicCoeffs {
    pub fn new(y: f64, p: f64, q: f64) -> Self {
        Self { y, p, q }
    }

    /// Cubic coefficients for the half-line `sgn(x) = sign` along `y = c x`.
    pub fn along_ray(x_d: f64, c: f64, k1: f64, k2: f64, sign: f64) -> Self {
        let s = 1.0 + c * c;
        Self::new(x_d, sign * k1 * s.sqrt(), k2 * s)
    }

    /// `x + p x² + q x³`
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        ((self.q * x + self.p) * x + 1.0) * x
    }

    #[inline]
    fn residual(&self, x: f64) -> f64 {
        self.eval(x) - self.y
    }

    #[inline]
    fn derivative(&self, x: f64) -> f64 {
        (3.0 * self.q * x + 2.0 * self.p) * x + 1.0
    }

    /// Residual of `x` scaled by the magnitude of the terms involved.
    pub fn relative_residual(&self, x: f64) -> f64 {
        let scale = 1f64
            .max(self.y.abs())
            .max(x.abs())
            .max((self.p * x * x).abs())
            .max((self.q * x * x * x).abs());
        self.residual(x).abs() / scale
    }
}

/// Real roots in ascending order, repeated roots listed with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RootSet {
    roots: [f64; 3],
    len: usize,
}

impl RootSet {
    fn push(&mut self, x: f64) {
        self.roots[self.len] = x;
        self.len += 1;
    }

    fn sort(&mut self) {
        self.roots[..self.len].sort_by(|a, b| a.total_cmp(b));
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.roots[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.as_slice().iter().copied()
    }
}

/// All real solutions of `y = x + p x² + q x³`.
///
/// One real root is taken from the depressed cubic (trigonometric method when
/// three real roots exist, Cardano's formula otherwise) and polished with
/// Newton steps. The cubic is then deflated to a quadratic, backward when the
/// extracted root is the largest in magnitude and forward otherwise, and the
/// quadratic is solved in cancellation-free form. When `q` is negligible the
/// equation is solved as a quadratic (or linear) one, which may have no real
/// root.
pub fn real_roots(c: CubicCoeffs) -> RootSet {
    let CubicCoeffs { y, p, q } = c;
    let mut out = RootSet::default();

    if q.abs() < 1e-14 * (1.0 + p.abs()) {
        if p.abs() < 1e-14 {
            out.push(y);
        } else {
            // p x² + x − y = 0
            for x in quadratic_roots(p, 1.0, -y).iter().flatten() {
                out.push(*x);
            }
        }
        out.sort();
        return out;
    }

    let r0 = polish(&c, dominant_root(&c));
    out.push(r0);
    // (x − r0)(q x² + b1 x + c1) = q x³ + p x² + x − y
    let (b1, c1) = if r0 != 0.0 && y.abs() <= (q * r0 * r0 * r0).abs() {
        let c1 = y / r0;
        (( c1 - 1.0) / r0, c1)
    } else {
        let b1 = p + q * r0;
        (b1, 1.0 + b1 * r0)
    };
    for x in quadratic_roots(q, b1, c1).iter().flatten() {
        out.push(polish(&c, *x));
    }
    out.sort();
    out
}

/// A real root of the cubic from the depressed form; the largest in
/// magnitude when all three are real.
fn dominant_root(c: &CubicCoeffs) -> f64 {
    // x³ + a x² + b x + d = 0
    let a = c.p / c.q;
    let b = 1.0 / c.q;
    let d = -c.y / c.q;
    let shift = a / 3.0;
    let pp = b - a * shift;
    let qq = 2.0 * shift * shift * shift - b * shift + d;
    let disc = 0.25 * qq * qq + pp * pp * pp / 27.0;
    if disc < 0.0 {
        let m = 2.0 * (-pp / 3.0).sqrt();
        let cos_phi = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
        let phi = cos_phi.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .max_by(|x, y| x.abs().total_cmp(&y.abs()))
            .expect("three candidates")
    } else {
        let u = -qq.signum() * (0.5 * qq.abs() + disc.sqrt()).cbrt();
        let t = if u != 0.0 { u - pp / (3.0 * u) } else { 0.0 };
        t - shift
    }
}

/// Real roots of `a x² + b x + c` without cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> [Option<f64>; 2] {
    if a == 0.0 {
        return [(b != 0.0).then(|| -c / b), None];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return [None, None];
    }
    let h = -0.5 * (b + if b >= 0.0 { disc.sqrt() } else { -disc.sqrt() });
    if h == 0.0 {
        // b = 0 and c = 0
        return [Some(0.0), Some(0.0)];
    }
    [Some(h / a), Some(c / h)]
}

fn polish(c: &CubicCoeffs, mut x: f64) -> f64 {
    let mut f = c.residual(x);
    for _ in 0..16 {
        let df = c.derivative(x);
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = x - f / df;
        let fn_ = c.residual(next);
        if fn_.abs() >= f.abs() {
            break;
        }
        x = next;
        f = fn_;
    }
    x
}

/// Admissible roots of the two sign branches for one component.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchCandidates {
    /// Roots of `x_d = x + p x² + q x³` with `x > 0`.
    pub positive: Vec<f64>,
    /// Roots of `x_d = x − p x² + q x³` with `x < 0`.
    pub negative: Vec<f64>,
}

pub fn branch_candidates(x_d: f64, c: f64, k1: f64, k2: f64) -> BranchCandidates {
    let pos = real_roots(CubicCoeffs::along_ray(x_d, c, k1, k2, 1.0));
    let neg = real_roots(CubicCoeffs::along_ray(x_d, c, k1, k2, -1.0));
    BranchCandidates {
        positive: pos.iter().filter(|&x| x > ZERO_ROOT).collect(),
        negative: neg.iter().filter(|&x| x < -ZERO_ROOT).collect(),
    }
}

fn closest_to(target: f64, xs: &[f64]) -> Option<f64> {
    xs.iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

/// Recover `x` from `x_d` on the ray `y = c x`.
///
/// Each sign branch keeps its sign-consistent real roots and picks the one
/// closest to `x_d`; the final answer is whichever branch candidate is closer
/// to `x_d`.
pub fn undistort_component(x_d: f64, c: f64, k1: f64, k2: f64) -> Result<f64> {
    if x_d == 0.0 {
        return Ok(0.0);
    }
    let cands = branch_candidates(x_d, c, k1, k2);
    let plus = closest_to(x_d, &cands.positive);
    let minus = closest_to(x_d, &cands.negative);
    match (plus, minus) {
        (Some(a), Some(b)) => Ok(if (a - x_d).abs() <= (b - x_d).abs() { a } else { b }),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::NoRealSolution { x: x_d, y: c * x_d }),
    }
}

/// Undistort a normalized point under the `1 + k1 r + k2 r²` model.
///
/// The scalar cubic is solved along the dominant axis so that the slope `c`
/// stays in `[-1, 1]`.
pub fn undistort_point_model3(d: NormalizedPoint, k1: f64, k2: f64) -> Result<NormalizedPoint> {
    if d.x == 0.0 && d.y == 0.0 {
        return Ok(d);
    }
    let err = |_| Error::NoRealSolution { x: d.x, y: d.y };
    if d.x.abs() >= d.y.abs() {
        let c = d.y / d.x;
        let x = undistort_component(d.x, c, k1, k2).map_err(err)?;
        Ok(NormalizedPoint::new(x, c * x))
    } else {
        let c = d.x / d.y;
        let y = undistort_component(d.y, c, k1, k2).map_err(err)?;
        Ok(NormalizedPoint::new(c * y, y))
    }
}
