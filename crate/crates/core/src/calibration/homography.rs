use nalgebra::{DMatrix, Matrix3};

use super::View;
use crate::error::{Error, Result};
use crate::geometry::Homography;

/// Similarity that moves the centroid to the origin and scales the mean
/// distance to √2.
fn normalizing_transform(pts: &[(f64, f64)]) -> Result<Matrix3<f64>> {
    let n = pts.len() as f64;
    let (cx, cy) = pts
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x / n, sy + y / n));
    let mean_dist = pts
        .iter()
        .map(|&(x, y)| (x - cx).hypot(y - cy))
        .sum::<f64>()
        / n;
    if !(mean_dist > 1e-12) || !mean_dist.is_finite() {
        return Err(Error::DegenerateConfiguration(
            "homography points coincide".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, (x, y): (f64, f64)) -> (f64, f64) {
    (t[(0, 0)] * x + t[(0, 2)], t[(1, 1)] * y + t[(1, 2)])
}

/// Normalized direct linear transform from the target plane `(X_w, Y_w)` to
/// observed pixels.
pub fn estimate_homography(view: &View) -> Result<Homography> {
    let n = view.points.len();
    if n < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "view {} has {n} points, a homography needs at least 4",
            view.id
        )));
    }
    let src: Vec<(f64, f64)> = view.points.iter().map(|c| (c.world.x, c.world.y)).collect();
    let dst: Vec<(f64, f64)> = view
        .points
        .iter()
        .map(|c| (c.observed.u, c.observed.v))
        .collect();
    let ts = normalizing_transform(&src)?;
    let td = normalizing_transform(&dst)?;

    // zero rows pad the system so the SVD always yields a full 9x9 V
    let rows = (2 * n).max(9);
    let mut m = DMatrix::<f64>::zeros(rows, 9);
    for (i, (&s, &d)) in src.iter().zip(dst.iter()).enumerate() {
        let (x, y) = apply(&ts, s);
        let (u, v) = apply(&td, d);
        let r = 2 * i;
        m.row_mut(r)
            .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        m.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }

    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("SVD requested V^T");
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = &svd.singular_values;
    // a unique solution needs a one-dimensional null space
    if sv[order[7]] <= 1e-10 * sv[order[0]] {
        return Err(Error::DegenerateConfiguration(format!(
            "view {}: correspondences are collinear or repeated",
            view.id
        )));
    }
    let h = v_t.row(order[8]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("normalization not invertible".into()))?;
    Homography::new(td_inv * hn * ts)
}
