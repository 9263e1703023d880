use nalgebra::{DMatrix, Matrix3, SVector};

use crate::error::{Error, Result};
use crate::geometry::{AbsoluteConic, Homography, IntrinsicMatrix};

/// `v_ij` such that `h_iᵀ B h_j = v_ijᵀ b` with
/// `b = (B11, B12, B22, B13, B23, B33)`.
fn constraint_row(h: &Matrix3<f64>, i: usize, j: usize) -> SVector<f64, 6> {
    let hi = h.column(i);
    let hj = h.column(j);
    SVector::<f64, 6>::from_column_slice(&[
        hi[0] * hj[0],
        hi[0] * hj[1] + hi[1] * hj[0],
        hi[1] * hj[1],
        hi[2] * hj[0] + hi[0] * hj[2],
        hi[2] * hj[1] + hi[1] * hj[2],
        hi[2] * hj[2],
    ])
}

/// Least-squares estimate of the absolute conic from the orthonormality of
/// the first two rotation columns of each view.
pub fn absolute_conic_from_homographies(hs: &[Homography]) -> Result<AbsoluteConic> {
    if hs.len() < 3 {
        return Err(Error::InsufficientViews {
            required: 3,
            got: hs.len(),
        });
    }
    let mut v = DMatrix::<f64>::zeros(2 * hs.len(), 6);
    for (k, h) in hs.iter().enumerate() {
        let m = h.matrix();
        let r12 = constraint_row(m, 0, 1);
        let r_diff = constraint_row(m, 0, 0) - constraint_row(m, 1, 1);
        // unit rows make the system independent of each homography's scale
        for (offset, row) in [r12, r_diff].iter().enumerate() {
            let n = row.norm();
            if n > 0.0 {
                v.row_mut(2 * k + offset).copy_from(&(row / n).transpose());
            }
        }
    }
    let svd = v.svd(false, true);
    let v_t = svd.v_t.expect("SVD requested V^T");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    if sv[order[4]] <= 1e-9 * sv[order[0]] {
        return Err(Error::SingularConfiguration(
            "homography constraints are rank deficient (parallel target planes?)".into(),
        ));
    }
    let b = v_t.row(order[5]);
    Ok(AbsoluteConic::from_entries([b[0], b[1], b[2], b[3], b[4], b[5]]))
}

/// Intrinsic parameters from at least three plane homographies.
pub fn intrinsics_from_homographies(hs: &[Homography]) -> Result<IntrinsicMatrix> {
    absolute_conic_from_homographies(hs)?.intrinsics()
}
