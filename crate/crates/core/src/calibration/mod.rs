//! Planar-target calibration.
//!
//! Pipeline: per-view homographies → intrinsics from the absolute conic →
//! per-view poses → linear distortion coefficients → Levenberg-Marquardt
//! refinement of the reprojection objective over all `7 + 6N` parameters.

mod compare;
mod distortion_init;
mod extrinsics;
mod homography;
mod intrinsics;
pub mod lm;
pub mod objective;

use nalgebra::DVector;

pub use compare::{compare_models, ComparisonReport, ModelRow};
pub use distortion_init::init_distortion;
pub use extrinsics::extrinsics_from_homography;
pub use homography::estimate_homography;
pub use intrinsics::{absolute_conic_from_homographies, intrinsics_from_homographies};
pub use lm::Termination;
pub use objective::objective;

use crate::distortion::{DistortionModel, DistortionSpec};
use crate::error::{Error, Result};
use crate::geometry::{IntrinsicMatrix, PixelPoint, ViewExtrinsics, WorldPoint};

/// One target point and where it was observed (distorted) in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub world: WorldPoint,
    pub observed: PixelPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub id: i64,
    pub points: Vec<Correspondence>,
}

/// Correspondences grouped by view. Target points lie on `Z_w = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    views: Vec<View>,
}

impl CorrespondenceSet {
    pub fn new(views: Vec<View>) -> Result<Self> {
        for v in &views {
            for c in &v.points {
                let finite = [c.world.x, c.world.y, c.observed.u, c.observed.v]
                    .iter()
                    .all(|x| x.is_finite());
                if !finite {
                    return Err(Error::InvalidInput(format!(
                        "view {} contains a non-finite coordinate",
                        v.id
                    )));
                }
                if c.world.z != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "view {}: target points must lie on Z_w = 0",
                        v.id
                    )));
                }
            }
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn num_points(&self) -> usize {
        self.views.iter().map(|v| v.points.len()).sum()
    }

    pub fn view_ids(&self) -> Vec<i64> {
        self.views.iter().map(|v| v.id).collect()
    }
}

/// Stopping contract of the refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub tol_x: f64,
    pub tol_fun: f64,
    pub max_iter: usize,
    pub max_fun_evals: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            tol_x: 1e-5,
            tol_fun: 1e-5,
            max_iter: 120,
            max_fun_evals: 8000,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_x > 0.0) || !(self.tol_fun > 0.0) || self.max_iter == 0 || self.max_fun_evals == 0
        {
            return Err(Error::InvalidInput(
                "optimizer tolerances and limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Residual of one observation, `predicted − observed` in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub view_id: i64,
    pub du: f64,
    pub dv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub intrinsics: IntrinsicMatrix,
    pub distortion: DistortionSpec,
    /// Aligned with the views of the correspondence set it was computed on.
    pub extrinsics: Vec<ViewExtrinsics>,
    pub view_ids: Vec<i64>,
    pub j_final: f64,
    pub rms_px: f64,
    pub residuals: Vec<PointResidual>,
}

impl CalibrationResult {
    /// Evaluate the objective for the given parameters and package them.
    pub fn evaluate(
        corr: &CorrespondenceSet,
        intrinsics: IntrinsicMatrix,
        distortion: DistortionSpec,
        extrinsics: Vec<ViewExtrinsics>,
    ) -> Result<Self> {
        if extrinsics.len() != corr.views().len() {
            return Err(Error::InvalidInput(format!(
                "{} poses for {} views",
                extrinsics.len(),
                corr.views().len()
            )));
        }
        let x = objective::pack_parameters(&intrinsics, &distortion, &extrinsics);
        let r = objective::residual_vector(corr, distortion.model(), &x)?;
        let j = r.norm_squared();
        let mut residuals = Vec::with_capacity(corr.num_points());
        let mut k = 0;
        for v in corr.views() {
            for _ in &v.points {
                residuals.push(PointResidual {
                    view_id: v.id,
                    du: r[k],
                    dv: r[k + 1],
                });
                k += 2;
            }
        }
        let n = corr.num_points().max(1) as f64;
        Ok(Self {
            intrinsics,
            distortion,
            extrinsics,
            view_ids: corr.view_ids(),
            j_final: j,
            rms_px: (j / n).sqrt(),
            residuals,
        })
    }
}

/// Output of the linear stages.
#[derive(Debug, Clone)]
pub struct LinearEstimate {
    /// Views that survived homography estimation.
    pub correspondences: CorrespondenceSet,
    pub dropped_views: Vec<i64>,
    pub intrinsics: IntrinsicMatrix,
    pub extrinsics: Vec<ViewExtrinsics>,
}

impl LinearEstimate {
    /// Attach a linear distortion estimate for `model` and evaluate.
    pub fn with_distortion(&self, model: DistortionModel) -> Result<CalibrationResult> {
        let spec = init_distortion(&self.correspondences, &self.intrinsics, &self.extrinsics, model)?;
        self.with_spec(spec)
    }

    pub fn with_spec(&self, spec: DistortionSpec) -> Result<CalibrationResult> {
        CalibrationResult::evaluate(
            &self.correspondences,
            self.intrinsics,
            spec,
            self.extrinsics.clone(),
        )
    }
}

/// Homographies, intrinsics and poses, ignoring distortion.
///
/// Views whose homography cannot be estimated are dropped as long as three
/// views remain.
pub fn linear_estimate(corr: &CorrespondenceSet) -> Result<LinearEstimate> {
    let n = corr.views().len();
    if n < 3 {
        return Err(Error::InsufficientViews { required: 3, got: n });
    }
    let mut kept = Vec::new();
    let mut hs = Vec::new();
    let mut dropped = Vec::new();
    let mut last_err = None;
    for v in corr.views() {
        match estimate_homography(v) {
            Ok(h) => {
                hs.push(h);
                kept.push(v.clone());
            }
            Err(e) => {
                log::warn!("dropping view {}: {e}", v.id);
                dropped.push(v.id);
                last_err = Some(e);
            }
        }
    }
    if kept.len() < 3 {
        return Err(last_err.unwrap_or(Error::InsufficientViews {
            required: 3,
            got: kept.len(),
        }));
    }
    let a = intrinsics_from_homographies(&hs)?;
    let extrinsics = hs
        .iter()
        .map(|h| extrinsics_from_homography(h, &a))
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearEstimate {
        correspondences: CorrespondenceSet { views: kept },
        dropped_views: dropped,
        intrinsics: a,
        extrinsics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineStats {
    pub j_init: f64,
    pub iterations: usize,
    pub function_evals: usize,
    pub termination: Termination,
}

/// Result of [`refine`]. When the iteration or evaluation caps were hit the
/// best parameters found so far are still returned; check [`converged`].
///
/// [`converged`]: Refinement::converged
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub result: CalibrationResult,
    pub stats: RefineStats,
}

impl Refinement {
    pub fn converged(&self) -> bool {
        self.stats.termination.converged()
    }
}

struct Reprojection<'a> {
    corr: &'a CorrespondenceSet,
    model: DistortionModel,
}

impl lm::LeastSquares for Reprojection<'_> {
    fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        objective::residual_vector(self.corr, self.model, x).ok()
    }

    fn residuals_and_jacobian(
        &self,
        x: &DVector<f64>,
    ) -> Option<(DVector<f64>, nalgebra::DMatrix<f64>)> {
        objective::residuals_and_jacobian(self.corr, self.model, x).ok()
    }
}

/// Nonlinear refinement of every intrinsic, distortion and pose parameter.
pub fn refine(
    corr: &CorrespondenceSet,
    init: &CalibrationResult,
    opts: &OptimizerOptions,
) -> Result<Refinement> {
    opts.validate()?;
    let model = init.distortion.model();
    let x0 = objective::pack_parameters(&init.intrinsics, &init.distortion, &init.extrinsics);
    let mut free = vec![true; x0.len()];
    free[6] = model.uses_k2();
    let problem = Reprojection { corr, model };
    let out = lm::minimize(&problem, x0, &free, opts).ok_or_else(|| {
        Error::DegenerateConfiguration("initial parameters put target points behind the camera".into())
    })?;
    let (a, spec, ext) = objective::unpack_parameters(model, &out.x)?;
    let result = CalibrationResult::evaluate(corr, a, spec, ext)?;
    Ok(Refinement {
        result,
        stats: RefineStats {
            j_init: out.initial_cost,
            iterations: out.iterations,
            function_evals: out.function_evals,
            termination: out.termination,
        },
    })
}

/// Linear initialization followed by refinement.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub linear: LinearEstimate,
    pub initial: CalibrationResult,
    pub refinement: Refinement,
}

pub fn calibrate(
    corr: &CorrespondenceSet,
    model: DistortionModel,
    opts: &OptimizerOptions,
) -> Result<Calibration> {
    let linear = linear_estimate(corr)?;
    let initial = linear.with_distortion(model)?;
    let refinement = refine(&linear.correspondences, &initial, opts)?;
    Ok(Calibration {
        linear,
        initial,
        refinement,
    })
}
