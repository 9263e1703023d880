use serde::Serialize;

use super::{linear_estimate, refine, CorrespondenceSet, OptimizerOptions};
use crate::distortion::DistortionModel;
use crate::error::Result;

/// Fitted values for one model, in the row order of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub j: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub u0: f64,
    pub beta: f64,
    pub v0: f64,
    pub k1: f64,
    pub k2: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRow {
    pub model: DistortionModel,
    /// Linear least-squares initialization used for this run.
    pub initial_k: [f64; 2],
    /// Model1's linear `k1` with `k2 = 0`, recorded for model2 only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reused_model1_k: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<ModelFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub dropped_views: Vec<i64>,
    pub rows: Vec<ModelRow>,
}

impl ComparisonReport {
    pub fn row(&self, model: DistortionModel) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Final objective per model, `None` where that model failed.
    pub fn objective(&self, model: DistortionModel) -> Option<f64> {
        self.row(model).and_then(|r| r.fit.as_ref()).map(|f| f.j)
    }
}

/// Calibrate under each of the three models from one shared linear
/// estimate of intrinsics and poses.
///
/// A failure in one model is recorded in its row; the others still run.
pub fn compare_models(corr: &CorrespondenceSet, opts: &OptimizerOptions) -> Result<ComparisonReport> {
    opts.validate()?;
    let linear = linear_estimate(corr)?;
    let model1_k1 = linear
        .with_distortion(DistortionModel::Model1)
        .map(|r| r.distortion.k1())
        .ok();

    let rows = DistortionModel::ALL
        .iter()
        .map(|&model| {
            let reused_model1_k = match (model, model1_k1) {
                (DistortionModel::Model2, Some(k1)) => Some([k1, 0.0]),
                _ => None,
            };
            let run = linear.with_distortion(model).and_then(|init| {
                let k = [init.distortion.k1(), init.distortion.k2()];
                refine(&linear.correspondences, &init, opts).map(|r| (k, r))
            });
            match run {
                Ok((initial_k, r)) => {
                    let res = &r.result;
                    ModelRow {
                        model,
                        initial_k,
                        reused_model1_k,
                        fit: Some(ModelFit {
                            j: res.j_final,
                            alpha: res.intrinsics.alpha,
                            gamma: res.intrinsics.gamma,
                            u0: res.intrinsics.u0,
                            beta: res.intrinsics.beta,
                            v0: res.intrinsics.v0,
                            k1: res.distortion.k1(),
                            k2: res.distortion.k2(),
                            iterations: r.stats.iterations,
                            converged: r.converged(),
                        }),
                        error: None,
                    }
                }
                Err(e) => ModelRow {
                    model,
                    initial_k: [f64::NAN; 2],
                    reused_model1_k,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(ComparisonReport {
        dropped_views: linear.dropped_views.clone(),
        rows,
    })
}
