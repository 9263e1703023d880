//! Seeded synthetic planar-target scenes.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::formats::IntrinsicsJson;
use crate::calibration::{Correspondence, CorrespondenceSet, View};
use crate::distortion::{distort_normalized, DistortionModel, DistortionSpec};
use crate::error::{Error, Result};
use crate::geometry::{IntrinsicMatrix, ViewExtrinsics, WorldPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Distance between neighbouring target points, in target units.
    pub spacing: f64,
}

/// Ranges the per-view target poses are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseRanges {
    /// Tilt of the target plane away from fronto-parallel, degrees.
    pub tilt_deg: [f64; 2],
    /// Maximum in-plane rotation, degrees.
    pub roll_deg: f64,
    /// Distance of the target centre from the camera along the optical axis.
    pub distance: [f64; 2],
    /// Maximum lateral offset of the target centre.
    pub offset: f64,
}

impl Default for PoseRanges {
    fn default() -> Self {
        Self {
            tilt_deg: [20.0, 40.0],
            roll_deg: 15.0,
            distance: [0.45, 0.6],
            offset: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionJson {
    pub model: DistortionModel,
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub grid: GridSpec,
    pub views: usize,
    #[serde(default)]
    pub poses: PoseRanges,
    pub intrinsics: IntrinsicsJson,
    pub distortion: DistortionJson,
    #[serde(default)]
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Generated data and the parameters that produced it.
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub correspondences: CorrespondenceSet,
    pub intrinsics: IntrinsicMatrix,
    pub distortion: DistortionSpec,
    pub extrinsics: Vec<ViewExtrinsics>,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let p = &self.poses;
        let ok = g.rows >= 2
            && g.cols >= 2
            && g.spacing > 0.0
            && self.views >= 1
            && self.noise_sigma >= 0.0
            && self.noise_sigma.is_finite()
            && p.tilt_deg[0] >= 0.0
            && p.tilt_deg[0] <= p.tilt_deg[1]
            && p.tilt_deg[1] < 90.0
            && p.distance[0] > 0.0
            && p.distance[0] <= p.distance[1]
            && p.roll_deg >= 0.0
            && p.offset >= 0.0;
        if !ok {
            return Err(Error::InvalidInput("synthetic scene spec out of range".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Target centred at the world origin, poses stratified in tilt direction so
/// that no two views share a target orientation.
pub fn generate(spec: &SynthSpec) -> Result<SynthScene> {
    spec.validate()?;
    let a = spec.intrinsics.to_matrix()?;
    let dist = DistortionSpec::new(spec.distortion.model, spec.distortion.k1, spec.distortion.k2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidInput(format!("noise sigma: {e}")))?;

    let g = spec.grid;
    let cx = (g.cols - 1) as f64 * 0.5;
    let cy = (g.rows - 1) as f64 * 0.5;
    let grid: Vec<WorldPoint> = (0..g.rows)
        .flat_map(|i| {
            (0..g.cols).map(move |j| {
                WorldPoint::planar((j as f64 - cx) * g.spacing, (i as f64 - cy) * g.spacing)
            })
        })
        .collect();

    let p = spec.poses;
    let mut views = Vec::with_capacity(spec.views);
    let mut extrinsics = Vec::with_capacity(spec.views);
    for vi in 0..spec.views {
        let azimuth =
            std::f64::consts::TAU * (vi as f64 + uniform(&mut rng, 0.0, 1.0)) / spec.views as f64;
        let tilt = uniform(&mut rng, p.tilt_deg[0], p.tilt_deg[1]).to_radians();
        let roll = uniform(&mut rng, -p.roll_deg, p.roll_deg).to_radians();
        let depth = uniform(&mut rng, p.distance[0], p.distance[1]);
        let ox = uniform(&mut rng, -p.offset, p.offset);
        let oy = uniform(&mut rng, -p.offset, p.offset);

        let axis = Unit::new_normalize(Vector3::new(azimuth.cos(), azimuth.sin(), 0.0));
        let r_cw: Matrix3<f64> = (Rotation3::from_axis_angle(&axis, tilt)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), roll))
        .into_inner();
        let t_cw = Vector3::new(ox, oy, depth);
        let pose = ViewExtrinsics::from_camera_from_world(&r_cw, &t_cw)?;

        let mut points = Vec::with_capacity(grid.len());
        for &wp in &grid {
            let n = pose.to_camera(wp).normalize()?;
            let mut px = a.to_pixel(distort_normalized(&dist, n));
            if spec.noise_sigma > 0.0 {
                px.u += noise.sample(&mut rng);
                px.v += noise.sample(&mut rng);
            }
            points.push(Correspondence {
                world: wp,
                observed: px,
            });
        }
        views.push(View {
            id: vi as i64,
            points,
        });
        extrinsics.push(pose);
    }
    Ok(SynthScene {
        correspondences: CorrespondenceSet::new(views)?,
        intrinsics: a,
        distortion: dist,
        extrinsics,
    })
}
