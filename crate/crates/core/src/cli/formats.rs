//! On-disk formats: correspondence and point CSV tables, calibration, pose
//! and synthetic-scene JSON documents.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    objective, CalibrationResult, Correspondence, CorrespondenceSet, OptimizerOptions, View,
};
use crate::distortion::{DistortionModel, DistortionSpec};
use crate::error::{Error, Result};
use crate::geometry::{IntrinsicMatrix, PixelPoint, ViewExtrinsics, WorldPoint};

pub const CORRESPONDENCE_HEADER: [&str; 5] = ["view_id", "Xw", "Yw", "ud", "vd"];
pub const POINTS_HEADER: [&str; 2] = ["u", "v"];

/// Float formatting used for every CSV number: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// Write via a sibling temporary file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn parse_err(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("line {line}: {msg}"))
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            1,
            format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| parse_err(line, format!("missing column `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{name}` from `{raw}`")))
}

// CRLF is folded to LF up front; the csv reader miscounts lines otherwise.
fn reader<R: Read>(mut r: R) -> Result<csv::Reader<io::Cursor<String>>> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let text = text.replace("\r\n", "\n");
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(io::Cursor::new(text)))
}

/// Parse `view_id,Xw,Yw,ud,vd`. Views keep their first-appearance order.
pub fn read_correspondences<R: Read>(r: R) -> Result<CorrespondenceSet> {
    let mut rdr = reader(r)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e))?
        .clone();
    check_header(&headers, &CORRESPONDENCE_HEADER)?;
    let mut views: Vec<View> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 5 {
            return Err(parse_err(line, format!("expected 5 columns, found {}", rec.len())));
        }
        let id: i64 = field(&rec, 0, "view_id", line)?;
        let x: f64 = field(&rec, 1, "Xw", line)?;
        let y: f64 = field(&rec, 2, "Yw", line)?;
        let u: f64 = field(&rec, 3, "ud", line)?;
        let v: f64 = field(&rec, 4, "vd", line)?;
        if ![x, y, u, v].iter().all(|t| t.is_finite()) {
            return Err(parse_err(line, "non-finite value"));
        }
        let c = Correspondence {
            world: WorldPoint::planar(x, y),
            observed: PixelPoint::new(u, v),
        };
        match views.iter_mut().find(|vw| vw.id == id) {
            Some(vw) => vw.points.push(c),
            None => views.push(View {
                id,
                points: vec![c],
            }),
        }
    }
    CorrespondenceSet::new(views)
}

pub fn write_correspondences<W: Write>(w: W, corr: &CorrespondenceSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    wtr.write_record(CORRESPONDENCE_HEADER).map_err(io)?;
    for v in corr.views() {
        for c in &v.points {
            wtr.write_record([
                v.id.to_string(),
                fmt_f64(c.world.x),
                fmt_f64(c.world.y),
                fmt_f64(c.observed.u),
                fmt_f64(c.observed.v),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_points<R: Read>(r: R) -> Result<Vec<PixelPoint>> {
    let mut rdr = reader(r)?;
    let headers = rdr.headers().map_err(|e| parse_err(1, e))?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    check_header(&headers, &POINTS_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(parse_err(line, format!("expected 2 columns, found {}", rec.len())));
        }
        out.push(PixelPoint::new(
            field(&rec, 0, "u", line)?,
            field(&rec, 1, "v", line)?,
        ));
    }
    Ok(out)
}

pub fn write_points<W: Write>(w: W, pts: &[PixelPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    wtr.write_record(POINTS_HEADER).map_err(io)?;
    for p in pts {
        wtr.write_record([fmt_f64(p.u), fmt_f64(p.v)]).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsJson {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub u0: f64,
    pub v0: f64,
}

impl From<IntrinsicMatrix> for IntrinsicsJson {
    fn from(a: IntrinsicMatrix) -> Self {
        Self {
            alpha: a.alpha,
            beta: a.beta,
            gamma: a.gamma,
            u0: a.u0,
            v0: a.v0,
        }
    }
}

impl IntrinsicsJson {
    pub fn to_matrix(self) -> Result<IntrinsicMatrix> {
        IntrinsicMatrix::new(self.alpha, self.beta, self.gamma, self.u0, self.v0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewJson {
    pub view_id: i64,
    pub axis_angle: [f64; 3],
    pub t: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionsJson {
    pub tol_x: f64,
    pub tol_fun: f64,
    pub max_iter: usize,
    pub max_fun_evals: usize,
}

impl From<OptimizerOptions> for OptionsJson {
    fn from(o: OptimizerOptions) -> Self {
        Self {
            tol_x: o.tol_x,
            tol_fun: o.tol_fun,
            max_iter: o.max_iter,
            max_fun_evals: o.max_fun_evals,
        }
    }
}

/// Calibration document written by `radcal calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub model: DistortionModel,
    pub k1: f64,
    pub k2: f64,
    pub intrinsics: IntrinsicsJson,
    pub views: Vec<ViewJson>,
    #[serde(rename = "J_final")]
    pub j_final: f64,
    pub rms_px: f64,
    pub options: OptionsJson,
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

impl CalibrationFile {
    pub fn from_result(r: &CalibrationResult, opts: &OptimizerOptions, converged: bool) -> Self {
        Self {
            model: r.distortion.model(),
            k1: r.distortion.k1(),
            k2: r.distortion.k2(),
            intrinsics: r.intrinsics.into(),
            views: r
                .view_ids
                .iter()
                .zip(&r.extrinsics)
                .map(|(&id, e)| ViewJson {
                    view_id: id,
                    axis_angle: [e.rotation.x, e.rotation.y, e.rotation.z],
                    t: [e.translation.x, e.translation.y, e.translation.z],
                })
                .collect(),
            j_final: r.j_final,
            rms_px: r.rms_px,
            options: (*opts).into(),
            converged,
        }
    }

    pub fn intrinsics(&self) -> Result<IntrinsicMatrix> {
        self.intrinsics.to_matrix()
    }

    pub fn distortion(&self) -> Result<DistortionSpec> {
        DistortionSpec::new(self.model, self.k1, self.k2)
    }

    pub fn extrinsics(&self) -> Vec<(i64, ViewExtrinsics)> {
        self.views
            .iter()
            .map(|v| {
                (
                    v.view_id,
                    ViewExtrinsics::new(Vector3::from(v.axis_angle), Vector3::from(v.t)),
                )
            })
            .collect()
    }

    /// Objective of the stored parameters on `corr`, matching views by id.
    pub fn recompute_objective(&self, corr: &CorrespondenceSet) -> Result<f64> {
        let ext = self.extrinsics();
        let mut kept = Vec::new();
        let mut poses = Vec::new();
        for v in corr.views() {
            if let Some((_, e)) = ext.iter().find(|(id, _)| *id == v.id) {
                kept.push(v.clone());
                poses.push(*e);
            }
        }
        let subset = CorrespondenceSet::new(kept)?;
        objective(&subset, &self.intrinsics()?, &self.distortion()?, &poses)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration file serializes")
    }
}

/// Assumed camera pose for localization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    pub axis_angle: [f64; 3],
    pub t: [f64; 3],
}

impl PoseFile {
    pub fn extrinsics(&self) -> ViewExtrinsics {
        ViewExtrinsics::new(Vector3::from(self.axis_angle), Vector3::from(self.t))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }
}
