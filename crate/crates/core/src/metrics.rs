//! Distortion measures, fold detection, and histogram export.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::energy::PlanarMap;
use crate::error::{Error, Result};
use crate::mesh::{corner_angles_scaled, signed_area_2d, TriMesh};

/// Per-corner angular and per-face area distortion of a planar map, pooled
/// over all corners/faces, with population statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    /// |∠image − ∠source| / ∠source, 3 entries per face.
    pub d_angle: Vec<f64>,
    /// |ratio of normalized areas − 1|, one entry per face.
    pub d_area: Vec<f64>,
    pub d_angle_mean: f64,
    pub d_angle_sd: f64,
    pub d_area_mean: f64,
    pub d_area_sd: f64,
    pub fold_count: usize,
    /// Statistics pool all 3m corners.
    pub pooling: String,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population (not sample) standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

fn image_bbox_scale(map: &PlanarMap) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in map.coords() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
}

/// Relative angular distortion per corner (3 per face, face-major order).
pub fn angular_distortion(mesh: &TriMesh, map: &PlanarMap) -> Result<Vec<f64>> {
    check_sizes(mesh, map)?;
    let scale = image_bbox_scale(map);
    let threshold = 1e-14 * map.bbox_area();
    let mut out = Vec::with_capacity(3 * mesh.n_faces());
    for (fi, f) in mesh.faces().iter().enumerate() {
        let img = signed_area_2d(map.point(f[0]), map.point(f[1]), map.point(f[2]));
        if img.abs() < threshold {
            return Err(Error::DegenerateImageFace {
                face: fi,
                area: img,
            });
        }
        let src = mesh.corner_angles(fi)?;
        let dst = corner_angles_scaled(map.coords(), *f, scale)?;
        for c in 0..3 {
            out.push((dst[c] - src[c]).abs() / src[c]);
        }
    }
    Ok(out)
}

/// Relative area distortion per face: |(|f(τ)|/|f(M)|) / (|τ|/|M|) − 1|.
pub fn area_distortion(mesh: &TriMesh, map: &PlanarMap) -> Result<Vec<f64>> {
    check_sizes(mesh, map)?;
    let image_areas: Vec<f64> = mesh
        .faces()
        .iter()
        .map(|f| signed_area_2d(map.point(f[0]), map.point(f[1]), map.point(f[2])))
        .collect();
    let image_total: f64 = image_areas.iter().sum();
    if image_total <= 0.0 {
        return Err(Error::NonPositiveImageArea(image_total));
    }
    let total = mesh.total_area();
    Ok(mesh
        .face_areas()
        .iter()
        .zip(&image_areas)
        .map(|(&src, &img)| {
            let src_share = src / total;
            let img_share = img / image_total;
            ((img_share - src_share) / src_share).abs()
        })
        .collect())
}

/// Number of image triangles with non-positive signed area (orientation
/// inherited from the mesh). Zero certifies bijectivity in practice.
pub fn fold_count(mesh: &TriMesh, map: &PlanarMap) -> usize {
    mesh.faces()
        .iter()
        .filter(|f| signed_area_2d(map.point(f[0]), map.point(f[1]), map.point(f[2])) <= 0.0)
        .count()
}

/// Full distortion report with pooled statistics.
pub fn distortion_report(mesh: &TriMesh, map: &PlanarMap) -> Result<DistortionReport> {
    let d_angle = angular_distortion(mesh, map)?;
    let d_area = area_distortion(mesh, map)?;
    Ok(DistortionReport {
        d_angle_mean: mean(&d_angle),
        d_angle_sd: std_dev(&d_angle),
        d_area_mean: mean(&d_area),
        d_area_sd: std_dev(&d_area),
        fold_count: fold_count(mesh, map),
        d_angle,
        d_area,
        pooling: "all corners pooled".to_string(),
    })
}

/// Reconstruction quality of a grid-with-centers mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// min(|∠ − 45°|, |∠ − 90°|) per corner, degrees.
    pub d_angle: Vec<f64>,
    /// | |τ| − mean(|τ|) | / mean(|τ|) per face.
    pub d_area: Vec<f64>,
    pub d_angle_mean: f64,
    pub d_angle_sd: f64,
    pub d_area_mean: f64,
    pub d_area_sd: f64,
}

/// Angle/area regularity of a reconstructed mesh whose ideal faces are
/// 45-45-90 triangles of equal area. Degenerate corners count as fully
/// distorted rather than erroring, since reconstructed geometry is data.
pub fn reconstruction_metrics(mesh: &TriMesh) -> ReconstructionReport {
    let mut d_angle = Vec::with_capacity(3 * mesh.n_faces());
    for f in mesh.faces() {
        for c in 0..3 {
            let deg = corner_angle_deg_clamped(mesh, *f, c);
            d_angle.push((deg - 45.0).abs().min((deg - 90.0).abs()));
        }
    }
    let areas = mesh.face_areas();
    let mean_area = mean(areas);
    let d_area: Vec<f64> = areas
        .iter()
        .map(|&a| {
            if mean_area > 0.0 {
                (a - mean_area).abs() / mean_area
            } else {
                0.0
            }
        })
        .collect();
    ReconstructionReport {
        d_angle_mean: mean(&d_angle),
        d_angle_sd: std_dev(&d_angle),
        d_area_mean: mean(&d_area),
        d_area_sd: std_dev(&d_area),
        d_angle,
        d_area,
    }
}

fn corner_angle_deg_clamped(mesh: &TriMesh, f: [usize; 3], corner: usize) -> f64 {
    let verts = mesh.vertices();
    let pk = verts[f[corner]];
    let pi = verts[f[(corner + 1) % 3]];
    let pj = verts[f[(corner + 2) % 3]];
    let u = crate::mesh::sub(pi, pk);
    let v = crate::mesh::sub(pj, pk);
    let nu = crate::mesh::norm(u);
    let nv = crate::mesh::norm(v);
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let cos = (crate::mesh::dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Uniform-width histogram.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// bins + 1 edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() || bins == 0 {
        return Err(Error::EmptyInput);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
    Ok(Histogram { edges, counts })
}

impl Histogram {
    /// CSV rows `bin_lo,bin_hi,count`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (k, &c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[k], self.edges[k + 1], c)?;
        }
        Ok(())
    }
}

fn check_sizes(mesh: &TriMesh, map: &PlanarMap) -> Result<()> {
    if map.len() != mesh.n_vertices() {
        return Err(Error::Shape(format!(
            "map has {} rows, mesh has {} vertices",
            map.len(),
            mesh.n_vertices()
        )));
    }
    Ok(())
}
