//! Geometry images: sampling a square-parameterized surface into a regular
//! raster of 3D positions, and reconstructing a triangular mesh from one.
//!
//! The pixel grid covers [0,1]² inclusively: pixel (row i, col j) samples
//! parameter (j/(W−1), i/(H−1)). On disk an image is a 16-bit RGB PNG
//! (x→R, y→G, z→B, linearly quantized over the bounding box) next to a
//! `<name>.gi.json` sidecar holding the bounding box and mask.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::PlanarMap;
use crate::error::{Error, Result};
use crate::mesh::{signed_area_2d, TriMesh};
use crate::metrics::fold_count;

#[derive(Debug, Clone)]
pub struct GeometryImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, `width·height` samples; row i corresponds to v = i/(H−1).
    pub samples: Vec<[f64; 3]>,
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
    /// Pixels that hit the parameter domain (all true for square maps).
    pub mask: Vec<bool>,
}

/// Uniform-grid spatial hash over image triangles for point location.
struct TriGrid {
    nx: usize,
    ny: usize,
    lo: [f64; 2],
    cell: f64,
    bins: Vec<Vec<u32>>,
}

impl TriGrid {
    fn build(map: &PlanarMap, faces: &[[usize; 3]]) -> TriGrid {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in map.coords() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let target = (faces.len() as f64 / 2.0).sqrt().ceil().max(1.0) as usize;
        let n = target.min(1024);
        let cell = extent / n as f64;
        let nx = n;
        let ny = n;
        let mut bins = vec![Vec::new(); nx * ny];
        let clamp_cell = |v: f64, lo: f64, n: usize| -> usize {
            (((v - lo) / cell).floor() as isize).clamp(0, n as isize - 1) as usize
        };
        for (fi, f) in faces.iter().enumerate() {
            let pts = [map.point(f[0]), map.point(f[1]), map.point(f[2])];
            let (mut flo, mut fhi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for k in 0..2 {
                    flo[k] = flo[k].min(p[k]);
                    fhi[k] = fhi[k].max(p[k]);
                }
            }
            let (cx0, cx1) = (clamp_cell(flo[0], lo[0], nx), clamp_cell(fhi[0], lo[0], nx));
            let (cy0, cy1) = (clamp_cell(flo[1], lo[1], ny), clamp_cell(fhi[1], lo[1], ny));
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    bins[cy * nx + cx].push(fi as u32);
                }
            }
        }
        TriGrid {
            nx,
            ny,
            lo,
            cell,
            bins,
        }
    }

    fn candidates(&self, p: [f64; 2]) -> &[u32] {
        let cx = (((p[0] - self.lo[0]) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1)
            as usize;
        let cy = (((p[1] - self.lo[1]) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1)
            as usize;
        &self.bins[cy * self.nx + cx]
    }
}

/// Barycentric coordinates of `p` in the image triangle of face `f`.
fn barycentric(map: &PlanarMap, f: [usize; 3], p: [f64; 2]) -> Option<[f64; 3]> {
    let a = map.point(f[0]);
    let b = map.point(f[1]);
    let c = map.point(f[2]);
    let total = signed_area_2d(a, b, c);
    if total == 0.0 {
        return None;
    }
    let w0 = signed_area_2d(p, b, c) / total;
    let w1 = signed_area_2d(a, p, c) / total;
    let w2 = signed_area_2d(a, b, p) / total;
    Some([w0, w1, w2])
}

/// Sample the surface through a fold-free square parameterization.
pub fn encode(mesh: &TriMesh, map: &PlanarMap, width: usize, height: usize) -> Result<GeometryImage> {
    if width < 2 || height < 2 {
        return Err(Error::Shape(format!(
            "geometry image needs at least 2x2 pixels, got {width}x{height}"
        )));
    }
    if map.len() != mesh.n_vertices() {
        return Err(Error::Shape("map size does not match mesh".into()));
    }
    let folds = fold_count(mesh, map);
    if folds > 0 {
        return Err(Error::FoldedMap { folds });
    }

    let grid = TriGrid::build(map, mesh.faces());
    let verts = mesh.vertices();
    let mut samples = Vec::with_capacity(width * height);
    let mut mask = Vec::with_capacity(width * height);
    const SNAP: f64 = 1e-9;
    for i in 0..height {
        let v = i as f64 / (height - 1) as f64;
        for j in 0..width {
            let u = j as f64 / (width - 1) as f64;
            let p = [u, v];
            // Best candidate: the triangle with the least-negative worst
            // barycentric coordinate; inside hits have all three ≥ 0.
            let mut best: Option<(f64, usize, [f64; 3])> = None;
            for &fi in grid.candidates(p) {
                let f = mesh.faces()[fi as usize];
                if let Some(w) = barycentric(map, f, p) {
                    let worst = w[0].min(w[1]).min(w[2]);
                    if best.as_ref().map_or(true, |(bw, ..)| worst > *bw) {
                        best = Some((worst, fi as usize, w));
                    }
                    if worst >= 0.0 {
                        break;
                    }
                }
            }
            match best {
                Some((worst, fi, w)) if worst >= -SNAP => {
                    // Snap slightly-outside points onto the triangle.
                    let wc = [w[0].max(0.0), w[1].max(0.0), w[2].max(0.0)];
                    let sum = wc[0] + wc[1] + wc[2];
                    let f = mesh.faces()[fi];
                    let mut pos = [0.0; 3];
                    for k in 0..3 {
                        for d in 0..3 {
                            pos[d] += wc[k] / sum * verts[f[k]][d];
                        }
                    }
                    samples.push(pos);
                    mask.push(true);
                }
                _ => {
                    return Err(Error::PointLocationFailure { u, v });
                }
            }
        }
    }

    let mut bbox_min = [f64::INFINITY; 3];
    let mut bbox_max = [f64::NEG_INFINITY; 3];
    for s in &samples {
        for k in 0..3 {
            bbox_min[k] = bbox_min[k].min(s[k]);
            bbox_max[k] = bbox_max[k].max(s[k]);
        }
    }
    Ok(GeometryImage {
        width,
        height,
        samples,
        bbox_min,
        bbox_max,
        mask,
    })
}

/// Rebuild a structured triangular mesh: the pixel grid plus one center
/// vertex per quad (averaged from its four corners), four triangles per
/// quad, oriented like the parameter domain.
pub fn reconstruct(img: &GeometryImage) -> TriMesh {
    let (w, h) = (img.width, img.height);
    let grid = |i: usize, j: usize| i * w + j;
    let center = |i: usize, j: usize| w * h + i * (w - 1) + j;
    let mut vertices = img.samples.clone();
    vertices.reserve((w - 1) * (h - 1));
    for i in 0..h - 1 {
        for j in 0..w - 1 {
            let mut c = [0.0; 3];
            for (gi, gj) in [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)] {
                for d in 0..3 {
                    c[d] += 0.25 * img.samples[grid(gi, gj)][d];
                }
            }
            vertices.push(c);
        }
    }
    let mut faces = Vec::with_capacity(4 * (w - 1) * (h - 1));
    for i in 0..h - 1 {
        for j in 0..w - 1 {
            let (p00, p10) = (grid(i, j), grid(i, j + 1));
            let (p11, p01) = (grid(i + 1, j + 1), grid(i + 1, j));
            let c = center(i, j);
            faces.push([p00, p10, c]);
            faces.push([p10, p11, c]);
            faces.push([p11, p01, c]);
            faces.push([p01, p00, c]);
        }
    }
    // Boundary loop of the grid perimeter, counterclockwise in (u, v),
    // starting at pixel (0, 0) which is vertex 0.
    let mut boundary = Vec::with_capacity(2 * (w + h) - 4);
    for j in 0..w {
        boundary.push(grid(0, j));
    }
    for i in 1..h {
        boundary.push(grid(i, w - 1));
    }
    for j in (0..w - 1).rev() {
        boundary.push(grid(h - 1, j));
    }
    for i in (1..h - 1).rev() {
        boundary.push(grid(i, 0));
    }
    TriMesh::from_parts_unchecked(vertices, faces, boundary)
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    width: usize,
    height: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<Vec<u8>>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("gi.json")
}

/// Write the 16-bit RGB PNG and its JSON sidecar.
pub fn write_image(img: &GeometryImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width, img.height);
    let mut buf: Vec<u16> = Vec::with_capacity(w * h * 3);
    let extent: Vec<f64> = (0..3)
        .map(|k| img.bbox_max[k] - img.bbox_min[k])
        .collect();
    for s in &img.samples {
        for k in 0..3 {
            let q = if extent[k] > 0.0 {
                ((s[k] - img.bbox_min[k]) / extent[k] * 65535.0).round() as u16
            } else {
                0
            };
            buf.push(q);
        }
    }
    let image_buf: image::ImageBuffer<image::Rgb<u16>, Vec<u16>> =
        image::ImageBuffer::from_vec(w as u32, h as u32, buf)
            .ok_or_else(|| Error::Image("buffer size mismatch".into()))?;
    image::DynamicImage::ImageRgb16(image_buf)
        .save(path)
        .map_err(|e| Error::Image(e.to_string()))?;

    let mask = if img.mask.iter().all(|&b| b) {
        None
    } else {
        Some(img.mask.iter().map(|&b| u8::from(b)).collect())
    };
    let sc = Sidecar {
        bbox_min: img.bbox_min,
        bbox_max: img.bbox_max,
        width: w,
        height: h,
        mask,
    };
    let text = serde_json::to_string_pretty(&sc)?;
    std::fs::write(sidecar_path(path), text)?;
    Ok(())
}

/// Read a geometry image written by [`write_image`]. Values are recovered to
/// within one quantization step (bbox extent / 65535 per axis).
pub fn read_image(path: impl AsRef<Path>) -> Result<GeometryImage> {
    let path = path.as_ref();
    let sc_path = sidecar_path(path);
    if !sc_path.exists() {
        return Err(Error::MissingSidecar(sc_path.display().to_string()));
    }
    let sc: Sidecar = serde_json::from_str(&std::fs::read_to_string(&sc_path)?)?;
    let dynimg = image::open(path).map_err(|e| Error::Image(e.to_string()))?;
    let rgb = dynimg.into_rgb16();
    if rgb.width() as usize != sc.width || rgb.height() as usize != sc.height {
        return Err(Error::Shape(format!(
            "PNG is {}x{}, sidecar says {}x{}",
            rgb.width(),
            rgb.height(),
            sc.width,
            sc.height
        )));
    }
    let extent: Vec<f64> = (0..3).map(|k| sc.bbox_max[k] - sc.bbox_min[k]).collect();
    let raw = rgb.into_raw();
    let mut samples = Vec::with_capacity(sc.width * sc.height);
    for px in raw.chunks_exact(3) {
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = sc.bbox_min[k] + px[k] as f64 / 65535.0 * extent[k];
        }
        samples.push(p);
    }
    let mask = match sc.mask {
        Some(m) => m.into_iter().map(|b| b != 0).collect(),
        None => vec![true; sc.width * sc.height],
    };
    Ok(GeometryImage {
        width: sc.width,
        height: sc.height,
        samples,
        bbox_min: sc.bbox_min,
        bbox_max: sc.bbox_max,
        mask,
    })
}
