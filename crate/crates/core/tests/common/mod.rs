//! Shared fixtures and independent oracles for the acceptance suite.

#![allow(dead_code)]

use std::sync::OnceLock;

use equimap::energy::PlanarMap;
use equimap::mesh::{bumpy_hemisphere, TriMesh};
use equimap::metrics::fold_count;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The ~2k-vertex hemisphere used across criteria, built once.
pub fn hemisphere() -> &'static TriMesh {
    static MESH: OnceLock<TriMesh> = OnceLock::new();
    MESH.get_or_init(|| bumpy_hemisphere(25))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite differences of a scalar function.
pub fn fd_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let plus = f(&xp);
        xp[i] = x[i] - h;
        let minus = f(&xp);
        xp[i] = x[i];
        g[i] = (plus - minus) / (2.0 * h);
    }
    g
}

/// ‖a − b‖₂ / ‖b‖₂.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// A random fold-free planar map of the mesh: the fixed-point initial map
/// perturbed with shrinking amplitude until no face folds.
pub fn random_fold_free_map(mesh: &TriMesh, seed: u64) -> PlanarMap {
    let base = equimap::alm::fixed_point_init(mesh, 0.4, 5).expect("initializer");
    let mut r = rng(seed);
    let noise: Vec<[f64; 2]> = (0..mesh.n_vertices())
        .map(|_| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])
        .collect();
    let mut scale = 0.03;
    for _ in 0..20 {
        let coords: Vec<[f64; 2]> = base
            .coords()
            .iter()
            .zip(&noise)
            .map(|(p, n)| [p[0] + scale * n[0], p[1] + scale * n[1]])
            .collect();
        let map = PlanarMap::new(coords);
        if fold_count(mesh, &map) == 0 {
            return map;
        }
        scale *= 0.5;
    }
    base
}

/// A random disk configuration in polar form: perturbed initializer interior
/// plus perturbed (still increasing) boundary angles.
pub fn random_polar_config(mesh: &TriMesh, seed: u64) -> Vec<f64> {
    let base = equimap::alm::fixed_point_init(mesh, 0.4, 5).expect("initializer");
    let polar = equimap::energy::to_polar(mesh, &base).expect("on circle");
    let mut x = polar.as_slice().to_vec();
    let mut r = rng(seed);
    let n_i = mesh.n_interior();
    for v in x[..2 * n_i].iter_mut() {
        *v += r.gen_range(-0.02..0.02);
    }
    let gap = 2.0 * std::f64::consts::PI / mesh.n_boundary() as f64;
    for v in x[2 * n_i..].iter_mut() {
        *v += r.gen_range(-0.3 * gap..0.3 * gap);
    }
    x
}

/// Partial-pivot dense LU solve, the linear-algebra oracle.
pub fn dense_lu_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&r, &s| m[piv[r] * n + k].abs().total_cmp(&m[piv[s] * n + k].abs()))
            .unwrap();
        piv.swap(k, p);
        let pk = piv[k];
        for r in (k + 1)..n {
            let pr = piv[r];
            let f = m[pr * n + k] / m[pk * n + k];
            m[pr * n + k] = f;
            for c in (k + 1)..n {
                m[pr * n + c] -= f * m[pk * n + c];
            }
        }
    }
    let mut y = vec![0.0; n];
    for k in 0..n {
        let mut s = x[piv[k]];
        for c in 0..k {
            s -= m[piv[k] * n + c] * y[c];
        }
        y[k] = s;
    }
    for k in (0..n).rev() {
        let mut s = y[k];
        for c in (k + 1)..n {
            s -= m[piv[k] * n + c] * x[c];
        }
        x[k] = s / m[piv[k] * n + k];
    }
    x
}

/// Uniform-grid nearest-neighbor structure over 3D points.
pub struct GridNN {
    cell: f64,
    lo: [f64; 3],
    dims: [usize; 3],
    bins: Vec<Vec<u32>>,
    points: Vec<[f64; 3]>,
}

impl GridNN {
    pub fn build(points: Vec<[f64; 3]>, cell: f64) -> GridNN {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let mut dims = [0usize; 3];
        for k in 0..3 {
            dims[k] = (((hi[k] - lo[k]) / cell).ceil() as usize + 1).max(1);
        }
        let mut bins = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let index = |p: &[f64; 3]| -> usize {
            let mut idx = [0usize; 3];
            for k in 0..3 {
                idx[k] = (((p[k] - lo[k]) / cell) as usize).min(dims[k] - 1);
            }
            (idx[2] * dims[1] + idx[1]) * dims[0] + idx[0]
        };
        for (i, p) in points.iter().enumerate() {
            bins[index(p)].push(i as u32);
        }
        GridNN {
            cell,
            lo,
            dims,
            bins,
            points,
        }
    }

    /// Distance to the nearest stored point, searched ring by ring.
    pub fn nearest_dist(&self, p: [f64; 3]) -> f64 {
        let coord = |k: usize| -> isize { ((p[k] - self.lo[k]) / self.cell) as isize };
        let (cx, cy, cz) = (coord(0), coord(1), coord(2));
        let mut best = f64::INFINITY;
        let max_ring = self.dims.iter().max().unwrap() + 1;
        for ring in 0..max_ring as isize {
            for dz in -ring..=ring {
                for dy in -ring..=ring {
                    for dx in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let (ix, iy, iz) = (cx + dx, cy + dy, cz + dz);
                        if ix < 0
                            || iy < 0
                            || iz < 0
                            || ix >= self.dims[0] as isize
                            || iy >= self.dims[1] as isize
                            || iz >= self.dims[2] as isize
                        {
                            continue;
                        }
                        let bin =
                            (iz as usize * self.dims[1] + iy as usize) * self.dims[0] + ix as usize;
                        for &pi in &self.bins[bin] {
                            let q = self.points[pi as usize];
                            let d2 = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>();
                            best = best.min(d2.sqrt());
                        }
                    }
                }
            }
            // Anything in farther rings is at least (ring)·cell away.
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// Surface sample points: vertices, edge midpoints, face centroids.
pub fn surface_samples(mesh: &TriMesh) -> Vec<[f64; 3]> {
    let verts = mesh.vertices();
    let mut pts = verts.to_vec();
    let mut seen = std::collections::HashSet::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                pts.push([
                    0.5 * (verts[a][0] + verts[b][0]),
                    0.5 * (verts[a][1] + verts[b][1]),
                    0.5 * (verts[a][2] + verts[b][2]),
                ]);
            }
        }
        pts.push([
            (verts[f[0]][0] + verts[f[1]][0] + verts[f[2]][0]) / 3.0,
            (verts[f[0]][1] + verts[f[1]][1] + verts[f[2]][1]) / 3.0,
            (verts[f[0]][2] + verts[f[1]][2] + verts[f[2]][2]) / 3.0,
        ]);
    }
    pts
}

/// Symmetric Hausdorff distance between sampled point sets of two surfaces.
pub fn sampled_hausdorff(a: &TriMesh, b: &TriMesh, cell: f64) -> f64 {
    let sa = surface_samples(a);
    let sb = surface_samples(b);
    let nn_b = GridNN::build(sb.clone(), cell);
    let d_ab = sa
        .iter()
        .map(|&p| nn_b.nearest_dist(p))
        .fold(0.0f64, f64::max);
    let nn_a = GridNN::build(sa, cell);
    let d_ba = sb
        .iter()
        .map(|&p| nn_a.nearest_dist(p))
        .fold(0.0f64, f64::max);
    d_ab.max(d_ba)
}

/// Shoelace area of the boundary polygon of a planar map.
pub fn shoelace_oracle(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}
