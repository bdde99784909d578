//! Cotangent Laplacian L_D, stretch Laplacian L_S(f), and their blends.
//!
//! Assembly is per-face: each corner contributes half the cotangent of its
//! angle to the edge opposite it. Written out, the per-corner weight is
//! dot(e1, e2) / (4·area), which is what both builders use; for the stretch
//! Laplacian the dot product is taken in the image while the area stays the
//! source face area (the cot(θ(f))/σ factors cancel into exactly that), so
//! the entries are smooth in the map even across folds. Negative cotangents
//! from obtuse corners are kept as-is.

use crate::energy::PlanarMap;
use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;
use crate::mesh::{dot, signed_area_2d, sub, TriMesh};

/// Which linear combination of L_D and L_S a blend builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlendMode {
    /// (1−λ)·L_D + (2|M|λ/A)·L_S — the combination used by the constrained
    /// solver's preconditioner.
    Constrained,
    /// (1−λ)·L_D + 2λ·L_S — the combination iterated by the fixed-point
    /// initializer.
    FixedPoint,
}

/// Shared sparsity pattern (vertex adjacency plus diagonal) with per-face
/// scatter slots, so stretch-Laplacian values can be reassembled in place
/// once per evaluation without touching the structure.
#[derive(Debug, Clone)]
pub struct LaplacianPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// 12 CSR value slots per face: for each of the 3 corners, the slots of
    /// (i,j), (j,i), (i,i), (j,j) where (i,j) is the edge opposite the corner.
    slots: Vec<u32>,
}

impl LaplacianPattern {
    pub fn new(mesh: &TriMesh) -> Self {
        let n = mesh.n_vertices();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for f in mesh.faces() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (v, neigh) in adj.iter_mut().enumerate() {
            neigh.push(v);
            neigh.sort_unstable();
            neigh.dedup();
            col_idx.extend_from_slice(neigh);
            row_ptr.push(col_idx.len());
        }

        let slot_of = |i: usize, j: usize| -> u32 {
            let (a, b) = (row_ptr[i], row_ptr[i + 1]);
            let p = col_idx[a..b].binary_search(&j).expect("adjacent entry");
            (a + p) as u32
        };
        let mut slots = Vec::with_capacity(12 * mesh.n_faces());
        for f in mesh.faces() {
            for c in 0..3 {
                let i = f[(c + 1) % 3];
                let j = f[(c + 2) % 3];
                slots.push(slot_of(i, j));
                slots.push(slot_of(j, i));
                slots.push(slot_of(i, i));
                slots.push(slot_of(j, j));
            }
        }
        LaplacianPattern {
            n,
            row_ptr,
            col_idx,
            slots,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// An all-zero matrix with this pattern, ready for in-place reassembly.
    pub fn zero_matrix(&self) -> SparseSymMatrix {
        SparseSymMatrix::from_csr_unchecked(
            self.n,
            self.row_ptr.clone(),
            self.col_idx.clone(),
            vec![0.0; self.col_idx.len()],
            true,
        )
    }

    fn scatter(&self, face: usize, corner: usize, w: f64, vals: &mut [f64]) {
        let base = 12 * face + 4 * corner;
        vals[self.slots[base] as usize] -= w;
        vals[self.slots[base + 1] as usize] -= w;
        vals[self.slots[base + 2] as usize] += w;
        vals[self.slots[base + 3] as usize] += w;
    }

    /// Fill `vals` with cotangent-Laplacian values from the 3D mesh.
    pub(crate) fn fill_ld(&self, mesh: &TriMesh, vals: &mut [f64]) -> Result<()> {
        vals.fill(0.0);
        let verts = mesh.vertices();
        for (fi, f) in mesh.faces().iter().enumerate() {
            let area = mesh.face_areas()[fi];
            for c in 0..3 {
                let pk = verts[f[c]];
                let pi = verts[f[(c + 1) % 3]];
                let pj = verts[f[(c + 2) % 3]];
                // ½·cot = dot / (4·area)
                let w = dot(sub(pi, pk), sub(pj, pk)) / (4.0 * area);
                if !w.is_finite() {
                    return Err(Error::DegenerateFace(format!("face {fi} yields non-finite weight")));
                }
                self.scatter(fi, c, w, vals);
            }
        }
        Ok(())
    }

    /// Refresh a matrix sharing this pattern with stretch-Laplacian values
    /// at the given map, without reallocating.
    pub fn fill_ls_into(
        &self,
        mesh: &TriMesh,
        map: &PlanarMap,
        m: &mut SparseSymMatrix,
    ) -> Result<()> {
        if m.nnz() != self.nnz() || m.nrows() != self.n {
            return Err(Error::Shape("matrix does not share this pattern".into()));
        }
        self.fill_ls(mesh, map, m.vals_mut())
    }

    /// Fill `vals` with stretch-Laplacian values measured in the image.
    /// Errors when an image triangle degenerates below 1e-14 of the image
    /// bounding-box area.
    pub(crate) fn fill_ls(&self, mesh: &TriMesh, map: &PlanarMap, vals: &mut [f64]) -> Result<()> {
        if map.len() != mesh.n_vertices() {
            return Err(Error::Shape(format!(
                "map has {} rows, mesh has {} vertices",
                map.len(),
                mesh.n_vertices()
            )));
        }
        vals.fill(0.0);
        let pts = map.coords();
        let threshold = 1e-14 * map.bbox_area();
        for (fi, f) in mesh.faces().iter().enumerate() {
            let source_area = mesh.face_areas()[fi];
            let signed = signed_area_2d(pts[f[0]], pts[f[1]], pts[f[2]]);
            if signed.abs() < threshold {
                return Err(Error::DegenerateImageFace {
                    face: fi,
                    area: signed,
                });
            }
            for c in 0..3 {
                let pk = pts[f[c]];
                let pi = pts[f[(c + 1) % 3]];
                let pj = pts[f[(c + 2) % 3]];
                // ½·cot(θ(f))/σ with cot taken against the signed image area;
                // the signed areas cancel, leaving dot(f) / (4·|τ|).
                let w = dot(sub(pi, pk), sub(pj, pk)) / (4.0 * source_area);
                self.scatter(fi, c, w, vals);
            }
        }
        Ok(())
    }
}

/// Half-cotangents ½·cot(θ_c) of the three corners of face `fi`, measured on
/// the surface. Corner c is opposite the edge (f[c+1], f[c+2]).
pub fn half_cotangents(mesh: &TriMesh, fi: usize) -> [f64; 3] {
    let verts = mesh.vertices();
    let f = mesh.faces()[fi];
    let area = mesh.face_areas()[fi];
    let mut w = [0.0; 3];
    for c in 0..3 {
        let pk = verts[f[c]];
        let pi = verts[f[(c + 1) % 3]];
        let pj = verts[f[(c + 2) % 3]];
        w[c] = dot(sub(pi, pk), sub(pj, pk)) / (4.0 * area);
    }
    w
}

/// Stretch factor σ = |τ| / |f(τ)| of one face, with the image area signed:
/// σ > 0 exactly when the image triangle keeps its orientation.
pub fn stretch_factor(mesh: &TriMesh, map: &PlanarMap, fi: usize) -> f64 {
    let f = mesh.faces()[fi];
    let s = signed_area_2d(map.point(f[0]), map.point(f[1]), map.point(f[2]));
    mesh.face_areas()[fi] / s
}

/// Cotangent Laplacian of the mesh (Dirichlet stencil).
pub fn build_ld(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    let pattern = LaplacianPattern::new(mesh);
    let mut m = pattern.zero_matrix();
    pattern.fill_ld(mesh, m.vals_mut())?;
    Ok(m)
}

/// Stretch Laplacian of the map: the cotangent stencil measured in the image,
/// scaled per face by the inverse stretch factor.
pub fn build_ls(mesh: &TriMesh, map: &PlanarMap) -> Result<SparseSymMatrix> {
    let pattern = LaplacianPattern::new(mesh);
    let mut m = pattern.zero_matrix();
    pattern.fill_ls(mesh, map, m.vals_mut())?;
    Ok(m)
}

/// λ-blend of the two Laplacians.
pub fn blend_llambda(
    ld: &SparseSymMatrix,
    ls: &SparseSymMatrix,
    lambda: f64,
    total_area: f64,
    image_area: f64,
    mode: BlendMode,
) -> Result<SparseSymMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let ls_coeff = match mode {
        BlendMode::Constrained => {
            if image_area <= 0.0 {
                return Err(Error::NonPositiveImageArea(image_area));
            }
            2.0 * total_area * lambda / image_area
        }
        BlendMode::FixedPoint => 2.0 * lambda,
    };
    SparseSymMatrix::add_scaled(1.0 - lambda, ld, ls_coeff, ls)
}
