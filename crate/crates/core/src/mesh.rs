//! Simply connected open triangular meshes: validation, boundary extraction,
//! and geometric queries.
//!
//! A [`TriMesh`] is immutable after construction; [`TriMesh::new`] runs the
//! full validation pipeline (disk topology, consistent orientation, single
//! boundary loop, non-degenerate faces) so downstream code can rely on the
//! invariants without re-checking.

mod io;
mod synth;

pub use io::{load_mesh, load_mesh_auto, write_obj, write_planar_obj, MeshFormat};
pub use synth::{bumpy_hemisphere, disk_mesh, lifted_disk, spike_disk, square_grid, unit_square_4tri};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Interior angles of one triangle, radians, ordered like the face corners.
pub type CornerAngles = [f64; 3];

/// Where a vertex sits, with its slot in the respective ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexRole {
    /// Position within `interior_indices`.
    Interior(usize),
    /// Position within the boundary loop.
    Boundary(usize),
}

/// Non-fatal findings from mesh validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationWarning {
    /// All three vertices of the face are on the boundary.
    FaceWithoutInteriorVertex(usize),
}

impl std::fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationWarning::FaceWithoutInteriorVertex(i) => {
                write!(f, "face {i} has no interior vertex")
            }
        }
    }
}

/// A simply connected open triangular mesh embedded in 3-space.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    boundary_loop: Vec<usize>,
    interior: Vec<usize>,
    roles: Vec<VertexRole>,
    face_areas: Vec<f64>,
    total_area: f64,
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    warnings: Vec<ValidationWarning>,
}

impl TriMesh {
    /// Build and validate a mesh. Fails unless the input is an oriented
    /// manifold triangle mesh with disk topology and a single boundary loop.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Topology("fewer than 3 vertices".into()));
        }
        if faces.is_empty() {
            return Err(Error::Topology("mesh has no faces".into()));
        }
        for v in &vertices {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::Parse {
                    path: "<memory>".into(),
                    line: 0,
                    msg: "non-finite vertex position".into(),
                });
            }
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::Index(format!(
                        "face {fi} references vertex {v} but mesh has {n} vertices"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace(format!(
                    "face {fi} repeats a vertex index"
                )));
            }
        }

        let (bbox_min, bbox_max) = bbox(&vertices);
        let diag = bbox_diag(bbox_min, bbox_max);
        if diag <= 0.0 {
            return Err(Error::DegenerateFace("mesh bounding box has zero extent".into()));
        }

        let mut face_areas = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let area = face_area_3d(&vertices, *f);
            let min_edge = min_edge_len(&vertices, *f);
            if min_edge < 1e-14 * diag || area < 1e-14 * diag * diag {
                return Err(Error::DegenerateFace(format!(
                    "face {fi}: area {area:e}, shortest edge {min_edge:e}"
                )));
            }
            face_areas.push(area);
        }
        let total_area: f64 = face_areas.iter().sum();

        // Edge census. Key is the undirected edge; per key we count the two
        // possible directions separately so orientation checks fall out.
        let mut edges: HashMap<(usize, usize), [u32; 2]> = HashMap::new();
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let slot = usize::from(a > b);
                edges.entry(key).or_insert([0, 0])[slot] += 1;
            }
        }
        let mut boundary_next: HashMap<usize, usize> = HashMap::new();
        let mut n_boundary_edges = 0usize;
        for (&(a, b), &counts) in &edges {
            let total = counts[0] + counts[1];
            match total {
                1 => {
                    // Boundary edge, directed as it appears in its face.
                    let (from, to) = if counts[0] == 1 { (a, b) } else { (b, a) };
                    if boundary_next.insert(from, to).is_some() {
                        return Err(Error::Topology(format!(
                            "vertex {from} has more than one outgoing boundary edge (non-manifold boundary)"
                        )));
                    }
                    n_boundary_edges += 1;
                }
                2 => {
                    if counts[0] != 1 {
                        return Err(Error::Topology(format!(
                            "edge ({a}, {b}) has inconsistent orientation"
                        )));
                    }
                }
                _ => {
                    return Err(Error::Topology(format!(
                        "edge ({a}, {b}) is shared by {total} faces (non-manifold)"
                    )));
                }
            }
        }
        if n_boundary_edges == 0 {
            return Err(Error::Topology("closed surface: no boundary loop".into()));
        }

        // Walk the directed boundary edges. Following face orientation makes
        // the loop counterclockwise with respect to it.
        let start = *boundary_next.keys().min().unwrap();
        let mut boundary_loop = vec![start];
        let mut cur = boundary_next[&start];
        while cur != start {
            boundary_loop.push(cur);
            cur = *boundary_next.get(&cur).ok_or_else(|| {
                Error::Topology(format!("boundary walk dead-ends at vertex {cur}"))
            })?;
            if boundary_loop.len() > n_boundary_edges {
                return Err(Error::Topology("boundary walk does not close".into()));
            }
        }
        if boundary_loop.len() != n_boundary_edges {
            return Err(Error::Topology(format!(
                "multiple boundary loops: walked {} of {} boundary edges",
                boundary_loop.len(),
                n_boundary_edges
            )));
        }

        // Euler characteristic of a disk.
        let euler = n as i64 - edges.len() as i64 + faces.len() as i64;
        if euler != 1 {
            return Err(Error::Topology(format!(
                "Euler characteristic {euler}, expected 1 (disk)"
            )));
        }

        // Connectivity (Euler alone admits e.g. a disk plus a torus).
        {
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
            for &(a, b) in edges.keys() {
                adj[a].push(b);
                adj[b].push(a);
            }
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        stack.push(w);
                    }
                }
            }
            if count != n {
                return Err(Error::Topology(format!(
                    "mesh is not connected ({count} of {n} vertices reachable)"
                )));
            }
        }

        let mut is_boundary = vec![false; n];
        for &v in &boundary_loop {
            is_boundary[v] = true;
        }
        let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();

        let mut roles = vec![VertexRole::Interior(0); n];
        for (slot, &v) in interior.iter().enumerate() {
            roles[v] = VertexRole::Interior(slot);
        }
        for (pos, &v) in boundary_loop.iter().enumerate() {
            roles[v] = VertexRole::Boundary(pos);
        }

        let mut warnings = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().all(|&v| is_boundary[v]) {
                warnings.push(ValidationWarning::FaceWithoutInteriorVertex(fi));
            }
        }

        Ok(TriMesh {
            vertices,
            faces,
            boundary_loop,
            interior,
            roles,
            face_areas,
            total_area,
            bbox_min,
            bbox_max,
            warnings,
        })
    }

    /// Assemble a mesh whose topology is known-correct by construction
    /// (geometry-image reconstruction). Skips validation and permits
    /// degenerate 3D faces.
    pub(crate) fn from_parts_unchecked(
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
        boundary_loop: Vec<usize>,
    ) -> Self {
        let n = vertices.len();
        let mut is_boundary = vec![false; n];
        for &v in &boundary_loop {
            is_boundary[v] = true;
        }
        let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();
        let mut roles = vec![VertexRole::Interior(0); n];
        for (slot, &v) in interior.iter().enumerate() {
            roles[v] = VertexRole::Interior(slot);
        }
        for (pos, &v) in boundary_loop.iter().enumerate() {
            roles[v] = VertexRole::Boundary(pos);
        }
        let face_areas: Vec<f64> = faces
            .iter()
            .map(|&f| face_area_3d(&vertices, f))
            .collect();
        let total_area = face_areas.iter().sum();
        let (bbox_min, bbox_max) = bbox(&vertices);
        TriMesh {
            vertices,
            faces,
            boundary_loop,
            interior,
            roles,
            face_areas,
            total_area,
            bbox_min,
            bbox_max,
            warnings: Vec::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_loop.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Boundary vertex indices in counterclockwise cyclic order, starting at
    /// the smallest boundary index.
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    /// Interior vertex indices in ascending order.
    pub fn interior_indices(&self) -> &[usize] {
        &self.interior
    }

    pub fn role(&self, vertex: usize) -> VertexRole {
        self.roles[vertex]
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        matches!(self.roles[vertex], VertexRole::Boundary(_))
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Total surface area `|M|`.
    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        (self.bbox_min, self.bbox_max)
    }

    pub fn bbox_diag(&self) -> f64 {
        bbox_diag(self.bbox_min, self.bbox_max)
    }

    pub fn warnings(&self) -> &[ValidationWarning] {
        &self.warnings
    }

    /// Interior angles of face `fi` measured on the surface.
    pub fn corner_angles(&self, fi: usize) -> Result<CornerAngles> {
        corner_angles(&self.vertices, self.faces[fi])
    }

    /// Cumulative 3D arc length along the boundary loop; entry `i` is the
    /// length from the loop start to loop vertex `i`. One extra entry holds
    /// the full perimeter.
    pub fn boundary_arc_length(&self) -> Vec<f64> {
        let nb = self.boundary_loop.len();
        let mut cum = Vec::with_capacity(nb + 1);
        cum.push(0.0);
        for i in 0..nb {
            let a = self.vertices[self.boundary_loop[i]];
            let b = self.vertices[self.boundary_loop[(i + 1) % nb]];
            let d = dist3(a, b);
            cum.push(cum[i] + d);
        }
        cum
    }
}

/// Ordered boundary loop of a validated mesh.
///
/// The loop is established at construction; this accessor exists as the
/// query-level entry point.
pub fn boundary_loop(mesh: &TriMesh) -> &[usize] {
    mesh.boundary_loop()
}

/// Interior angles of the triangle `face` over `positions` (2D or 3D), via
/// arccosine of normalized edge-vector dot products.
pub fn corner_angles<const K: usize>(
    positions: &[[f64; K]],
    face: [usize; 3],
) -> Result<CornerAngles> {
    let mut lo = [f64::INFINITY; K];
    let mut hi = [f64::NEG_INFINITY; K];
    for p in positions {
        for k in 0..K {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diag = (0..K).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt();
    corner_angles_scaled(positions, face, diag)
}

pub(crate) fn corner_angles_scaled<const K: usize>(
    positions: &[[f64; K]],
    face: [usize; 3],
    scale: f64,
) -> Result<CornerAngles> {
    let mut angles = [0.0; 3];
    for c in 0..3 {
        let pk = positions[face[c]];
        let pi = positions[face[(c + 1) % 3]];
        let pj = positions[face[(c + 2) % 3]];
        let u = sub(pi, pk);
        let v = sub(pj, pk);
        let nu = norm(u);
        let nv = norm(v);
        if nu < 1e-14 * scale || nv < 1e-14 * scale {
            return Err(Error::DegenerateFace(format!(
                "edge shorter than 1e-14 of the bounding-box diagonal at corner {c}"
            )));
        }
        let cos = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
        angles[c] = cos.acos();
    }
    Ok(angles)
}

pub(crate) fn sub<const K: usize>(a: [f64; K], b: [f64; K]) -> [f64; K] {
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = a[k] - b[k];
    }
    out
}

pub(crate) fn dot<const K: usize>(a: [f64; K], b: [f64; K]) -> f64 {
    let mut s = 0.0;
    for k in 0..K {
        s += a[k] * b[k];
    }
    s
}

pub(crate) fn norm<const K: usize>(a: [f64; K]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm(sub(a, b))
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unsigned area of a 3D triangle.
pub fn face_area_3d(vertices: &[[f64; 3]], f: [usize; 3]) -> f64 {
    let u = sub(vertices[f[1]], vertices[f[0]]);
    let v = sub(vertices[f[2]], vertices[f[0]]);
    0.5 * norm(cross3(u, v))
}

/// Signed area of a 2D triangle (positive when counterclockwise).
pub fn signed_area_2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn min_edge_len(vertices: &[[f64; 3]], f: [usize; 3]) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..3 {
        m = m.min(dist3(vertices[f[k]], vertices[f[(k + 1) % 3]]));
    }
    m
}

fn bbox(vertices: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    (lo, hi)
}

fn bbox_diag(lo: [f64; 3], hi: [f64; 3]) -> f64 {
    norm(sub(hi, lo))
}
