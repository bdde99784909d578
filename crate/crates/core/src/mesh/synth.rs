//! Deterministic synthetic test meshes.
//!
//! Everything here is generated from closed-form rules so the test suite and
//! the examples run without external model downloads.

use crate::mesh::TriMesh;

/// Unit square split into four triangles around a center vertex.
///
/// Vertices: the four corners counterclockwise, then the center.
pub fn unit_square_4tri() -> TriMesh {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.5, 0.5, 0.0],
    ];
    let faces = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
    TriMesh::new(vertices, faces).expect("static mesh is valid")
}

/// Regular triangulated unit disk: `rings` concentric rings around a center
/// vertex, ring `r` holding `6r` vertices at radius `r/rings`. All faces are
/// counterclockwise in the plane.
///
/// Vertex count is `1 + 3·rings·(rings+1)`, face count `6·rings²`.
pub fn disk_mesh(rings: usize) -> TriMesh {
    lifted_disk(rings, |_, _| 0.0)
}

/// Disk triangulation of [`disk_mesh`] lifted by `z = height(x, y)`.
pub fn lifted_disk(rings: usize, height: impl Fn(f64, f64) -> f64) -> TriMesh {
    assert!(rings >= 1, "need at least one ring");
    let ring_start = |r: usize| if r == 0 { 0 } else { 1 + 3 * r * (r - 1) };
    let mut vertices = Vec::with_capacity(1 + 3 * rings * (rings + 1));
    vertices.push([0.0, 0.0, height(0.0, 0.0)]);
    for r in 1..=rings {
        let count = 6 * r;
        let radius = r as f64 / rings as f64;
        for k in 0..count {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            let (x, y) = (radius * ang.cos(), radius * ang.sin());
            vertices.push([x, y, height(x, y)]);
        }
    }

    let mut faces = Vec::with_capacity(6 * rings * rings);
    for r in 0..rings {
        let ni = 6 * r; // 0 for the center "ring"
        let no = 6 * (r + 1);
        let inner = ring_start(r);
        let outer = ring_start(r + 1);
        let inn = |i: usize| if ni == 0 { 0 } else { inner + i % ni };
        let out = |o: usize| outer + o % no;
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            // Advance whichever ring's next vertex comes first by angle;
            // exact integer comparison (o+1)/no <= (i+1)/ni avoids float ties.
            let advance_outer = if o == no {
                false
            } else if ni == 0 || i == ni {
                true
            } else {
                (o + 1) * ni <= (i + 1) * no
            };
            if advance_outer {
                faces.push([inn(i), out(o), out(o + 1)]);
                o += 1;
            } else {
                faces.push([inn(i), out(o), inn(i + 1)]);
                i += 1;
            }
        }
    }
    TriMesh::new(vertices, faces).expect("generated disk is valid")
}

/// Bumpy hemisphere test surface: the unit-disk triangulation lifted by
/// `z = (1 - r²)(0.8 + 0.2 sin(3x) cos(3y))`, so the boundary stays at z = 0.
/// `rings = 25` gives 1951 vertices.
pub fn bumpy_hemisphere(rings: usize) -> TriMesh {
    lifted_disk(rings, |x, y| {
        let r2 = x * x + y * y;
        (1.0 - r2) * (0.8 + 0.2 * (3.0 * x).sin() * (3.0 * y).cos())
    })
}

/// High-curvature "ear": a tall narrow spike in the middle of the disk.
/// Concentrates surface area the way protruding features do, which makes it a
/// good stress case for area-weighted parameterization.
pub fn spike_disk(rings: usize) -> TriMesh {
    lifted_disk(rings, |x, y| {
        let r2 = x * x + y * y;
        1.9 * (-9.0 * r2).exp() * (1.0 - r2)
    })
}

/// Flat unit square as a k×k grid of quads, each split into two triangles.
/// Vertex (ix, iy) sits at (ix/k, iy/k, 0) with index iy·(k+1)+ix.
pub fn square_grid(k: usize) -> TriMesh {
    assert!(k >= 1);
    let step = 1.0 / k as f64;
    let idx = |ix: usize, iy: usize| iy * (k + 1) + ix;
    let mut vertices = Vec::with_capacity((k + 1) * (k + 1));
    for iy in 0..=k {
        for ix in 0..=k {
            vertices.push([ix as f64 * step, iy as f64 * step, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * k * k);
    for iy in 0..k {
        for ix in 0..k {
            let (a, b, c, d) = (idx(ix, iy), idx(ix + 1, iy), idx(ix + 1, iy + 1), idx(ix, iy + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, faces).expect("generated grid is valid")
}
