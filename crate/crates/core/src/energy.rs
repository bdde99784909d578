//! Energies of simplicial maps and their analytic gradients.
//!
//! The map is represented two ways: as an n×2 matrix of image coordinates
//! ([`PlanarMap`]) and, for disk-shaped problems, as a stacked vector of
//! interior coordinates plus boundary angles ([`PolarMap`]), which keeps the
//! boundary on the unit circle structurally.
//!
//! Energies: the Dirichlet energy E_D = ½·tr(fᵀ L_D f), the stretch energy
//! E_S = ½·tr(fᵀ L_S(f) f), the conformal energy E_C = E_D − A, and the
//! authalic energy E_A = (|M|/A)·E_S − A, where A is the image area. Both
//! E_C and E_A are nonnegative on bijective maps and vanish exactly on
//! conformal respectively area-preserving maps.
//!
//! Gradients are assembled from Laplacian matvecs plus the polygon-area
//! gradient; ∇E_S = 2·L_S(f)·f holds exactly (not just to first order), so
//! every gradient here matches central finite differences to roundoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::{blend_llambda, BlendMode, LaplacianPattern};
use crate::linalg::SparseSymMatrix;
use crate::mesh::TriMesh;
use crate::solver::{PrecondBlock, Preconditioner};

/// Image coordinates, one row per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarMap {
    coords: Vec<[f64; 2]>,
}

impl PlanarMap {
    pub fn new(coords: Vec<[f64; 2]>) -> Self {
        PlanarMap { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.coords
    }

    pub fn point(&self, v: usize) -> [f64; 2] {
        self.coords[v]
    }

    pub fn into_coords(self) -> Vec<[f64; 2]> {
        self.coords
    }

    /// Area of the axis-aligned bounding box of the image.
    pub fn bbox_area(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.coords {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if self.coords.is_empty() {
            return 0.0;
        }
        (hi[0] - lo[0]) * (hi[1] - lo[1])
    }
}

/// Disk-shaped map as a stacked vector (interior x, interior y, boundary θ).
#[derive(Debug, Clone, PartialEq)]
pub struct PolarMap {
    data: Vec<f64>,
    n_interior: usize,
    n_boundary: usize,
}

impl PolarMap {
    pub fn new(data: Vec<f64>, n_interior: usize, n_boundary: usize) -> Result<Self> {
        if data.len() != 2 * n_interior + n_boundary {
            return Err(Error::Shape(format!(
                "polar vector length {} does not match 2·{n_interior} + {n_boundary}",
                data.len()
            )));
        }
        Ok(PolarMap {
            data,
            n_interior,
            n_boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn interior_x(&self) -> &[f64] {
        &self.data[..self.n_interior]
    }

    pub fn interior_y(&self) -> &[f64] {
        &self.data[self.n_interior..2 * self.n_interior]
    }

    /// Boundary angles in boundary-loop order.
    pub fn theta(&self) -> &[f64] {
        &self.data[2 * self.n_interior..]
    }
}

/// All energies of one map evaluation. `residual` is μ·E_A − E_C, the
/// constraint violation of the balancing problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EnergyReport {
    pub e_d: f64,
    pub e_s: f64,
    pub e_c: f64,
    pub e_a: f64,
    pub area: f64,
    pub residual: f64,
}

/// Boundary angles of a planar map whose boundary rows lie on the unit
/// circle (within 1e-6), in boundary-loop order.
pub fn to_polar(mesh: &TriMesh, map: &PlanarMap) -> Result<PolarMap> {
    if map.len() != mesh.n_vertices() {
        return Err(Error::Shape(format!(
            "map has {} rows, mesh has {} vertices",
            map.len(),
            mesh.n_vertices()
        )));
    }
    let n_i = mesh.n_interior();
    let n_b = mesh.n_boundary();
    let mut data = vec![0.0; 2 * n_i + n_b];
    for (slot, &v) in mesh.interior_indices().iter().enumerate() {
        data[slot] = map.point(v)[0];
        data[n_i + slot] = map.point(v)[1];
    }
    for (pos, &v) in mesh.boundary_loop().iter().enumerate() {
        let [x, y] = map.point(v);
        let r = (x * x + y * y).sqrt();
        if (r - 1.0).abs() > 1e-6 {
            return Err(Error::BoundaryOffCircle {
                vertex: v,
                dist: (r - 1.0).abs(),
            });
        }
        data[2 * n_i + pos] = y.atan2(x);
    }
    PolarMap::new(data, n_i, n_b)
}

/// Planar coordinates of a polar map; boundary rows are (cos θ, sin θ).
pub fn from_polar(mesh: &TriMesh, f: &PolarMap) -> Result<PlanarMap> {
    if f.n_interior() != mesh.n_interior() || f.n_boundary() != mesh.n_boundary() {
        return Err(Error::Shape("polar map does not match mesh".into()));
    }
    let mut coords = vec![[0.0; 2]; mesh.n_vertices()];
    unpack_polar(mesh, f.as_slice(), &mut coords, &mut Vec::new());
    Ok(PlanarMap::new(coords))
}

fn unpack_polar(mesh: &TriMesh, x: &[f64], coords: &mut [[f64; 2]], cs: &mut Vec<[f64; 2]>) {
    let n_i = mesh.n_interior();
    cs.clear();
    cs.reserve(mesh.n_boundary());
    for (slot, &v) in mesh.interior_indices().iter().enumerate() {
        coords[v] = [x[slot], x[n_i + slot]];
    }
    for (pos, &v) in mesh.boundary_loop().iter().enumerate() {
        let t = x[2 * n_i + pos];
        let (s, c) = t.sin_cos();
        coords[v] = [c, s];
        cs.push([c, s]);
    }
}

/// Signed area of the inscribed boundary polygon, A(θ) = ½·cᵀD s with the
/// cyclic difference operator D.
pub fn image_area_polar(theta: &[f64]) -> f64 {
    let n = theta.len();
    debug_assert!(n >= 3);
    let mut acc = 0.0;
    for i in 0..n {
        let (si_next, _) = theta[(i + 1) % n].sin_cos();
        let (si_prev, _) = theta[(i + n - 1) % n].sin_cos();
        acc += theta[i].cos() * (si_next - si_prev);
    }
    0.5 * acc
}

/// Gradient of [`image_area_polar`]: −½(diag(c)·Dc + diag(s)·Ds).
pub fn grad_area_polar(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let c: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let s: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let mut g = vec![0.0; n];
    for i in 0..n {
        let dc = c[(i + 1) % n] - c[(i + n - 1) % n];
        let ds = s[(i + 1) % n] - s[(i + n - 1) % n];
        g[i] = -0.5 * (c[i] * dc + s[i] * ds);
    }
    g
}

/// Shoelace area of the boundary polygon of a planar map.
pub fn shoelace_area(coords: &[[f64; 2]], boundary_loop: &[usize]) -> f64 {
    let n = boundary_loop.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = coords[boundary_loop[i]];
        let q = coords[boundary_loop[(i + 1) % n]];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

/// Accumulate coeff·∇A into `out`, where A is the shoelace area over the
/// boundary loop. Interior rows are untouched.
fn accumulate_shoelace_grad(
    coords: &[[f64; 2]],
    boundary_loop: &[usize],
    coeff: f64,
    out: &mut [[f64; 2]],
) {
    let n = boundary_loop.len();
    for i in 0..n {
        let v = boundary_loop[i];
        let next = coords[boundary_loop[(i + 1) % n]];
        let prev = coords[boundary_loop[(i + n - 1) % n]];
        out[v][0] += coeff * 0.5 * (next[1] - prev[1]);
        out[v][1] += coeff * 0.5 * (prev[0] - next[0]);
    }
}

/// Dirichlet energy ½·tr(fᵀ L_D f).
pub fn dirichlet_energy(ld: &SparseSymMatrix, f: &PlanarMap) -> Result<f64> {
    quad_energy(ld, f)
}

/// Stretch energy ½·tr(fᵀ L_S(f) f); pass the stretch Laplacian built at f.
pub fn stretch_energy(ls: &SparseSymMatrix, f: &PlanarMap) -> Result<f64> {
    quad_energy(ls, f)
}

fn quad_energy(l: &SparseSymMatrix, f: &PlanarMap) -> Result<f64> {
    if l.nrows() != f.len() || l.ncols() != f.len() {
        return Err(Error::Shape(format!(
            "operator is {}x{}, map has {} rows",
            l.nrows(),
            l.ncols(),
            f.len()
        )));
    }
    let mut lf = vec![[0.0; 2]; f.len()];
    l.matvec_pairs(f.coords(), &mut lf);
    let mut acc = 0.0;
    for (p, q) in f.coords().iter().zip(&lf) {
        acc += p[0] * q[0] + p[1] * q[1];
    }
    Ok(0.5 * acc)
}

// ---------------------------------------------------------------------------
// Shared evaluation core
// ---------------------------------------------------------------------------

/// Cotangent operator plus a reusable stretch-Laplacian buffer for one mesh.
pub(crate) struct EnergySystem<'m> {
    mesh: &'m TriMesh,
    ld: SparseSymMatrix,
    pattern: LaplacianPattern,
}

/// Per-model scratch space; owning one per model instance keeps evaluations
/// re-entrant across threads.
pub(crate) struct EvalScratch {
    ls: SparseSymMatrix,
    ldf: Vec<[f64; 2]>,
    lsf: Vec<[f64; 2]>,
    grad: Vec<[f64; 2]>,
}

struct Energies {
    e_d: f64,
    e_s: f64,
    e_c: f64,
    e_a: f64,
    area: f64,
}

impl Energies {
    fn report(&self, mu: f64) -> EnergyReport {
        EnergyReport {
            e_d: self.e_d,
            e_s: self.e_s,
            e_c: self.e_c,
            e_a: self.e_a,
            area: self.area,
            residual: mu * self.e_a - self.e_c,
        }
    }
}

impl<'m> EnergySystem<'m> {
    fn new(mesh: &'m TriMesh) -> Result<Self> {
        let pattern = LaplacianPattern::new(mesh);
        let mut ld = pattern.zero_matrix();
        pattern.fill_ld(mesh, ld.vals_mut())?;
        Ok(EnergySystem { mesh, ld, pattern })
    }

    fn scratch(&self) -> EvalScratch {
        let n = self.mesh.n_vertices();
        EvalScratch {
            ls: self.pattern.zero_matrix(),
            ldf: vec![[0.0; 2]; n],
            lsf: vec![[0.0; 2]; n],
            grad: vec![[0.0; 2]; n],
        }
    }

    pub(crate) fn ld(&self) -> &SparseSymMatrix {
        &self.ld
    }

    /// Refresh L_S(f) in the scratch buffer and evaluate all energies.
    /// `area` is the image area the representation computed.
    fn energies(&self, f: &PlanarMap, area: f64, ws: &mut EvalScratch) -> Result<Energies> {
        self.pattern.fill_ls(self.mesh, f, ws.ls.vals_mut())?;
        self.ld.matvec_pairs(f.coords(), &mut ws.ldf);
        ws.ls.matvec_pairs(f.coords(), &mut ws.lsf);
        let mut e_d = 0.0;
        let mut e_s = 0.0;
        for (p, (a, b)) in f.coords().iter().zip(ws.ldf.iter().zip(&ws.lsf)) {
            e_d += p[0] * a[0] + p[1] * a[1];
            e_s += p[0] * b[0] + p[1] * b[1];
        }
        e_d *= 0.5;
        e_s *= 0.5;
        if area <= 0.0 {
            return Err(Error::NonPositiveImageArea(area));
        }
        let total = self.mesh.total_area();
        Ok(Energies {
            e_d,
            e_s,
            e_c: e_d - area,
            e_a: (total / area) * e_s - area,
            area,
        })
    }

    /// Planar gradient of the augmented Lagrangian
    /// L = E_C + λ·r + (ρ/2)·r² with r = μ·E_A − E_C, written into ws.grad.
    /// Relies on the matvecs left in the scratch by [`Self::energies`].
    fn auglag_grad_planar(
        &self,
        f: &PlanarMap,
        e: &Energies,
        lambda: f64,
        rho: f64,
        mu: f64,
        ws: &mut EvalScratch,
    ) {
        let r = mu * e.e_a - e.e_c;
        let w = lambda + rho * r; // weight of ∇r
        let total = self.mesh.total_area();
        // ∇E_C = L_D f − ∇A;  ∇E_A = (2|M|/A)·L_S f + (−|M|·E_S/A² − 1)·∇A
        let c_ec = 1.0 - w;
        let c_lsf = w * mu * 2.0 * total / e.area;
        for (g, (a, b)) in ws.grad.iter_mut().zip(ws.ldf.iter().zip(&ws.lsf)) {
            g[0] = c_ec * a[0] + c_lsf * b[0];
            g[1] = c_ec * a[1] + c_lsf * b[1];
        }
        let area_coeff =
            c_ec * (-1.0) + w * mu * (-total * e.e_s / (e.area * e.area) - 1.0);
        accumulate_shoelace_grad(
            f.coords(),
            self.mesh.boundary_loop(),
            area_coeff,
            &mut ws.grad,
        );
    }
}

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

/// A differentiable parameterization model: packs the free variables of a
/// map representation into a flat vector and evaluates the augmented
/// Lagrangian over it.
pub trait ParamModel {
    fn dim(&self) -> usize;
    fn mesh(&self) -> &TriMesh;
    /// Decode the optimization vector into image coordinates.
    fn to_planar(&mut self, x: &[f64]) -> PlanarMap;
    fn value(&mut self, x: &[f64], lambda: f64, rho: f64, mu: f64) -> Result<(f64, EnergyReport)>;
    fn value_grad(
        &mut self,
        x: &[f64],
        lambda: f64,
        rho: f64,
        mu: f64,
    ) -> Result<(f64, EnergyReport, Vec<f64>)>;
    /// Energies at `x` without the Lagrangian terms.
    fn report(&mut self, x: &[f64], mu: f64) -> Result<EnergyReport> {
        Ok(self.value(x, 0.0, 0.0, mu)?.1)
    }
    /// Block preconditioner built from the blended Laplacian at `x0`.
    fn preconditioner(&mut self, x0: &[f64], lambda: f64) -> Result<Preconditioner>;
}

/// Disk representation: interior coordinates free, boundary on the unit
/// circle through its angles.
pub struct DiskModel<'m> {
    sys: EnergySystem<'m>,
    ws: EvalScratch,
    coords: Vec<[f64; 2]>,
    cs: Vec<[f64; 2]>,
}

impl<'m> DiskModel<'m> {
    pub fn new(mesh: &'m TriMesh) -> Result<Self> {
        let sys = EnergySystem::new(mesh)?;
        let ws = sys.scratch();
        let n = mesh.n_vertices();
        Ok(DiskModel {
            sys,
            ws,
            coords: vec![[0.0; 2]; n],
            cs: Vec::new(),
        })
    }

    pub fn pack(&self, f: &PolarMap) -> Vec<f64> {
        f.as_slice().to_vec()
    }

    pub fn polar_from_vec(&self, x: &[f64]) -> Result<PolarMap> {
        PolarMap::new(
            x.to_vec(),
            self.sys.mesh.n_interior(),
            self.sys.mesh.n_boundary(),
        )
    }

    fn eval(
        &mut self,
        x: &[f64],
        lambda: f64,
        rho: f64,
        mu: f64,
        with_grad: bool,
    ) -> Result<(f64, EnergyReport, Option<Vec<f64>>)> {
        let mesh = self.sys.mesh;
        unpack_polar(mesh, x, &mut self.coords, &mut self.cs);
        let f = PlanarMap::new(std::mem::take(&mut self.coords));
        let out = (|| {
            let theta = &x[2 * mesh.n_interior()..];
            let area = image_area_polar(theta);
            let e = self.sys.energies(&f, area, &mut self.ws)?;
            let r = mu * e.e_a - e.e_c;
            let value = e.e_c + lambda * r + 0.5 * rho * r * r;
            let grad = if with_grad {
                self.sys
                    .auglag_grad_planar(&f, &e, lambda, rho, mu, &mut self.ws);
                let n_i = mesh.n_interior();
                let mut g = vec![0.0; x.len()];
                for (slot, &v) in mesh.interior_indices().iter().enumerate() {
                    g[slot] = self.ws.grad[v][0];
                    g[n_i + slot] = self.ws.grad[v][1];
                }
                for (pos, &v) in mesh.boundary_loop().iter().enumerate() {
                    let [c, s] = self.cs[pos];
                    g[2 * n_i + pos] = -s * self.ws.grad[v][0] + c * self.ws.grad[v][1];
                }
                Some(g)
            } else {
                None
            };
            Ok((value, e.report(mu), grad))
        })();
        self.coords = f.coords;
        out
    }
}

impl ParamModel for DiskModel<'_> {
    fn dim(&self) -> usize {
        2 * self.sys.mesh.n_interior() + self.sys.mesh.n_boundary()
    }

    fn mesh(&self) -> &TriMesh {
        self.sys.mesh
    }

    fn to_planar(&mut self, x: &[f64]) -> PlanarMap {
        let mut coords = vec![[0.0; 2]; self.sys.mesh.n_vertices()];
        unpack_polar(self.sys.mesh, x, &mut coords, &mut self.cs);
        PlanarMap::new(coords)
    }

    fn value(&mut self, x: &[f64], lambda: f64, rho: f64, mu: f64) -> Result<(f64, EnergyReport)> {
        let (v, rep, _) = self.eval(x, lambda, rho, mu, false)?;
        Ok((v, rep))
    }

    fn value_grad(
        &mut self,
        x: &[f64],
        lambda: f64,
        rho: f64,
        mu: f64,
    ) -> Result<(f64, EnergyReport, Vec<f64>)> {
        let (v, rep, g) = self.eval(x, lambda, rho, mu, true)?;
        Ok((v, rep, g.expect("gradient requested")))
    }

    fn preconditioner(&mut self, x0: &[f64], lambda: f64) -> Result<Preconditioner> {
        let mesh = self.sys.mesh;
        let f0 = self.to_planar(x0);
        let theta = &x0[2 * mesh.n_interior()..];
        let area = image_area_polar(theta);
        self.sys
            .pattern
            .fill_ls(mesh, &f0, self.ws.ls.vals_mut())?;
        let l = blend_llambda(
            self.sys.ld(),
            &self.ws.ls,
            lambda,
            mesh.total_area(),
            area,
            BlendMode::Constrained,
        )?;
        let interior = mesh.interior_indices();
        let boundary = mesh.boundary_loop();
        let l_ii = l.submatrix(interior, interior)?;
        let l_bb = l.submatrix(boundary, boundary)?;
        let f_ii = crate::linalg::factorize(&l_ii)?;
        let f_bb = crate::linalg::factorize(&l_bb)?;
        let n_i = interior.len();
        let dim = self.dim();
        Ok(Preconditioner::new(
            dim,
            vec![
                PrecondBlock {
                    factor: f_ii,
                    spans: vec![0..n_i, n_i..2 * n_i],
                },
                PrecondBlock {
                    factor: f_bb,
                    spans: vec![2 * n_i..dim],
                },
            ],
        ))
    }
}

/// Free-coordinate layout of the square representation: which vertices have
/// a free x (resp. y), and the fixed values everywhere else.
#[derive(Debug, Clone)]
pub struct SquareLayout {
    pub free_x: Vec<usize>,
    pub free_y: Vec<usize>,
    pub base: Vec<[f64; 2]>,
}

/// Square representation: the four corners are pinned and the remaining
/// boundary vertices slide along their square edge; the optimization vector
/// is (x at free_x, y at free_y).
pub struct SquareModel<'m> {
    sys: EnergySystem<'m>,
    ws: EvalScratch,
    layout: SquareLayout,
    coords: Vec<[f64; 2]>,
}

impl<'m> SquareModel<'m> {
    pub fn new(mesh: &'m TriMesh, layout: SquareLayout) -> Result<Self> {
        if layout.base.len() != mesh.n_vertices() {
            return Err(Error::Shape("layout base size mismatch".into()));
        }
        let sys = EnergySystem::new(mesh)?;
        let ws = sys.scratch();
        let coords = layout.base.clone();
        Ok(SquareModel {
            sys,
            ws,
            layout,
            coords,
        })
    }

    pub fn layout(&self) -> &SquareLayout {
        &self.layout
    }

    pub fn pack(&self, f: &PlanarMap) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for &v in &self.layout.free_x {
            x.push(f.point(v)[0]);
        }
        for &v in &self.layout.free_y {
            x.push(f.point(v)[1]);
        }
        x
    }

    fn unpack(&mut self, x: &[f64]) {
        self.coords.copy_from_slice(&self.layout.base);
        let nx = self.layout.free_x.len();
        for (k, &v) in self.layout.free_x.iter().enumerate() {
            self.coords[v][0] = x[k];
        }
        for (k, &v) in self.layout.free_y.iter().enumerate() {
            self.coords[v][1] = x[nx + k];
        }
    }

    fn eval(
        &mut self,
        x: &[f64],
        lambda: f64,
        rho: f64,
        mu: f64,
        with_grad: bool,
    ) -> Result<(f64, EnergyReport, Option<Vec<f64>>)> {
        self.unpack(x);
        let mesh = self.sys.mesh;
        let f = PlanarMap::new(std::mem::take(&mut self.coords));
        let out = (|| {
            let area = shoelace_area(f.coords(), mesh.boundary_loop());
            let e = self.sys.energies(&f, area, &mut self.ws)?;
            let r = mu * e.e_a - e.e_c;
            let value = e.e_c + lambda * r + 0.5 * rho * r * r;
            let grad = if with_grad {
                self.sys
                    .auglag_grad_planar(&f, &e, lambda, rho, mu, &mut self.ws);
                let nx = self.layout.free_x.len();
                let mut g = vec![0.0; x.len()];
                for (k, &v) in self.layout.free_x.iter().enumerate() {
                    g[k] = self.ws.grad[v][0];
                }
                for (k, &v) in self.layout.free_y.iter().enumerate() {
                    g[nx + k] = self.ws.grad[v][1];
                }
                Some(g)
            } else {
                None
            };
            Ok((value, e.report(mu), grad))
        })();
        self.coords = f.coords;
        out
    }
}

impl ParamModel for SquareModel<'_> {
    fn dim(&self) -> usize {
        self.layout.free_x.len() + self.layout.free_y.len()
    }

    fn mesh(&self) -> &TriMesh {
        self.sys.mesh
    }

    fn to_planar(&mut self, x: &[f64]) -> PlanarMap {
        self.unpack(x);
        PlanarMap::new(self.coords.clone())
    }

    fn value(&mut self, x: &[f64], lambda: f64, rho: f64, mu: f64) -> Result<(f64, EnergyReport)> {
        let (v, rep, _) = self.eval(x, lambda, rho, mu, false)?;
        Ok((v, rep))
    }

    fn value_grad(
        &mut self,
        x: &[f64],
        lambda: f64,
        rho: f64,
        mu: f64,
    ) -> Result<(f64, EnergyReport, Vec<f64>)> {
        let (v, rep, g) = self.eval(x, lambda, rho, mu, true)?;
        Ok((v, rep, g.expect("gradient requested")))
    }

    fn preconditioner(&mut self, x0: &[f64], lambda: f64) -> Result<Preconditioner> {
        let mesh = self.sys.mesh;
        let f0 = self.to_planar(x0);
        let area = shoelace_area(f0.coords(), mesh.boundary_loop());
        self.sys
            .pattern
            .fill_ls(mesh, &f0, self.ws.ls.vals_mut())?;
        let l = blend_llambda(
            self.sys.ld(),
            &self.ws.ls,
            lambda,
            mesh.total_area(),
            area,
            BlendMode::Constrained,
        )?;
        let l_xx = l.submatrix(&self.layout.free_x, &self.layout.free_x)?;
        let l_yy = l.submatrix(&self.layout.free_y, &self.layout.free_y)?;
        let f_xx = crate::linalg::factorize(&l_xx)?;
        let f_yy = crate::linalg::factorize(&l_yy)?;
        let nx = self.layout.free_x.len();
        let dim = self.dim();
        Ok(Preconditioner::new(
            dim,
            vec![
                PrecondBlock {
                    factor: f_xx,
                    spans: vec![0..nx],
                },
                PrecondBlock {
                    factor: f_yy,
                    spans: vec![nx..dim],
                },
            ],
        ))
    }
}

// ---------------------------------------------------------------------------
// Convenience entry points (disk representation)
// ---------------------------------------------------------------------------

/// Conformal energy E_C = E_D − A at a polar map.
pub fn conformal_energy(mesh: &TriMesh, f: &PolarMap) -> Result<f64> {
    let mut m = DiskModel::new(mesh)?;
    Ok(m.value(f.as_slice(), 0.0, 0.0, 1.0)?.1.e_c)
}

/// Authalic energy E_A = (|M|/A)·E_S − A at a polar map.
pub fn authalic_energy(mesh: &TriMesh, f: &PolarMap) -> Result<f64> {
    let mut m = DiskModel::new(mesh)?;
    Ok(m.value(f.as_slice(), 0.0, 0.0, 1.0)?.1.e_a)
}

/// Gradient of E_C with respect to the polar vector.
pub fn grad_conformal(mesh: &TriMesh, f: &PolarMap) -> Result<Vec<f64>> {
    let mut m = DiskModel::new(mesh)?;
    Ok(m.value_grad(f.as_slice(), 0.0, 0.0, 1.0)?.2)
}

/// Gradient of E_A with respect to the polar vector.
pub fn grad_authalic(mesh: &TriMesh, f: &PolarMap) -> Result<Vec<f64>> {
    let mut m = DiskModel::new(mesh)?;
    Ok(m.value_grad(f.as_slice(), 1.0, 0.0, 1.0)?.2)
}

/// Augmented Lagrangian value E_C + λ·r + (ρ/2)·r², r = E_A − E_C.
pub fn auglag_value(mesh: &TriMesh, f: &PolarMap, lambda: f64, rho: f64) -> Result<f64> {
    let mut m = DiskModel::new(mesh)?;
    Ok(m.value(f.as_slice(), lambda, rho, 1.0)?.0)
}

/// Gradient of the augmented Lagrangian with respect to the polar vector.
pub fn auglag_grad(mesh: &TriMesh, f: &PolarMap, lambda: f64, rho: f64) -> Result<Vec<f64>> {
    let mut m = DiskModel::new(mesh)?;
    Ok(m.value_grad(f.as_slice(), lambda, rho, 1.0)?.2)
}

/// Energies of a planar map (image area from the boundary polygon).
pub fn energy_report(mesh: &TriMesh, map: &PlanarMap, mu: f64) -> Result<EnergyReport> {
    let sys = EnergySystem::new(mesh)?;
    let mut ws = sys.scratch();
    let area = shoelace_area(map.coords(), mesh.boundary_loop());
    let e = sys.energies(map, area, &mut ws)?;
    Ok(e.report(mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{disk_mesh, unit_square_4tri};
    use std::f64::consts::PI;

    fn planar_identity(mesh: &TriMesh) -> PlanarMap {
        PlanarMap::new(mesh.vertices().iter().map(|v| [v[0], v[1]]).collect::<Vec<_>>())
    }

    #[test]
    fn to_polar_basic_angles() {
        // Ring of 12: boundary vertices every 30°, including (0, −1).
        let m = disk_mesh(2);
        let map = planar_identity(&m);
        let polar = to_polar(&m, &map).unwrap();
        assert!((polar.theta()[0] - 0.0).abs() < 1e-15);
        let idx_quarter = m
            .boundary_loop()
            .iter()
            .position(|&v| map.point(v)[1] < -0.99)
            .unwrap();
        assert!((polar.theta()[idx_quarter] + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn polar_round_trip() {
        let m = disk_mesh(3);
        let map = planar_identity(&m);
        let polar = to_polar(&m, &map).unwrap();
        let back = from_polar(&m, &polar).unwrap();
        for (a, b) in map.coords().iter().zip(back.coords()) {
            assert!((a[0] - b[0]).abs() < 1e-12);
            assert!((a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn to_polar_rejects_off_circle() {
        let m = disk_mesh(1);
        let mut map = planar_identity(&m);
        let b0 = m.boundary_loop()[0];
        map.coords_mut()[b0] = [1.5, 0.0];
        let err = to_polar(&m, &map).unwrap_err();
        assert!(matches!(err, Error::BoundaryOffCircle { .. }));
    }

    #[test]
    fn polar_area_square_and_hexagon() {
        let sq = [0.0, PI / 2.0, PI, 1.5 * PI];
        assert!((image_area_polar(&sq) - 2.0).abs() < 1e-12);
        let hex: Vec<f64> = (0..6).map(|k| 2.0 * PI * k as f64 / 6.0).collect();
        assert!((image_area_polar(&hex) - 1.5 * 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn polar_area_matches_shoelace() {
        // Deterministic pseudo-random sorted angle vectors.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in [3usize, 5, 17, 64] {
            let mut theta: Vec<f64> = (0..n).map(|_| next() * 2.0 * PI).collect();
            theta.sort_by(f64::total_cmp);
            let pts: Vec<[f64; 2]> = theta.iter().map(|t| [t.cos(), t.sin()]).collect();
            let loop_idx: Vec<usize> = (0..n).collect();
            let shoelace = shoelace_area(&pts, &loop_idx);
            assert!((image_area_polar(&theta) - shoelace).abs() < 1e-12);
        }
    }

    #[test]
    fn area_gradient_symmetry_and_fd() {
        let hex: Vec<f64> = (0..6).map(|k| 2.0 * PI * k as f64 / 6.0).collect();
        let g = grad_area_polar(&hex);
        for v in &g {
            assert!((v - g[0]).abs() < 1e-12);
        }

        let check_fd = |theta: &[f64]| {
            let g = grad_area_polar(theta);
            let h = 1e-6;
            for i in 0..theta.len() {
                let mut tp = theta.to_vec();
                tp[i] += h;
                let mut tm = theta.to_vec();
                tm[i] -= h;
                let fd = (image_area_polar(&tp) - image_area_polar(&tm)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8, "component {i}: fd={fd} g={}", g[i]);
            }
        };
        check_fd(&[0.1, 1.3, 2.9, 5.0]);
        let mut perturbed = hex.clone();
        for (k, t) in perturbed.iter_mut().enumerate() {
            *t += 0.05 * ((k * k) as f64).sin();
        }
        check_fd(&perturbed);
    }

    #[test]
    fn identity_energies_on_planar_disk() {
        let m = disk_mesh(6);
        let map = planar_identity(&m);
        let ld = crate::laplacian::build_ld(&m).unwrap();
        let e_d = dirichlet_energy(&ld, &map).unwrap();
        assert!((e_d - m.total_area()).abs() < 1e-10);

        let ls = crate::laplacian::build_ls(&m, &map).unwrap();
        let e_s = stretch_energy(&ls, &map).unwrap();
        assert!((e_s - m.total_area()).abs() < 1e-10);

        let polar = to_polar(&m, &map).unwrap();
        assert!(conformal_energy(&m, &polar).unwrap().abs() < 1e-9);
        assert!(authalic_energy(&m, &polar).unwrap().abs() < 1e-9);
    }

    #[test]
    fn stretch_energy_equals_image_area_sum() {
        // Independent identity: E_S = Σ |f(τ)|² / |τ|.
        let m = crate::mesh::bumpy_hemisphere(5);
        let map = PlanarMap::new(
            m.vertices()
                .iter()
                .map(|v| [v[0] * (1.0 + 0.2 * v[2]), v[1] - 0.1 * v[2]])
                .collect::<Vec<_>>(),
        );
        let ls = crate::laplacian::build_ls(&m, &map).unwrap();
        let e_s = stretch_energy(&ls, &map).unwrap();
        let mut oracle = 0.0;
        for (fi, f) in m.faces().iter().enumerate() {
            let s = crate::mesh::signed_area_2d(
                map.point(f[0]),
                map.point(f[1]),
                map.point(f[2]),
            );
            oracle += s * s / m.face_areas()[fi];
        }
        assert!((e_s - oracle).abs() < 1e-10 * oracle.max(1.0));
    }

    #[test]
    fn grad_conformal_vanishes_at_flat_identity() {
        let m = disk_mesh(6);
        let polar = to_polar(&m, &planar_identity(&m)).unwrap();
        let g = grad_conformal(&m, &polar).unwrap();
        let worst = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(worst <= 1e-8, "worst gradient component {worst}");
    }

    #[test]
    fn scale_invariance_of_ec_ea() {
        let m = crate::mesh::bumpy_hemisphere(5);
        let scaled = TriMesh::new(
            m.vertices().iter().map(|v| v.map(|c| 7.0 * c)).collect(),
            m.faces().to_vec(),
        )
        .unwrap();
        // Shared polar configuration.
        let theta: Vec<f64> = (0..m.n_boundary())
            .map(|k| 2.0 * PI * k as f64 / m.n_boundary() as f64 + 0.01 * (k as f64).sin())
            .collect();
        let mut data = vec![0.0; 2 * m.n_interior() + m.n_boundary()];
        for (slot, &v) in m.interior_indices().iter().enumerate() {
            data[slot] = 0.8 * m.vertices()[v][0];
            data[m.n_interior() + slot] = 0.8 * m.vertices()[v][1];
        }
        data[2 * m.n_interior()..].copy_from_slice(&theta);
        let f = PolarMap::new(data, m.n_interior(), m.n_boundary()).unwrap();

        let (ec1, ea1) = (
            conformal_energy(&m, &f).unwrap(),
            authalic_energy(&m, &f).unwrap(),
        );
        let (ec2, ea2) = (
            conformal_energy(&scaled, &f).unwrap(),
            authalic_energy(&scaled, &f).unwrap(),
        );
        assert!((ec1 - ec2).abs() <= 1e-10 * ec1.abs().max(1.0));
        assert!((ea1 - ea2).abs() <= 1e-10 * ea1.abs().max(1.0));

        let g1 = grad_authalic(&m, &f).unwrap();
        let g2 = grad_authalic(&scaled, &f).unwrap();
        let scale = g1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn auglag_reduces_when_penalty_vanishes() {
        let m = unit_square_4tri();
        // Free-standing polar configuration on the 4-triangle mesh.
        let theta = [0.2, 1.8, 3.3, 4.9];
        let mut data = vec![0.1, -0.05];
        data.extend_from_slice(&theta);
        let f = PolarMap::new(data, 1, 4).unwrap();

        let ec = conformal_energy(&m, &f).unwrap();
        let v = auglag_value(&m, &f, 0.0, 0.0).unwrap();
        assert!((v - ec).abs() < 1e-14);
        let g = auglag_grad(&m, &f, 0.0, 0.0).unwrap();
        let gc = grad_conformal(&m, &f).unwrap();
        for (a, b) in g.iter().zip(&gc) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    /// Central finite differences of an arbitrary scalar function.
    fn fd_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
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

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        diff / norm.max(1e-12)
    }

    #[test]
    fn gradients_match_fd_on_4tri_mesh() {
        let m = unit_square_4tri();
        let mut model = DiskModel::new(&m).unwrap();
        let configs = [
            (vec![0.05, 0.02], [0.1, 1.7, 3.2, 4.8], 0.3, 0.7),
            (vec![-0.1, 0.15], [0.4, 1.5, 3.5, 5.1], 0.9, 2.0),
        ];
        for (int, theta, lambda, rho) in configs {
            let mut x = int.clone();
            x.extend_from_slice(&theta);
            let (_, _, g) = model.value_grad(&x, lambda, rho, 1.0).unwrap();
            let fd = fd_grad(
                |x| model.value(x, lambda, rho, 1.0).unwrap().0,
                &x,
                1e-6,
            );
            assert!(rel_err(&fd, &g) < 1e-6, "rel err {}", rel_err(&fd, &g));
        }
    }

    #[test]
    fn square_model_gradient_matches_fd() {
        let m = crate::mesh::square_grid(3);
        let layout = crate::alm::BoundaryPartition::auto(&m).unwrap().layout(&m);
        let mut model = SquareModel::new(&m, layout).unwrap();
        let f0 = planar_identity(&m);
        let mut x = model.pack(&f0);
        // Nudge the free variables, keeping the map valid.
        for (k, v) in x.iter_mut().enumerate() {
            *v += 0.02 * ((k * 7 % 5) as f64 - 2.0) / 2.0 * 0.5;
        }
        let (_, _, g) = model.value_grad(&x, 0.4, 0.6, 1.0).unwrap();
        let fd = fd_grad(|x| model.value(x, 0.4, 0.6, 1.0).unwrap().0, &x, 1e-6);
        assert!(rel_err(&fd, &g) < 1e-6, "rel err {}", rel_err(&fd, &g));
    }

    #[test]
    fn square_area_is_constant_under_sliding() {
        let m = crate::mesh::square_grid(3);
        let layout = crate::alm::BoundaryPartition::auto(&m).unwrap().layout(&m);
        let mut model = SquareModel::new(&m, layout).unwrap();
        let f0 = planar_identity(&m);
        let mut x = model.pack(&f0);
        for (k, v) in x.iter_mut().enumerate() {
            *v += 0.013 * (k as f64).cos() * 0.5;
        }
        let rep = model.report(&x, 1.0).unwrap();
        assert!((rep.area - 1.0).abs() < 1e-12);
    }
}
