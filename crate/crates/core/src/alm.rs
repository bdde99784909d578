//! Outer augmented Lagrangian loop, the fixed-point initializer, and the
//! square-boundary variant.
//!
//! The constrained problem min E_C subject to μ·E_A = E_C is solved by
//! alternating inner minimizations of the augmented Lagrangian (solver
//! module) with first-order multiplier updates λ ← λ + ρ·r. The multiplier
//! step is taken only when the residual passes the tightened test
//! |r| ≤ min(η, (1−λ)/ρ, λ/ρ), which keeps λ inside [0, 1] and the
//! preconditioner positive definite; otherwise the penalty is amplified.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::energy::{
    from_polar, to_polar, DiskModel, EnergyReport, ParamModel, PlanarMap, PolarMap,
    SquareLayout, SquareModel,
};
use crate::error::{Error, Result};
use crate::laplacian::{blend_llambda, BlendMode, LaplacianPattern};
use crate::linalg::factorize;
use crate::mesh::TriMesh;
use crate::metrics;
use crate::solver::{
    minimize_objective, AugLagObjective, LineSearch, PcgConfig, TraceRow,
};

#[derive(Debug, Clone)]
pub struct AlmConfig {
    /// Penalty amplification factor τ.
    pub tau: f64,
    /// Initial penalty ρ⁰.
    pub rho0: f64,
    /// Initial inner tolerance ω⁰.
    pub omega0: f64,
    /// Initial constraint tolerance η⁰.
    pub eta0: f64,
    /// Base of the ω reset in penalty branches (0.1 per the schedule
    /// listing, which differs from the initial ω⁰ = 0.01).
    pub omega_reset: f64,
    /// Base of the η reset in penalty branches.
    pub eta_reset: f64,
    /// Cap γ in u = min(1/ρ, γ).
    pub gamma: f64,
    pub t_omega: f64,
    pub v_omega: f64,
    pub t_eta: f64,
    pub v_eta: f64,
    /// Final gradient tolerance is omega_star_scale·√dim.
    pub omega_star_scale: f64,
    /// Final constraint tolerance η*.
    pub eta_star: f64,
    pub max_outer: usize,
    /// Initial multiplier (matches the initializer's blend weight).
    pub lambda0: f64,
    /// Constraint weight μ in μ·E_A = E_C.
    pub mu: f64,
    /// Fixed-point initializer settings.
    pub init_lambda: f64,
    pub init_iterations: usize,
    /// Inner solver settings.
    pub max_inner: usize,
    pub alpha0: f64,
    pub c1: f64,
    pub retries: usize,
    pub halvings: usize,
    pub line_search: LineSearch,
    /// Preconditioner rebuilds for the pinned-λ solves.
    pub pinned_restarts: usize,
    /// Record per-iteration traces.
    pub trace: bool,
}

impl Default for AlmConfig {
    fn default() -> Self {
        AlmConfig {
            tau: 5.0,
            rho0: 0.1,
            omega0: 0.01,
            eta0: 0.01,
            omega_reset: 0.1,
            eta_reset: 0.01,
            gamma: 0.1,
            t_omega: 1.0,
            v_omega: 1.0,
            t_eta: 0.9,
            v_eta: 0.5,
            omega_star_scale: 1e-4,
            eta_star: 1e-5,
            max_outer: 50,
            lambda0: 0.4,
            mu: 1.0,
            init_lambda: 0.4,
            init_iterations: 5,
            max_inner: 500,
            alpha0: 0.1,
            c1: 1e-4,
            retries: 10,
            halvings: 20,
            line_search: LineSearch::QuadraticArmijo,
            pinned_restarts: 12,
            trace: false,
        }
    }
}

impl AlmConfig {
    /// The prose variant of the schedule, which starts ω at γ = 0.1 instead
    /// of the listing's 0.01.
    pub fn prose_schedule(mut self) -> Self {
        self.omega0 = 0.1;
        self
    }

    fn pcg(&self, omega: f64) -> PcgConfig {
        PcgConfig {
            omega,
            max_iterations: self.max_inner,
            alpha0: self.alpha0,
            c1: self.c1,
            retries: self.retries,
            halvings: self.halvings,
            line_search: self.line_search,
            trace: self.trace,
        }
    }
}

/// Multiplier, penalty, and tolerance state of the outer loop.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlmState {
    pub lambda: f64,
    pub rho: f64,
    pub omega: f64,
    pub eta: f64,
    pub outer: usize,
    pub residual: f64,
    /// Times the λ ∈ [0, 1] box had to clamp (only possible with μ ≠ 1).
    pub lambda_clamp_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateBranch {
    Multiplier,
    Penalty,
}

/// One outer-loop update: multiplier step when the tightened residual test
/// passes, penalty amplification otherwise.
pub fn update_state(state: &AlmState, r: f64, cfg: &AlmConfig) -> (AlmState, UpdateBranch) {
    let mut next = *state;
    next.residual = r;
    let tight = state
        .eta
        .min((1.0 - state.lambda) / state.rho)
        .min(state.lambda / state.rho);
    if r.abs() <= tight {
        next.lambda = state.lambda + state.rho * r;
        if !(0.0..=1.0).contains(&next.lambda) {
            next.lambda = next.lambda.clamp(0.0, 1.0);
            next.lambda_clamp_events += 1;
        }
        let u = (1.0 / next.rho).min(cfg.gamma);
        next.omega = state.omega * u.powf(cfg.t_omega);
        next.eta = state.eta * u.powf(cfg.t_eta);
        (next, UpdateBranch::Multiplier)
    } else {
        next.rho = cfg.tau * state.rho;
        let u = (1.0 / next.rho).min(cfg.gamma);
        next.omega = cfg.omega_reset * u.powf(cfg.v_omega);
        next.eta = cfg.eta_reset * u.powf(cfg.v_eta);
        (next, UpdateBranch::Penalty)
    }
}

/// Per-outer-iteration record for traces and diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub e_c: f64,
    pub e_a: f64,
    pub residual: f64,
    pub grad_norm: f64,
    pub lambda: f64,
    pub rho: f64,
    pub omega: f64,
    pub eta: f64,
    pub inner_iterations: usize,
    pub branch: Option<UpdateBranch>,
}

/// JSON writes NaN as null; read it back as NaN.
fn nan_as_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Table-style summary of one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub mode: String,
    pub shape: String,
    pub mu: f64,
    pub n_vertices: usize,
    pub n_faces: usize,
    pub time_secs: f64,
    pub e_c: f64,
    pub e_a: f64,
    pub energy_diff: f64,
    pub lambda: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    #[serde(deserialize_with = "nan_as_null")]
    pub grad_norm: f64,
    pub converged: bool,
    pub foldings: usize,
    pub lambda_clamp_events: usize,
    #[serde(deserialize_with = "nan_as_null")]
    pub d_angle_mean: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub d_angle_sd: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub d_area_mean: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub d_area_sd: f64,
}

#[derive(Debug)]
pub struct SolveResult {
    pub map: PlanarMap,
    pub state: AlmState,
    pub report: EnergyReport,
    pub summary: SolveSummary,
    pub outer_trace: Vec<OuterRecord>,
    /// (outer iteration, inner trace row), populated when tracing is on.
    pub inner_trace: Vec<(usize, TraceRow)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Disk,
    Square,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Square => "square",
        }
    }
}

// ---------------------------------------------------------------------------
// Fixed-point initializer
// ---------------------------------------------------------------------------

/// Unit-circle boundary positions by 3D arc length, one per loop position.
fn circle_boundary(mesh: &TriMesh) -> Vec<[f64; 2]> {
    let cum = mesh.boundary_arc_length();
    let total = *cum.last().unwrap();
    (0..mesh.n_boundary())
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * cum[i] / total;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// Iterated linear solves of the blended Laplacian with a fixed boundary.
/// `iterations` counts linear solves; the first uses the cotangent Laplacian.
fn fixed_point_with_boundary(
    mesh: &TriMesh,
    boundary: &[[f64; 2]],
    lambda: f64,
    iterations: usize,
) -> Result<PlanarMap> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let pattern = LaplacianPattern::new(mesh);
    let mut ld = pattern.zero_matrix();
    pattern.fill_ld(mesh, ld.vals_mut())?;
    let interior = mesh.interior_indices();

    let mut coords = vec![[0.0f64; 2]; mesh.n_vertices()];
    for (pos, &v) in mesh.boundary_loop().iter().enumerate() {
        coords[v] = boundary[pos];
    }

    let mut l = ld.clone();
    let mut ls = pattern.zero_matrix();
    for iter in 0..iterations {
        let l_ii = l.submatrix(interior, interior)?;
        let factor = factorize(&l_ii).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => {
                Error::SingularSystem("blended Laplacian interior block is singular".into())
            }
            other => other,
        })?;
        // rhs = −[L]_IB·b, read off a full matvec with the interior zeroed.
        let mut bext = coords.clone();
        for &v in interior {
            bext[v] = [0.0, 0.0];
        }
        let mut lb = vec![[0.0f64; 2]; mesh.n_vertices()];
        l.matvec_pairs(&bext, &mut lb);
        let mut rhs_x: Vec<f64> = interior.iter().map(|&v| -lb[v][0]).collect();
        let mut rhs_y: Vec<f64> = interior.iter().map(|&v| -lb[v][1]).collect();
        factor.solve_in_place(&mut rhs_x)?;
        factor.solve_in_place(&mut rhs_y)?;
        for (slot, &v) in interior.iter().enumerate() {
            coords[v] = [rhs_x[slot], rhs_y[slot]];
        }
        if iter + 1 < iterations {
            let map = PlanarMap::new(coords.clone());
            pattern.fill_ls(mesh, &map, ls.vals_mut())?;
            l = blend_llambda(&ld, &ls, lambda, mesh.total_area(), 1.0, BlendMode::FixedPoint)?;
            coords = map.into_coords();
        }
    }
    Ok(PlanarMap::new(coords))
}

/// Initial disk map: arc-length boundary on the unit circle, interior from
/// iterated blended-Laplacian solves.
pub fn fixed_point_init(mesh: &TriMesh, lambda: f64, iterations: usize) -> Result<PlanarMap> {
    fixed_point_with_boundary(mesh, &circle_boundary(mesh), lambda, iterations)
}

// ---------------------------------------------------------------------------
// Square boundary partition
// ---------------------------------------------------------------------------

/// Which boundary vertex to send to each square corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerSpec {
    /// Boundary vertices nearest the four arc-length quartiles.
    Auto,
    /// Explicit vertex indices, distinct and in counterclockwise loop order.
    Vertices([usize; 4]),
}

/// The four corners and segment structure of a square-shaped boundary.
/// Corners are stored as positions within the boundary loop; segment k runs
/// from corner k to corner k+1 (cyclically) and fixes one coordinate:
/// y = 0, x = 1, y = 1, x = 0 in turn.
#[derive(Debug, Clone)]
pub struct BoundaryPartition {
    corners: [usize; 4],
    n_boundary: usize,
}

impl BoundaryPartition {
    pub fn auto(mesh: &TriMesh) -> Result<Self> {
        let n_b = mesh.n_boundary();
        if n_b < 4 {
            return Err(Error::CornerOrder(format!(
                "boundary has only {n_b} vertices, need at least 4"
            )));
        }
        let cum = mesh.boundary_arc_length();
        let total = *cum.last().unwrap();
        let mut corners = [0usize; 4];
        for k in 1..4 {
            let target = total * k as f64 / 4.0;
            let pos = (0..n_b)
                .min_by(|&a, &b| {
                    (cum[a] - target)
                        .abs()
                        .total_cmp(&(cum[b] - target).abs())
                })
                .unwrap();
            corners[k] = pos;
        }
        if corners[1] == 0 || corners[2] <= corners[1] || corners[3] <= corners[2] {
            return Err(Error::CornerOrder(
                "quartile corners collapsed; boundary too short or uneven".into(),
            ));
        }
        Ok(BoundaryPartition {
            corners,
            n_boundary: n_b,
        })
    }

    pub fn from_vertices(mesh: &TriMesh, verts: [usize; 4]) -> Result<Self> {
        let n_b = mesh.n_boundary();
        let mut positions = [0usize; 4];
        for (k, &v) in verts.iter().enumerate() {
            match mesh.role(v) {
                crate::mesh::VertexRole::Boundary(pos) => positions[k] = pos,
                _ => {
                    return Err(Error::CornerOrder(format!(
                        "vertex {v} is not on the boundary"
                    )))
                }
            }
        }
        let base = positions[0];
        let rel: Vec<usize> = positions
            .iter()
            .map(|&p| (p + n_b - base) % n_b)
            .collect();
        if !(rel[0] == 0 && rel[0] < rel[1] && rel[1] < rel[2] && rel[2] < rel[3]) {
            return Err(Error::CornerOrder(
                "corners must be distinct and in counterclockwise loop order".into(),
            ));
        }
        Ok(BoundaryPartition {
            corners: positions,
            n_boundary: n_b,
        })
    }

    /// Loop positions of the four corners.
    pub fn corners(&self) -> [usize; 4] {
        self.corners
    }

    /// Loop positions of segment k (corner k to corner k+1, inclusive).
    pub fn segment(&self, k: usize) -> Vec<usize> {
        let a = self.corners[k];
        let b = self.corners[(k + 1) % 4];
        let n = self.n_boundary;
        let len = (b + n - a) % n;
        (0..=len).map(|i| (a + i) % n).collect()
    }

    /// Square-edge index (0..4) of a loop position; corners report the
    /// segment they start.
    fn segment_of(&self, pos: usize) -> usize {
        let n = self.n_boundary;
        let rel = |p: usize| (p + n - self.corners[0]) % n;
        let r = rel(pos);
        for k in (0..4).rev() {
            if r >= rel(self.corners[k]) {
                return k;
            }
        }
        0
    }

    /// Arc-length positions on the unit-square boundary, one per loop
    /// position; corners land exactly on the square corners.
    pub fn boundary_positions(&self, mesh: &TriMesh) -> Vec<[f64; 2]> {
        let n = self.n_boundary;
        let cum = mesh.boundary_arc_length();
        let seg_start = |k: usize| self.corners[k];
        let seg_arc = |k: usize| {
            let a = seg_start(k);
            let b = self.corners[(k + 1) % 4];
            let start = cum[a];
            let end = if b > a { cum[b] } else { cum[b] + cum[n] };
            (start, end)
        };
        let mut out = vec![[0.0; 2]; n];
        for pos in 0..n {
            let k = self.segment_of(pos);
            let (start, end) = seg_arc(k);
            let raw = if pos >= seg_start(k) {
                cum[pos]
            } else {
                cum[pos] + cum[n]
            };
            let t = if end > start {
                (raw - start) / (end - start)
            } else {
                0.0
            };
            out[pos] = match k {
                0 => [t, 0.0],
                1 => [1.0, t],
                2 => [1.0 - t, 1.0],
                _ => [0.0, 1.0 - t],
            };
        }
        out
    }

    /// Free-coordinate layout: x is fixed on segments 1 and 3, y on segments
    /// 0 and 2; corners have both coordinates pinned.
    pub fn layout(&self, mesh: &TriMesh) -> SquareLayout {
        let n_v = mesh.n_vertices();
        let mut fixed_x: Vec<Option<f64>> = vec![None; n_v];
        let mut fixed_y: Vec<Option<f64>> = vec![None; n_v];
        for k in 0..4 {
            for &pos in &self.segment(k) {
                let v = mesh.boundary_loop()[pos];
                match k {
                    0 => fixed_y[v] = Some(0.0),
                    1 => fixed_x[v] = Some(1.0),
                    2 => fixed_y[v] = Some(1.0),
                    _ => fixed_x[v] = Some(0.0),
                }
            }
        }
        let free_x: Vec<usize> = (0..n_v).filter(|&v| fixed_x[v].is_none()).collect();
        let free_y: Vec<usize> = (0..n_v).filter(|&v| fixed_y[v].is_none()).collect();
        let base: Vec<[f64; 2]> = (0..n_v)
            .map(|v| [fixed_x[v].unwrap_or(0.0), fixed_y[v].unwrap_or(0.0)])
            .collect();
        SquareLayout {
            free_x,
            free_y,
            base,
        }
    }
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

struct AlmRun {
    x: Vec<f64>,
    state: AlmState,
    report: EnergyReport,
    grad_norm: f64,
    converged: bool,
    inner_iterations: usize,
    outer_trace: Vec<OuterRecord>,
    inner_trace: Vec<(usize, TraceRow)>,
}

fn run_alm<M: ParamModel>(model: &mut M, x0: Vec<f64>, cfg: &AlmConfig) -> Result<AlmRun> {
    let dim = model.dim() as f64;
    let omega_star = cfg.omega_star_scale * dim.sqrt();
    let mut state = AlmState {
        lambda: cfg.lambda0.clamp(0.0, 1.0),
        rho: cfg.rho0,
        omega: cfg.omega0,
        eta: cfg.eta0,
        outer: 0,
        residual: f64::NAN,
        lambda_clamp_events: 0,
    };
    let mut x = x0;
    let mut outer_trace = Vec::new();
    let mut inner_trace = Vec::new();
    let mut inner_total = 0usize;
    let mut converged = false;
    let mut last_report = model.report(&x, cfg.mu)?;
    let mut last_grad = f64::INFINITY;

    // Best-so-far iterate by how close it is to both exit tests, kept in
    // case the outer cap is reached.
    let mut best: Option<(f64, Vec<f64>, EnergyReport, f64, AlmState)> = None;

    for k in 0..cfg.max_outer {
        state.outer = k + 1;
        let precond = model.preconditioner(&x, state.lambda)?;
        let pcg = cfg.pcg(state.omega);
        let mut obj = AugLagObjective::new(model, state.lambda, state.rho, cfg.mu);
        let res = minimize_objective(&mut obj, &precond, x, &pcg)?;
        x = res.x;
        inner_total += res.iterations;
        for row in res.trace {
            inner_trace.push((k, row));
        }
        let report = model.report(&x, cfg.mu)?;
        let r = report.residual;
        state.residual = r;
        last_report = report;
        last_grad = res.grad_norm;

        let score = (res.grad_norm / omega_star).max(r.abs() / cfg.eta_star);
        if best.as_ref().map_or(true, |(s, ..)| score < *s) {
            best = Some((score, x.clone(), report, res.grad_norm, state));
        }

        if res.grad_norm <= omega_star && r.abs() <= cfg.eta_star {
            converged = true;
            outer_trace.push(OuterRecord {
                outer: k,
                e_c: report.e_c,
                e_a: report.e_a,
                residual: r,
                grad_norm: res.grad_norm,
                lambda: state.lambda,
                rho: state.rho,
                omega: state.omega,
                eta: state.eta,
                inner_iterations: res.iterations,
                branch: None,
            });
            break;
        }

        let (next, branch) = update_state(&state, r, cfg);
        outer_trace.push(OuterRecord {
            outer: k,
            e_c: report.e_c,
            e_a: report.e_a,
            residual: r,
            grad_norm: res.grad_norm,
            lambda: state.lambda,
            rho: state.rho,
            omega: state.omega,
            eta: state.eta,
            inner_iterations: res.iterations,
            branch: Some(branch),
        });
        state = next;
    }

    if !converged {
        if let Some((_, bx, brep, bgrad, bstate)) = best {
            x = bx;
            last_report = brep;
            last_grad = bgrad;
            state = AlmState {
                outer: state.outer,
                ..bstate
            };
        }
    }

    Ok(AlmRun {
        x,
        state,
        report: last_report,
        grad_norm: last_grad,
        converged,
        inner_iterations: inner_total,
        outer_trace,
        inner_trace,
    })
}

fn summarize(
    mesh: &TriMesh,
    map: &PlanarMap,
    run: &AlmRun,
    mode: &str,
    shape: Shape,
    mu: f64,
    time_secs: f64,
) -> Result<SolveSummary> {
    let folds = metrics::fold_count(mesh, map);
    let (da_mean, da_sd, dr_mean, dr_sd) = if folds == 0 {
        let rep = metrics::distortion_report(mesh, map)?;
        (
            rep.d_angle_mean,
            rep.d_angle_sd,
            rep.d_area_mean,
            rep.d_area_sd,
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(SolveSummary {
        mode: mode.to_string(),
        shape: shape.name().to_string(),
        mu,
        n_vertices: mesh.n_vertices(),
        n_faces: mesh.n_faces(),
        time_secs,
        e_c: run.report.e_c,
        e_a: run.report.e_a,
        energy_diff: run.report.residual.abs(),
        lambda: run.state.lambda,
        outer_iterations: run.state.outer,
        inner_iterations: run.inner_iterations,
        grad_norm: run.grad_norm,
        converged: run.converged,
        foldings: folds,
        lambda_clamp_events: run.state.lambda_clamp_events,
        d_angle_mean: da_mean,
        d_angle_sd: da_sd,
        d_area_mean: dr_mean,
        d_area_sd: dr_sd,
    })
}

/// Distortion-balancing disk parameterization (the full outer loop).
pub fn solve_disk(mesh: &TriMesh, cfg: &AlmConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let init = fixed_point_init(mesh, cfg.init_lambda, cfg.init_iterations)?;
    let polar = to_polar(mesh, &init)?;
    let mut model = DiskModel::new(mesh)?;
    let x0 = model.pack(&polar);
    let run = run_alm(&mut model, x0, cfg)?;
    let f = PolarMap::new(run.x.clone(), mesh.n_interior(), mesh.n_boundary())?;
    let map = from_polar(mesh, &f)?;
    let summary = summarize(
        mesh,
        &map,
        &run,
        "balanced",
        Shape::Disk,
        cfg.mu,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(SolveResult {
        map,
        state: run.state,
        report: run.report,
        summary,
        outer_trace: run.outer_trace,
        inner_trace: run.inner_trace,
    })
}

/// Distortion-balancing square parameterization with sliding boundary.
pub fn solve_square(mesh: &TriMesh, corners: CornerSpec, cfg: &AlmConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let partition = match corners {
        CornerSpec::Auto => BoundaryPartition::auto(mesh)?,
        CornerSpec::Vertices(v) => BoundaryPartition::from_vertices(mesh, v)?,
    };
    let boundary = partition.boundary_positions(mesh);
    let init = fixed_point_with_boundary(mesh, &boundary, cfg.init_lambda, cfg.init_iterations)?;
    let layout = partition.layout(mesh);
    let mut model = SquareModel::new(mesh, layout)?;
    let x0 = model.pack(&init);
    let run = run_alm(&mut model, x0, cfg)?;
    let map = model.to_planar(&run.x);
    let summary = summarize(
        mesh,
        &map,
        &run,
        "balanced",
        Shape::Square,
        cfg.mu,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(SolveResult {
        map,
        state: run.state,
        report: run.report,
        summary,
        outer_trace: run.outer_trace,
        inner_trace: run.inner_trace,
    })
}

/// Weighted constraint μ·E_A = E_C; μ = 1 is exactly the unweighted solver.
pub fn solve_weighted(
    mesh: &TriMesh,
    mu: f64,
    shape: Shape,
    cfg: &AlmConfig,
) -> Result<SolveResult> {
    if mu <= 0.0 {
        return Err(Error::Shape(format!("mu must be positive, got {mu}")));
    }
    let cfg = AlmConfig {
        mu,
        ..cfg.clone()
    };
    match shape {
        Shape::Disk => solve_disk(mesh, &cfg),
        Shape::Square => solve_square(mesh, CornerSpec::Auto, &cfg),
    }
}

/// Minimize at a pinned multiplier with no penalty (λ = 0: conformal,
/// λ = 1: authalic), restarting the preconditioner a few times.
pub fn solve_pinned(
    mesh: &TriMesh,
    lambda: f64,
    shape: Shape,
    cfg: &AlmConfig,
) -> Result<SolveResult> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let start = Instant::now();
    let mode = if lambda == 0.0 {
        "conformal"
    } else if lambda == 1.0 {
        "authalic"
    } else {
        "pinned"
    };

    // Shared driver over either representation.
    fn drive<M: ParamModel>(
        model: &mut M,
        mut x: Vec<f64>,
        lambda: f64,
        cfg: &AlmConfig,
    ) -> Result<AlmRun> {
        let omega_star = cfg.omega_star_scale * (model.dim() as f64).sqrt();
        let mut inner_total = 0;
        let mut inner_trace = Vec::new();
        let mut grad_norm = f64::INFINITY;
        let mut converged = false;
        let mut outer = 0;
        for k in 0..cfg.pinned_restarts {
            outer = k + 1;
            let precond = model.preconditioner(&x, lambda)?;
            let pcg = cfg.pcg(omega_star);
            let mut obj = AugLagObjective::new(model, lambda, 0.0, 1.0);
            let res = minimize_objective(&mut obj, &precond, x, &pcg)?;
            x = res.x;
            inner_total += res.iterations;
            grad_norm = res.grad_norm;
            for row in res.trace {
                inner_trace.push((k, row));
            }
            if res.grad_norm <= omega_star {
                converged = true;
                break;
            }
            if res.iterations == 0 {
                break;
            }
        }
        let report = model.report(&x, 1.0)?;
        let state = AlmState {
            lambda,
            rho: 0.0,
            omega: omega_star,
            eta: cfg.eta_star,
            outer,
            residual: report.residual,
            lambda_clamp_events: 0,
        };
        Ok(AlmRun {
            x,
            state,
            report,
            grad_norm,
            converged,
            inner_iterations: inner_total,
            outer_trace: Vec::new(),
            inner_trace,
        })
    }

    let (map, run) = match shape {
        Shape::Disk => {
            let init = fixed_point_init(mesh, cfg.init_lambda, cfg.init_iterations)?;
            let polar = to_polar(mesh, &init)?;
            let mut model = DiskModel::new(mesh)?;
            let x0 = model.pack(&polar);
            let run = drive(&mut model, x0, lambda, cfg)?;
            let f = PolarMap::new(run.x.clone(), mesh.n_interior(), mesh.n_boundary())?;
            (from_polar(mesh, &f)?, run)
        }
        Shape::Square => {
            let partition = BoundaryPartition::auto(mesh)?;
            let boundary = partition.boundary_positions(mesh);
            let init =
                fixed_point_with_boundary(mesh, &boundary, cfg.init_lambda, cfg.init_iterations)?;
            let mut model = SquareModel::new(mesh, partition.layout(mesh))?;
            let x0 = model.pack(&init);
            let run = drive(&mut model, x0, lambda, cfg)?;
            let map = model.to_planar(&run.x);
            (map, run)
        }
    };
    let summary = summarize(
        mesh,
        &map,
        &run,
        mode,
        shape,
        1.0,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(SolveResult {
        map,
        state: run.state,
        report: run.report,
        summary,
        outer_trace: run.outer_trace,
        inner_trace: run.inner_trace,
    })
}

/// Run only the fixed-point initializer and report it like a solve.
pub fn solve_fixed_point(
    mesh: &TriMesh,
    lambda: f64,
    iterations: usize,
    shape: Shape,
) -> Result<SolveResult> {
    let start = Instant::now();
    let map = match shape {
        Shape::Disk => fixed_point_init(mesh, lambda, iterations)?,
        Shape::Square => {
            let partition = BoundaryPartition::auto(mesh)?;
            let boundary = partition.boundary_positions(mesh);
            fixed_point_with_boundary(mesh, &boundary, lambda, iterations)?
        }
    };
    let report = crate::energy::energy_report(mesh, &map, 1.0)?;
    let state = AlmState {
        lambda,
        rho: 0.0,
        omega: f64::NAN,
        eta: f64::NAN,
        outer: iterations,
        residual: report.residual,
        lambda_clamp_events: 0,
    };
    let run = AlmRun {
        x: Vec::new(),
        state,
        report,
        grad_norm: f64::NAN,
        converged: true,
        inner_iterations: 0,
        outer_trace: Vec::new(),
        inner_trace: Vec::new(),
    };
    let summary = summarize(
        mesh,
        &map,
        &run,
        "fixed-point",
        shape,
        1.0,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(SolveResult {
        map,
        state,
        report,
        summary,
        outer_trace: Vec::new(),
        inner_trace: Vec::new(),
    })
}
