//! Preconditioned nonlinear conjugate gradient minimization at fixed
//! multiplier and penalty.
//!
//! The search direction is p ← −M⁻¹g + β·p with the preconditioned
//! Fletcher–Reeves ratio β = gᵀM⁻¹g / g_prevᵀM⁻¹g_prev, which is nonnegative
//! by construction. Step lengths come from one-point quadratic interpolation
//! seeded by the previous step, safeguarded by an Armijo test; a strict
//! strong-Wolfe line search is available behind a config switch. The
//! preconditioner M is built once from the starting map of the call and held
//! fixed, two SPD Laplacian blocks solved by preordered Cholesky.

use serde::Serialize;

use crate::energy::{DiskModel, EnergyReport, ParamModel, PolarMap};
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::mesh::TriMesh;

/// One factored diagonal block of the preconditioner and the vector spans it
/// applies to (the interior block serves both coordinate spans).
pub struct PrecondBlock {
    pub factor: CholeskyFactor,
    pub spans: Vec<std::ops::Range<usize>>,
}

/// Block-diagonal SPD preconditioner. With no blocks it acts as the
/// identity.
pub struct Preconditioner {
    dim: usize,
    blocks: Vec<PrecondBlock>,
}

impl Preconditioner {
    pub fn new(dim: usize, blocks: Vec<PrecondBlock>) -> Self {
        for b in &blocks {
            for s in &b.spans {
                assert_eq!(s.len(), b.factor.dim(), "span does not match factor size");
                assert!(s.end <= dim);
            }
        }
        Preconditioner { dim, blocks }
    }

    pub fn identity(dim: usize) -> Self {
        Preconditioner {
            dim,
            blocks: Vec::new(),
        }
    }

    /// h = M⁻¹ r.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.dim {
            return Err(Error::Shape(format!(
                "preconditioner dimension {} vs vector {}",
                self.dim,
                r.len()
            )));
        }
        let mut h = r.to_vec();
        for b in &self.blocks {
            for s in &b.spans {
                b.factor.solve_in_place(&mut h[s.clone()])?;
            }
        }
        Ok(h)
    }
}

/// Smooth objective over a flat vector. Implemented by the energy models and
/// by small test surrogates.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&mut self, x: &[f64]) -> Result<f64>;
    fn value_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// (E_C, E_A) at the most recent evaluation, when the objective tracks
    /// energies (used for iteration traces).
    fn last_energies(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Binds a parameterization model to fixed (λ, ρ, μ).
pub struct AugLagObjective<'a, M: ParamModel> {
    pub model: &'a mut M,
    pub lambda: f64,
    pub rho: f64,
    pub mu: f64,
    last: Option<EnergyReport>,
}

impl<'a, M: ParamModel> AugLagObjective<'a, M> {
    pub fn new(model: &'a mut M, lambda: f64, rho: f64, mu: f64) -> Self {
        AugLagObjective {
            model,
            lambda,
            rho,
            mu,
            last: None,
        }
    }

    pub fn last_report(&self) -> Option<EnergyReport> {
        self.last
    }
}

impl<M: ParamModel> Objective for AugLagObjective<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let (v, rep) = self.model.value(x, self.lambda, self.rho, self.mu)?;
        self.last = Some(rep);
        Ok(v)
    }

    fn value_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, rep, g) = self.model.value_grad(x, self.lambda, self.rho, self.mu)?;
        self.last = Some(rep);
        Ok((v, g))
    }

    fn last_energies(&self) -> Option<(f64, f64)> {
        self.last.map(|r| (r.e_c, r.e_a))
    }
}

/// Line-search strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    /// Quadratic interpolation with an Armijo safeguard (the practical
    /// scheme).
    QuadraticArmijo,
    /// Strong Wolfe conditions with the given curvature constant (the
    /// theory-faithful variant).
    StrongWolfe { c2: f64 },
}

#[derive(Debug, Clone)]
pub struct PcgConfig {
    /// Gradient tolerance ω: stop once ‖∇L‖₂ ≤ ω.
    pub omega: f64,
    pub max_iterations: usize,
    /// First trial step of the first iteration.
    pub alpha0: f64,
    /// Armijo constant.
    pub c1: f64,
    /// Interpolation retries before the halving fallback.
    pub retries: usize,
    /// Halvings in the fallback (also bounds recovery from rejected steps).
    pub halvings: usize,
    pub line_search: LineSearch,
    /// Record per-iteration energies.
    pub trace: bool,
}

impl Default for PcgConfig {
    fn default() -> Self {
        PcgConfig {
            omega: 1e-6,
            max_iterations: 500,
            alpha0: 0.1,
            c1: 1e-4,
            retries: 10,
            halvings: 20,
            line_search: LineSearch::QuadraticArmijo,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The line search stalled; the best iterate so far is returned.
    LineSearchStall,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub e_c: f64,
    pub e_a: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub value: f64,
}

#[derive(Debug)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceRow>,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct LineSearchOutcome {
    pub alpha: f64,
    pub value: f64,
}

/// Quadratic-interpolation line search with Armijo safeguard.
///
/// `phi` evaluates the objective along the ray; `None` marks a rejected trial
/// (folded boundary, degenerate face) which is recovered from by halving.
/// `alpha_init` seeds the interpolation with the previous accepted step.
pub fn line_search_quadratic(
    mut phi: impl FnMut(f64) -> Option<f64>,
    phi0: f64,
    dphi0: f64,
    alpha_init: f64,
    c1: f64,
    retries: usize,
    halvings: usize,
) -> Result<LineSearchOutcome> {
    if dphi0 == 0.0 {
        return Ok(LineSearchOutcome {
            alpha: 0.0,
            value: phi0,
        });
    }
    debug_assert!(dphi0 < 0.0, "line search needs a descent direction");
    let armijo = |alpha: f64, value: f64| value <= phi0 + c1 * alpha * dphi0;

    // A usable first sample: halve until the trial evaluates.
    let mut alpha_prev = alpha_init.max(f64::MIN_POSITIVE);
    let mut phi_prev = None;
    for _ in 0..=halvings {
        if let Some(v) = phi(alpha_prev) {
            phi_prev = Some(v);
            break;
        }
        alpha_prev *= 0.5;
    }
    let mut phi_prev = phi_prev.ok_or(Error::LineSearchFailure)?;

    for _ in 0..retries {
        // Interpolating quadratic through φ(0), φ'(0), φ(α_prev):
        // a·α² + b·α + c with b = φ'(0).
        let a = (phi_prev - phi0 - alpha_prev * dphi0) / (alpha_prev * alpha_prev);
        let alpha = if a > 0.0 {
            -dphi0 / (2.0 * a)
        } else {
            // Concave sample: the quadratic has no minimum, expand.
            2.0 * alpha_prev
        };
        if !alpha.is_finite() || alpha <= 0.0 {
            break;
        }
        match phi(alpha) {
            Some(value) if armijo(alpha, value) => {
                return Ok(LineSearchOutcome { alpha, value });
            }
            Some(value) => {
                // Failed trial becomes the next interpolation sample.
                alpha_prev = alpha;
                phi_prev = value;
            }
            None => {
                alpha_prev = 0.5 * alpha;
                phi_prev = match phi(alpha_prev) {
                    Some(v) => v,
                    None => break,
                };
                if armijo(alpha_prev, phi_prev) {
                    return Ok(LineSearchOutcome {
                        alpha: alpha_prev,
                        value: phi_prev,
                    });
                }
            }
        }
    }

    // Halving fallback from the last sample.
    let mut alpha = alpha_prev;
    for _ in 0..halvings {
        if let Some(value) = phi(alpha) {
            if armijo(alpha, value) {
                return Ok(LineSearchOutcome { alpha, value });
            }
        }
        alpha *= 0.5;
    }
    Err(Error::LineSearchFailure)
}

/// Strong-Wolfe line search (bracket and zoom). `eval` returns the value and
/// the directional derivative at a trial step, or `None` for rejected trials.
fn line_search_wolfe(
    mut eval: impl FnMut(f64) -> Option<(f64, f64)>,
    phi0: f64,
    dphi0: f64,
    alpha_init: f64,
    c1: f64,
    c2: f64,
    max_iters: usize,
) -> Result<LineSearchOutcome> {
    if dphi0 == 0.0 {
        return Ok(LineSearchOutcome {
            alpha: 0.0,
            value: phi0,
        });
    }
    let mut alpha_lo = 0.0f64;
    let mut phi_lo = phi0;
    let mut alpha = alpha_init;
    let mut alpha_hi: Option<f64> = None;
    let mut prev_alpha = 0.0f64;
    let mut prev_phi = phi0;

    // Bracket phase.
    let mut bracketed = false;
    for _ in 0..max_iters {
        let Some((v, d)) = eval(alpha) else {
            alpha = 0.5 * (prev_alpha + alpha);
            continue;
        };
        if v > phi0 + c1 * alpha * dphi0 || (v >= prev_phi && prev_alpha > 0.0) {
            alpha_lo = prev_alpha;
            phi_lo = prev_phi;
            alpha_hi = Some(alpha);
            bracketed = true;
            break;
        }
        if d.abs() <= -c2 * dphi0 {
            return Ok(LineSearchOutcome { alpha, value: v });
        }
        if d >= 0.0 {
            alpha_lo = alpha;
            phi_lo = v;
            alpha_hi = Some(prev_alpha);
            bracketed = true;
            break;
        }
        prev_alpha = alpha;
        prev_phi = v;
        alpha *= 2.0;
    }
    if !bracketed {
        return Err(Error::LineSearchFailure);
    }

    // Zoom phase (bisection).
    let mut hi = alpha_hi.unwrap();
    for _ in 0..max_iters {
        let mid = 0.5 * (alpha_lo + hi);
        let Some((v, d)) = eval(mid) else {
            hi = mid;
            continue;
        };
        if v > phi0 + c1 * mid * dphi0 || v >= phi_lo {
            hi = mid;
            continue;
        }
        if d.abs() <= -c2 * dphi0 {
            return Ok(LineSearchOutcome { alpha: mid, value: v });
        }
        if d * (hi - alpha_lo) >= 0.0 {
            hi = alpha_lo;
        }
        alpha_lo = mid;
        phi_lo = v;
    }
    Err(Error::LineSearchFailure)
}

/// Minimize the objective with the preconditioned nonlinear CG iteration.
pub fn minimize_objective(
    obj: &mut dyn Objective,
    precond: &Preconditioner,
    x0: Vec<f64>,
    config: &PcgConfig,
) -> Result<MinimizeResult> {
    let dim = x0.len();
    let mut x = x0;
    let (mut value, mut g) = obj.value_grad(&x)?;
    let mut grad_norm = norm2(&g);
    let mut trace = Vec::new();
    if grad_norm <= config.omega {
        return Ok(MinimizeResult {
            x,
            value,
            grad_norm,
            iterations: 0,
            stop: StopReason::Converged,
            trace,
        });
    }

    let mut h = precond.apply(&g)?;
    let mut gamma = dot(&h, &g);
    let mut p: Vec<f64> = h.iter().map(|v| -v).collect();
    let mut alpha_prev = config.alpha0;
    let restart_interval = 2 * dim;

    let mut best_x = x.clone();
    let mut best_value = value;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for iter in 0..config.max_iterations {
        iterations = iter + 1;
        let mut dphi0 = dot(&p, &g);
        if dphi0 >= 0.0 || iter % restart_interval == restart_interval - 1 {
            // Reset to preconditioned steepest descent.
            for (pi, hi) in p.iter_mut().zip(&h) {
                *pi = -hi;
            }
            dphi0 = -gamma;
            if dphi0 >= 0.0 {
                stop = StopReason::Converged;
                break;
            }
        }

        // Trials that fold the boundary or degenerate a face are rejected and
        // recovered by shrinking the step; anything else aborts the solve.
        let mut hard_error: Option<Error> = None;
        let outcome = match config.line_search {
            LineSearch::QuadraticArmijo => line_search_quadratic(
                |alpha| {
                    let xt: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
                    match obj.value(&xt) {
                        Ok(v) if v.is_finite() => Some(v),
                        Ok(_) => None,
                        Err(e) if e.is_step_rejectable() => None,
                        Err(e) => {
                            hard_error = Some(e);
                            None
                        }
                    }
                },
                value,
                dphi0,
                alpha_prev,
                config.c1,
                config.retries,
                config.halvings,
            ),
            LineSearch::StrongWolfe { c2 } => line_search_wolfe(
                |alpha| {
                    let xt: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
                    match obj.value_grad(&xt) {
                        Ok((v, grad)) if v.is_finite() => Some((v, dot(&grad, &p))),
                        Ok(_) => None,
                        Err(e) if e.is_step_rejectable() => None,
                        Err(e) => {
                            hard_error = Some(e);
                            None
                        }
                    }
                },
                value,
                dphi0,
                alpha_prev,
                config.c1,
                c2,
                40,
            ),
        };
        if let Some(e) = hard_error {
            return Err(e);
        }

        let outcome = match outcome {
            Ok(o) => o,
            Err(Error::LineSearchFailure) => {
                stop = StopReason::LineSearchStall;
                break;
            }
            Err(e) => return Err(e),
        };
        if outcome.alpha == 0.0 {
            stop = StopReason::Converged;
            break;
        }

        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += outcome.alpha * pi;
        }
        alpha_prev = outcome.alpha;

        let (v_new, g_new) = obj.value_grad(&x)?;
        debug_assert!(
            (v_new - outcome.value).abs() <= 1e-9 * v_new.abs().max(1.0),
            "line-search value disagrees with re-evaluation"
        );
        value = v_new;
        g = g_new;
        grad_norm = norm2(&g);
        if value < best_value {
            best_value = value;
            best_x.clone_from(&x);
        }

        if config.trace {
            let (e_c, e_a) = obj.last_energies().unwrap_or((f64::NAN, f64::NAN));
            trace.push(TraceRow {
                iteration: iter,
                e_c,
                e_a,
                grad_norm,
                alpha: outcome.alpha,
                value,
            });
        }

        if grad_norm <= config.omega {
            stop = StopReason::Converged;
            break;
        }

        h = precond.apply(&g)?;
        let gamma_new = dot(&h, &g);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, hi) in p.iter_mut().zip(&h) {
            *pi = -hi + beta * *pi;
        }
    }

    if stop == StopReason::LineSearchStall && best_value < value {
        x = best_x;
        let (v, g2) = obj.value_grad(&x)?;
        value = v;
        grad_norm = norm2(&g2);
    }

    Ok(MinimizeResult {
        x,
        value,
        grad_norm,
        iterations,
        stop,
        trace,
    })
}

/// Minimize the augmented Lagrangian of a disk-shaped map at fixed (λ, ρ)
/// starting from `f_init`. Returns the minimizer, its energies, and the
/// iteration count.
pub fn minimize(
    mesh: &TriMesh,
    f_init: &PolarMap,
    lambda: f64,
    rho: f64,
    config: &PcgConfig,
) -> Result<(PolarMap, EnergyReport, usize)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let mut model = DiskModel::new(mesh)?;
    let x0 = model.pack(f_init);
    let precond = model.preconditioner(&x0, lambda)?;
    let mut obj = AugLagObjective::new(&mut model, lambda, rho, 1.0);
    let res = minimize_objective(&mut obj, &precond, x0, config)?;
    let report = model.report(&res.x, 1.0)?;
    let f = model.polar_from_vec(&res.x)?;
    Ok((f, report, res.iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::to_polar;
    use crate::mesh::{bumpy_hemisphere, disk_mesh};

    #[test]
    fn quadratic_line_search_is_exact() {
        // φ(α) = (α − 2)², φ(0) = 4, φ'(0) = −4.
        let phi = |a: f64| Some((a - 2.0) * (a - 2.0));
        let out = line_search_quadratic(phi, 4.0, -4.0, 0.1, 1e-4, 10, 20).unwrap();
        assert!((out.alpha - 2.0).abs() < 1e-12);
        assert!(out.value.abs() < 1e-12);
    }

    #[test]
    fn zero_slope_returns_zero_step() {
        let out = line_search_quadratic(|_| Some(1.0), 1.0, 0.0, 0.1, 1e-4, 10, 20).unwrap();
        assert_eq!(out.alpha, 0.0);
    }

    #[test]
    fn concave_sample_still_satisfies_armijo() {
        // Cubic with negative curvature at the first sample: φ = −α³ + 3α² − 3α + 1
        // has φ'(0) = −3 < 0 and is concave near α ≈ 1.
        let phi = |a: f64| Some(-a * a * a + 3.0 * a * a - 3.0 * a + 1.0);
        let out = line_search_quadratic(phi, 1.0, -3.0, 0.9, 1e-4, 10, 20).unwrap();
        assert!(out.value <= 1.0 + 1e-4 * out.alpha * -3.0);
    }

    #[test]
    fn rejected_samples_are_recovered_by_halving() {
        // Trials above α = 0.5 are invalid (as if the map folded).
        let phi = |a: f64| if a > 0.5 { None } else { Some((a - 0.4) * (a - 0.4)) };
        let out = line_search_quadratic(phi, 0.16, -0.8, 1.0, 1e-4, 10, 20).unwrap();
        assert!(out.alpha <= 0.5);
        assert!(out.value <= 0.16 + 1e-4 * out.alpha * -0.8);
    }

    /// n-dimensional convex quadratic ½xᵀQx − bᵀx for solver tests.
    struct Quadratic {
        q: Vec<f64>,
        b: Vec<f64>,
        n: usize,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.n
        }
        fn value(&mut self, x: &[f64]) -> Result<f64> {
            let n = self.n;
            let mut v = 0.0;
            for i in 0..n {
                let mut qx = 0.0;
                for j in 0..n {
                    qx += self.q[i * n + j] * x[j];
                }
                v += 0.5 * x[i] * qx - self.b[i] * x[i];
            }
            Ok(v)
        }
        fn value_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let n = self.n;
            let mut g = vec![0.0; n];
            for i in 0..n {
                let mut qx = 0.0;
                for j in 0..n {
                    qx += self.q[i * n + j] * x[j];
                }
                g[i] = qx - self.b[i];
            }
            let v = self.value(x)?;
            Ok((v, g))
        }
    }

    /// Dense unpreconditioned CG oracle on the same quadratic.
    fn dense_cg(q: &[f64], b: &[f64], n: usize, iters: usize) -> Vec<Vec<f64>> {
        let mut x = vec![0.0; n];
        let matvec = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| (0..n).map(|j| q[i * n + j] * x[j]).sum())
                .collect()
        };
        let mut r: Vec<f64> = b.to_vec(); // b − Qx at x = 0
        let mut p = r.clone();
        let mut iterates = Vec::new();
        let mut rs = dot(&r, &r);
        for _ in 0..iters {
            let qp = matvec(&p);
            let alpha = rs / dot(&p, &qp);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * qp[i];
            }
            iterates.push(x.clone());
            let rs_new = dot(&r, &r);
            let beta = rs_new / rs;
            rs = rs_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        iterates
    }

    #[test]
    fn matches_unpreconditioned_cg_on_quadratic() {
        let n = 6;
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = 2.0 + i as f64;
            if i + 1 < n {
                q[i * n + i + 1] = -0.5;
                q[(i + 1) * n + i] = -0.5;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.0).collect();
        let mut obj = Quadratic {
            q: q.clone(),
            b: b.clone(),
            n,
        };
        // On an exact quadratic the one-point interpolation recovers the
        // exact minimizing step, so the iterates track textbook CG.
        let cfg = PcgConfig {
            omega: 1e-12,
            max_iterations: 3,
            alpha0: 1.0,
            ..Default::default()
        };
        let res =
            minimize_objective(&mut obj, &Preconditioner::identity(n), vec![0.0; n], &cfg).unwrap();
        assert_eq!(res.iterations, 3);
        let oracle = dense_cg(&q, &b, n, 3);
        let expect = &oracle[res.iterations - 1];
        for (a, b) in res.x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn strong_wolfe_mode_still_descends() {
        let n = 6;
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = 3.0 + (i % 3) as f64;
            if i + 1 < n {
                q[i * n + i + 1] = 0.4;
                q[(i + 1) * n + i] = 0.4;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut obj = Quadratic { q, b, n };
        let cfg = PcgConfig {
            omega: 1e-8,
            max_iterations: 50,
            alpha0: 1.0,
            line_search: LineSearch::StrongWolfe { c2: 0.4 },
            ..Default::default()
        };
        let res =
            minimize_objective(&mut obj, &Preconditioner::identity(n), vec![0.0; n], &cfg).unwrap();
        assert_eq!(res.stop, StopReason::Converged);
        assert!(res.grad_norm <= 1e-8);
    }

    fn planar_identity(m: &crate::mesh::TriMesh) -> crate::energy::PlanarMap {
        crate::energy::PlanarMap::new(m.vertices().iter().map(|v| [v[0], v[1]]).collect::<Vec<_>>())
    }

    #[test]
    fn converged_start_returns_immediately() {
        let m = disk_mesh(4);
        let id = planar_identity(&m);
        let f = to_polar(&m, &id).unwrap();
        let cfg = PcgConfig {
            omega: 1e-6,
            ..Default::default()
        };
        let (_, _, iters) = minimize(&m, &f, 0.0, 0.1, &cfg).unwrap();
        assert_eq!(iters, 0);
    }

    #[test]
    fn hemisphere_gradient_decreases_below_tolerance() {
        let m = bumpy_hemisphere(10);
        let init = crate::alm::fixed_point_init(&m, 0.4, 5).unwrap();
        let f = to_polar(&m, &init).unwrap();
        let dim = (2 * m.n_interior() + m.n_boundary()) as f64;
        let omega = 1e-2 * dim.sqrt();
        let cfg = PcgConfig {
            omega,
            max_iterations: 500,
            trace: true,
            ..Default::default()
        };
        let mut model = DiskModel::new(&m).unwrap();
        let x0 = model.pack(&f);
        let precond = model.preconditioner(&x0, 0.4).unwrap();
        let mut obj = AugLagObjective::new(&mut model, 0.4, 0.1, 1.0);
        let res = minimize_objective(&mut obj, &precond, x0, &cfg).unwrap();
        assert_eq!(res.stop, StopReason::Converged);
        assert!(res.grad_norm <= omega);
        assert!(res.iterations < 500);
    }

    #[test]
    fn descent_across_accepted_steps() {
        let m = bumpy_hemisphere(6);
        let init = crate::alm::fixed_point_init(&m, 0.4, 5).unwrap();
        let f = to_polar(&m, &init).unwrap();
        let mut model = DiskModel::new(&m).unwrap();
        let x0 = model.pack(&f);
        let precond = model.preconditioner(&x0, 0.3).unwrap();
        let mut obj = AugLagObjective::new(&mut model, 0.3, 0.2, 1.0);
        let cfg = PcgConfig {
            omega: 1e-10,
            max_iterations: 60,
            trace: true,
            ..Default::default()
        };
        let (v0, _) = obj.value_grad(&x0).unwrap();
        let res = minimize_objective(&mut obj, &precond, x0, &cfg).unwrap();
        let mut prev = v0;
        for row in &res.trace {
            assert!(row.alpha > 0.0);
            assert!(
                row.value <= prev + 1e-12,
                "step {} increased the value: {} -> {}",
                row.iteration,
                prev,
                row.value
            );
            prev = row.value;
        }
        assert!(res.value <= v0 + 1e-12);
    }

    #[test]
    fn pinned_conformal_beats_initializer() {
        let m = bumpy_hemisphere(8);
        let init = crate::alm::fixed_point_init(&m, 0.4, 5).unwrap();
        let f = to_polar(&m, &init).unwrap();
        let ec_init = crate::energy::conformal_energy(&m, &f).unwrap();
        let cfg = PcgConfig {
            omega: 1e-3,
            max_iterations: 400,
            ..Default::default()
        };
        let (_, rep, _) = minimize(&m, &f, 0.0, 0.0, &cfg).unwrap();
        assert!(rep.e_c < ec_init);
    }

    #[test]
    fn preconditioner_blocks_and_roundtrip() {
        let m = bumpy_hemisphere(5);
        let mut model = DiskModel::new(&m).unwrap();
        let init = crate::alm::fixed_point_init(&m, 0.0, 1).unwrap();
        let f = to_polar(&m, &init).unwrap();
        let x0 = model.pack(&f);

        // λ = 0: blocks are the cotangent Laplacian blocks.
        let pre = model.preconditioner(&x0, 0.0).unwrap();
        let ld = crate::laplacian::build_ld(&m).unwrap();
        let l_ii = ld
            .submatrix(m.interior_indices(), m.interior_indices())
            .unwrap();
        let n_i = m.n_interior();
        let n_b = m.n_boundary();
        let dim = 2 * n_i + n_b;
        // apply(M·x) = x for a random-ish x.
        let x: Vec<f64> = (0..dim).map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.21).collect();
        // Build M·x manually: interior blocks with L_II, boundary with L_BB.
        let l_bb = ld.submatrix(m.boundary_loop(), m.boundary_loop()).unwrap();
        let mut mx = vec![0.0; dim];
        l_ii.matvec(&x[0..n_i], &mut mx[0..n_i]);
        l_ii.matvec(&x[n_i..2 * n_i], &mut mx[n_i..2 * n_i]);
        l_bb.matvec(&x[2 * n_i..], &mut mx[2 * n_i..]);
        let back = pre.apply(&mx).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
