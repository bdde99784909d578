//! The `param` subcommand: solve and write map.obj, summary.json, and an
//! optional iteration trace.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use equimap::alm::{self, AlmConfig, CornerSpec, Shape};
use equimap::error::{Error, Result};
use equimap::linalg::write_matrix_market;
use equimap::solver::LineSearch;

use crate::{load_mesh_arg, Mode, ShapeArg};

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Input mesh (.obj or .off).
    pub input: PathBuf,
    /// Output directory (created if missing).
    pub outdir: PathBuf,

    #[arg(long, value_enum, default_value = "balanced")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "disk")]
    pub shape: ShapeArg,
    /// Constraint weight in μ·E_A = E_C (balanced mode only).
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Blend weight for fixed-point mode and the initializer.
    #[arg(long, default_value_t = 0.4)]
    pub lambda: f64,
    /// Fixed-point iterations (initializer and fixed-point mode).
    #[arg(long, default_value_t = 5)]
    pub fp_iters: usize,
    /// Square-mode corner vertices (4 indices, counterclockwise); omit for
    /// automatic arc-length quartiles.
    #[arg(long, num_args = 4)]
    pub corners: Option<Vec<usize>>,

    /// Write a per-iteration trace CSV to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Echoed into the summary for reproducibility bookkeeping.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Export assembled operators (MatrixMarket) into the output directory.
    #[arg(long)]
    pub dump_operators: bool,

    // Schedule overrides.
    #[arg(long, default_value_t = 5.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub omega0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eta0: f64,
    #[arg(long, default_value_t = 50)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 500)]
    pub max_inner: usize,
    /// Use the prose schedule variant (ω⁰ = γ = 0.1).
    #[arg(long)]
    pub prose_schedule: bool,
    /// Strong-Wolfe line search instead of quadratic interpolation.
    #[arg(long)]
    pub wolfe: bool,
}

#[derive(serde::Serialize)]
struct SummaryFile {
    #[serde(flatten)]
    summary: alm::SolveSummary,
    seed: u64,
    input: String,
}

pub fn run(args: ParamArgs) -> Result<()> {
    if args.mu != 1.0 && args.mode != Mode::Balanced {
        return Err(Error::Shape(
            "--mu is only meaningful with --mode balanced".into(),
        ));
    }
    let mesh = load_mesh_arg(&args.input)?;
    fs::create_dir_all(&args.outdir)?;

    let mut cfg = AlmConfig {
        tau: args.tau,
        rho0: args.rho0,
        omega0: args.omega0,
        eta0: args.eta0,
        max_outer: args.max_outer,
        max_inner: args.max_inner,
        mu: args.mu,
        init_lambda: args.lambda,
        init_iterations: args.fp_iters,
        trace: args.trace.is_some(),
        ..AlmConfig::default()
    };
    if args.prose_schedule {
        cfg = cfg.prose_schedule();
    }
    if args.wolfe {
        cfg.line_search = LineSearch::StrongWolfe { c2: 0.4 };
    }

    if args.dump_operators {
        let ld = equimap::laplacian::build_ld(&mesh)?;
        let f = File::create(args.outdir.join("L_D.mtx"))?;
        write_matrix_market(&ld, BufWriter::new(f))?;
    }

    let shape: Shape = args.shape.into();
    let corners = match &args.corners {
        Some(v) => CornerSpec::Vertices([v[0], v[1], v[2], v[3]]),
        None => CornerSpec::Auto,
    };
    let result = match (args.mode, shape) {
        (Mode::Balanced, Shape::Disk) => alm::solve_disk(&mesh, &cfg)?,
        (Mode::Balanced, Shape::Square) => alm::solve_square(&mesh, corners, &cfg)?,
        (Mode::Conformal, s) => alm::solve_pinned(&mesh, 0.0, s, &cfg)?,
        (Mode::Authalic, s) => alm::solve_pinned(&mesh, 1.0, s, &cfg)?,
        (Mode::FixedPoint, s) => alm::solve_fixed_point(&mesh, args.lambda, args.fp_iters, s)?,
    };

    equimap::mesh::write_planar_obj(args.outdir.join("map.obj"), &result.map, mesh.faces())?;

    let summary = SummaryFile {
        summary: result.summary.clone(),
        seed: args.seed,
        input: args.input.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(args.outdir.join("summary.json"), json)?;

    if let Some(trace_path) = &args.trace {
        let mut w = BufWriter::new(File::create(trace_path)?);
        writeln!(w, "outer,iteration,e_c,e_a,grad_norm,alpha")?;
        for (outer, row) in &result.inner_trace {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                outer, row.iteration, row.e_c, row.e_a, row.grad_norm, row.alpha
            )?;
        }
    }

    crate::info!(
        "{}: E_C = {:.6e}, |residual| = {:.3e}, lambda = {:.3}, {} outer iterations, {} foldings",
        result.summary.mode,
        result.summary.e_c,
        result.summary.energy_diff,
        result.summary.lambda,
        result.summary.outer_iterations,
        result.summary.foldings
    );
    Ok(())
}
