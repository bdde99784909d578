//! `equimap` — distortion-balancing mesh parameterization from the command
//! line.
//!
//! Subcommands: `param` (solve), `metrics` (distortion reports), `geomimage
//! encode|reconstruct`, and `report` (aggregate run summaries). Errors print
//! one machine-parseable line `error[<category>]: <message>` and exit
//! nonzero (2 for input problems, 1 otherwise).

mod geomimage_cmd;
mod metrics_cmd;
mod param;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "equimap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Balanced,
    Conformal,
    Authalic,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Disk,
    Square,
}

impl From<ShapeArg> for equimap::alm::Shape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Disk => equimap::alm::Shape::Disk,
            ShapeArg::Square => equimap::alm::Shape::Square,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute a parameterization and write map.obj + summary.json.
    Param(param::ParamArgs),
    /// Distortion report and histograms for a mesh and its planar map.
    Metrics(metrics_cmd::MetricsArgs),
    /// Geometry images: sample a square map to PNG or rebuild a mesh.
    Geomimage {
        #[command(subcommand)]
        action: geomimage_cmd::GeomimageCmd,
    },
    /// Aggregate summary.json files from run directories into a table.
    Report(report::ReportArgs),
}

/// Log verbosity from EQUIMAP_LOG (off | info | debug).
pub fn verbosity() -> u8 {
    match std::env::var("EQUIMAP_LOG").as_deref() {
        Ok("debug") => 2,
        Ok("info") => 1,
        _ => 0,
    }
}

#[macro_export]
macro_rules! info {
    ($($arg:tt)*) => {
        if $crate::verbosity() >= 1 {
            eprintln!($($arg)*);
        }
    };
}

pub fn load_mesh_arg(path: &PathBuf) -> equimap::Result<equimap::TriMesh> {
    let mesh = equimap::mesh::load_mesh_auto(path)?;
    for w in mesh.warnings() {
        info!("warning: {w}");
    }
    Ok(mesh)
}

/// Planar map stored as an OBJ with z = 0, row-aligned with the mesh.
pub fn load_map_arg(path: &PathBuf, mesh: &equimap::TriMesh) -> equimap::Result<equimap::energy::PlanarMap> {
    let maprep = equimap::mesh::load_mesh_auto(path)?;
    if maprep.n_vertices() != mesh.n_vertices() {
        return Err(equimap::Error::Shape(format!(
            "map has {} vertices, mesh has {}",
            maprep.n_vertices(),
            mesh.n_vertices()
        )));
    }
    Ok(equimap::energy::PlanarMap::new(
        maprep.vertices().iter().map(|v| [v[0], v[1]]).collect(),
    ))
}

fn exit_code_for(err: &equimap::Error) -> u8 {
    use equimap::Error::*;
    match err {
        Io(_) | Parse { .. } | Json(_) | MissingSidecar(_) | EmptyInput | Shape(_)
        | Topology(_) | DegenerateFace(_) | Index(_) | CornerOrder(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Param(args) => param::run(args),
        Command::Metrics(args) => metrics_cmd::run(args),
        Command::Geomimage { action } => geomimage_cmd::run(action),
        Command::Report(args) => report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e);
            ExitCode::from(exit_code_for(&e))
        }
    }
}
