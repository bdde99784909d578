//! The `geomimage` subcommand: encode square-parameterized surfaces as
//! 16-bit RGB rasters and reconstruct meshes from them.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use equimap::error::Result;
use equimap::geomimage;

use crate::{load_map_arg, load_mesh_arg};

#[derive(Debug, Subcommand)]
pub enum GeomimageCmd {
    /// Sample a square-parameterized mesh into a geometry image.
    Encode(EncodeArgs),
    /// Rebuild a triangular mesh from a geometry image.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Source mesh (.obj or .off).
    pub mesh: PathBuf,
    /// Square-parameterization map OBJ (z = 0).
    pub map: PathBuf,
    /// Output PNG path (sidecar written next to it).
    pub output: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Geometry image PNG (with its .gi.json sidecar).
    pub input: PathBuf,
    /// Output mesh OBJ.
    pub output: PathBuf,
    /// Also write reconstruction metrics JSON next to the mesh.
    #[arg(long)]
    pub with_metrics: bool,
}

pub fn run(cmd: GeomimageCmd) -> Result<()> {
    match cmd {
        GeomimageCmd::Encode(args) => {
            let mesh = load_mesh_arg(&args.mesh)?;
            let map = load_map_arg(&args.map, &mesh)?;
            let img = geomimage::encode(&mesh, &map, args.width, args.height)?;
            geomimage::write_image(&img, &args.output)?;
            crate::info!(
                "encoded {}x{} geometry image to {}",
                args.width,
                args.height,
                args.output.display()
            );
        }
        GeomimageCmd::Reconstruct(args) => {
            let img = geomimage::read_image(&args.input)?;
            let mesh = geomimage::reconstruct(&img);
            equimap::mesh::write_obj(&args.output, &mesh)?;
            if args.with_metrics {
                let rep = equimap::metrics::reconstruction_metrics(&mesh);
                let path = args.output.with_extension("metrics.json");
                std::fs::write(path, serde_json::to_string_pretty(&rep)?)?;
            }
            crate::info!(
                "reconstructed {} vertices / {} faces to {}",
                mesh.n_vertices(),
                mesh.n_faces(),
                args.output.display()
            );
        }
    }
    Ok(())
}
