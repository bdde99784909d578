//! The `metrics` subcommand: distortion report JSON plus histogram CSVs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use equimap::error::Result;
use equimap::metrics;

use crate::{load_map_arg, load_mesh_arg};

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Source mesh (.obj or .off).
    pub mesh: PathBuf,
    /// Planar map OBJ (z = 0), vertex-aligned with the mesh.
    pub map: PathBuf,
    /// Output directory.
    pub outdir: PathBuf,
    /// Histogram bins.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

pub fn run(args: MetricsArgs) -> Result<()> {
    let mesh = load_mesh_arg(&args.mesh)?;
    let map = load_map_arg(&args.map, &mesh)?;
    fs::create_dir_all(&args.outdir)?;

    let report = metrics::distortion_report(&mesh, &map)?;
    fs::write(
        args.outdir.join("distortion.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    let ha = metrics::histogram(&report.d_angle, args.bins)?;
    ha.write_csv(BufWriter::new(File::create(
        args.outdir.join("d_angle_hist.csv"),
    )?))?;
    let hr = metrics::histogram(&report.d_area, args.bins)?;
    hr.write_csv(BufWriter::new(File::create(
        args.outdir.join("d_area_hist.csv"),
    )?))?;

    crate::info!(
        "D_angle mean {:.4} sd {:.4}; D_area mean {:.4} sd {:.4}; {} foldings",
        report.d_angle_mean,
        report.d_angle_sd,
        report.d_area_mean,
        report.d_area_sd,
        report.fold_count
    );
    Ok(())
}
