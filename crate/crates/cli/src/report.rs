//! The `report` subcommand: aggregate summary.json files into an aligned
//! table and, for exactly two run sets, a ratio table of the accuracy
//! metrics (first / second).

use std::path::{Path, PathBuf};

use clap::Args;
use equimap::alm::SolveSummary;
use equimap::error::{Error, Result};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directories, each holding a summary.json.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Also write the aggregate table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn load_summary(dir: &Path) -> Result<SolveSummary> {
    let path = dir.join("summary.json");
    if !path.exists() {
        return Err(Error::EmptyInput);
    }
    let text = std::fs::read_to_string(&path)?;
    Ok(serde_json::from_str(&text)?)
}

const COLUMNS: &[&str] = &[
    "run", "mode", "shape", "mu", "time_s", "E_C", "|r|", "lambda", "iters", "folds",
    "Dang_mean", "Dang_sd", "Darea_mean", "Darea_sd",
];

fn row_of(name: &str, s: &SolveSummary) -> Vec<String> {
    vec![
        name.to_string(),
        s.mode.clone(),
        s.shape.clone(),
        format!("{}", s.mu),
        format!("{:.2}", s.time_secs),
        format!("{:.3e}", s.e_c),
        format!("{:.3e}", s.energy_diff),
        format!("{:.3}", s.lambda),
        format!("{}", s.outer_iterations),
        format!("{}", s.foldings),
        format!("{:.3}", s.d_angle_mean),
        format!("{:.3}", s.d_angle_sd),
        format!("{:.3}", s.d_area_mean),
        format!("{:.3}", s.d_area_sd),
    ]
}

fn print_aligned(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (k, cell) in row.iter().enumerate() {
            widths[k] = widths[k].max(cell.len());
        }
    }
    let fmt_row = |cells: &[String]| {
        cells
            .iter()
            .enumerate()
            .map(|(k, c)| format!("{:>w$}", c, w = widths[k]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let header_cells: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    println!("{}", fmt_row(&header_cells));
    for row in rows {
        println!("{}", fmt_row(row));
    }
}

pub fn run(args: ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for dir in &args.runs {
        let s = load_summary(dir)?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        rows.push(row_of(&name, &s));
        summaries.push((name, s));
    }
    print_aligned(COLUMNS, &rows);

    if let Some(csv) = &args.csv {
        let mut text = COLUMNS.join(",") + "\n";
        for row in &rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(csv, text)?;
    }

    // Accuracy-metric ratios between exactly two runs.
    if let [(na, a), (nb, b)] = &summaries[..] {
        println!();
        println!("ratios ({na} / {nb}):");
        let ratio = |x: f64, y: f64| {
            if y != 0.0 {
                format!("{:.4}", x / y)
            } else {
                "inf".to_string()
            }
        };
        let pairs = [
            ("E_C", a.e_c, b.e_c),
            ("E_A", a.e_a, b.e_a),
            ("mean_D_angle", a.d_angle_mean, b.d_angle_mean),
            ("mean_D_area", a.d_area_mean, b.d_area_mean),
        ];
        for (label, x, y) in pairs {
            println!("  {label}: {}", ratio(x, y));
        }
    }
    Ok(())
}
