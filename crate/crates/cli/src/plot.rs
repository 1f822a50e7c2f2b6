use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::svg;

/// SVG line plot of two columns of a CSV written by this tool. Cells that do
/// not parse as finite numbers (`inf`, empty) are skipped.
pub fn run(input: &Path, x: Option<&str>, y: Option<&str>, out: &Path) -> CliResult<()> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(input)?;
    let header = r.headers()?.clone();
    let col = |name: Option<&str>, default: usize| -> CliResult<usize> {
        match name {
            Some(n) => header.iter().position(|h| h == n).ok_or_else(|| CliError::Config(format!("no column '{n}' in {}", input.display()))),
            None if default < header.len() => Ok(default),
            None => Err(CliError::Config(format!("{} has fewer than two columns", input.display()))),
        }
    };
    let (ix, iy) = (col(x, 0)?, col(y, 1)?);
    let mut pts = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if let (Some(Ok(a)), Some(Ok(b))) = (rec.get(ix).map(str::parse::<f64>), rec.get(iy).map(str::parse::<f64>)) {
            pts.push((a, b));
        }
    }
    let title = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    std::fs::write(out, svg::line_plot(&pts, &title, &header[ix], &header[iy]))?;
    Ok(())
}
