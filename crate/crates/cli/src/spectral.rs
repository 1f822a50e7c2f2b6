use brownian_scenery::field::{sample_scenery, FieldLaw};
use brownian_scenery::grid::{Density, Grid, Mollifier};
use brownian_scenery::spectral::{default_tol, localization_gap, principal_eigenvalue};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{one, require, GridSpec};
use crate::error::CliResult;
use crate::report::{num, Report};
use crate::svg;

/// Source of the potential `V` in `-½Δ - V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Zero {},
    /// `α ψ_δ * ξ̄_r` for a sampled scenery.
    Scenery {
        law: FieldLaw,
        alpha: f64,
        delta: f64,
        r: f64,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub grid: GridSpec,
    pub potential: Potential,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Also report the smallest eigenvalue over sub-boxes of this side.
    #[serde(default)]
    pub sub_side: Option<f64>,
}

impl SpectralConfig {
    pub fn validate(&self) -> CliResult<Grid> {
        let grid = self.grid.build(self.dim)?;
        if let Potential::Scenery { alpha, delta, r, .. } = &self.potential {
            require(alpha.is_finite() && *r > 0.0, "potential needs a finite alpha and r > 0")?;
            Mollifier::new(*delta, &grid)?;
        }
        require(self.tol.is_none_or(|t| t > 0.0), "'tol' must be positive")?;
        require(self.sub_side.is_none_or(|s| s > 0.0), "'sub_side' must be positive")?;
        Ok(grid)
    }
}

pub fn run(cfg: &SpectralConfig, report: &Report) -> CliResult<()> {
    let grid = cfg.validate()?;
    let v = match &cfg.potential {
        Potential::Zero {} => vec![0.0; grid.cells()],
        Potential::Scenery { law, alpha, delta, r, seed } => {
            let m = Mollifier::new(*delta, &grid)?;
            let hw = (r * (grid.side / 2.0 + delta)).ceil() as i64 + 1;
            let s = sample_scenery(law, cfg.dim, hw, *seed)?;
            m.smooth_scenery(&grid, &s, *r)?.into_iter().map(|x| alpha * x).collect()
        }
    };
    let tol = cfg.tol.unwrap_or(default_tol(cfg.dim));
    let e = principal_eigenvalue(&v, &grid, tol)?;
    let rho = Density::from_eigenvector(grid, &e.eigenvector)?;
    let gap = cfg.sub_side.map(|s| localization_gap(&v, &grid, s, tol)).transpose()?;
    let axes = ["x", "y", "z"];
    let mut columns = vec!["cell"];
    columns.extend(&axes[..cfg.dim]);
    columns.extend(["potential", "density"]);
    let rows: Vec<Vec<String>> = (0..grid.cells())
        .map(|c| {
            let x = grid.center(c);
            let mut row = vec![c.to_string()];
            row.extend(x[..cfg.dim].iter().map(|v| num(*v)));
            row.push(num(v[c]));
            row.push(num(rho.values[c]));
            row
        })
        .collect();
    report.csv("spectral.csv", &columns, &rows)?;
    report.json(
        "spectral.json",
        &json!({
            "lambda": e.lambda,
            "residual": e.residual,
            "iterations": e.iterations,
            "whole_box": gap.map(|g| g.0),
            "min_sub_box": gap.map(|g| g.1),
        }),
    )?;
    match cfg.dim {
        1 => {
            let pts: Vec<(f64, f64)> = (0..grid.cells()).map(|c| (grid.center(c)[0], rho.values[c])).collect();
            report.svg("spectral.svg", &svg::line_plot(&pts, "ground-state density", "x", "density"))?;
        }
        2 => {
            report.svg("spectral.svg", &svg::heat_map(&rho.values, grid.n, "ground-state density"))?;
        }
        _ => {}
    }
    Ok(())
}
