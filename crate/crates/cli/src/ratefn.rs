use brownian_scenery::ext::Extended;
use brownian_scenery::field::FieldLaw;
use brownian_scenery::grid::{Density, Grid};
use brownian_scenery::ratefn::*;
use brownian_scenery::spectral::{default_tol, principal_eigenvalue};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{finite, one, require, GridSpec};
use crate::error::CliResult;
use crate::report::{num, Report};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Annealed,
    ProductForm,
    Quenched,
    QuenchedL,
    J1,
    Dual,
}

/// Test density for the duality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    /// Squared free ground state of the box.
    #[default]
    GroundState,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatefnConfig {
    pub kind: Kind,
    pub law: FieldLaw,
    #[serde(default = "one")]
    pub dim: usize,
    pub grid: GridSpec,
    #[serde(default)]
    pub ys: Vec<f64>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub density: DensitySource,
    #[serde(default)]
    pub settings: Settings,
}

impl RatefnConfig {
    pub fn validate(&self) -> CliResult<Grid> {
        let grid = self.grid.build(self.dim)?;
        finite(&self.ys, "ys")?;
        finite(&self.alphas, "alphas")?;
        let needs_ys = self.kind != Kind::QuenchedL;
        let needs_alphas = matches!(self.kind, Kind::Quenched | Kind::QuenchedL);
        require(!needs_ys || !self.ys.is_empty(), "this kind needs a non-empty 'ys'")?;
        require(!needs_alphas || !self.alphas.is_empty(), "this kind needs a non-empty 'alphas'")?;
        if self.kind == Kind::Quenched {
            require(self.ys.windows(2).all(|w| w[0] < w[1]), "'ys' must increase")?;
        }
        Ok(grid)
    }
}

fn ext(v: Extended) -> String {
    match v {
        Extended::Finite(x) => num(x),
        Extended::PosInf => "inf".into(),
    }
}

pub fn run(cfg: &RatefnConfig, report: &Report) -> CliResult<()> {
    let grid = cfg.validate()?;
    let (a, n) = (num(cfg.grid.side), cfg.grid.n.to_string());
    let s = &cfg.settings;
    let curve_rows = |ys: &[f64], vals: &[Extended], feas: &[f64]| -> Vec<Vec<String>> {
        ys.iter()
            .zip(vals)
            .zip(feas)
            .map(|((y, v), f)| vec![num(*y), ext(*v), num(*f), a.clone(), n.clone()])
            .collect()
    };
    const CURVE: [&str; 5] = ["y", "value", "feasibility", "A", "N"];
    let plot = |pts: Vec<(f64, f64)>, title: &str, x: &str, y: &str| -> CliResult<()> {
        if cfg.dim == 1 {
            report.svg("ratefn.svg", &svg::line_plot(&pts, title, x, y))?;
        }
        Ok(())
    };
    let curve_points = |ys: &[f64], vals: &[Extended]| ys.iter().zip(vals).map(|(y, v)| (*y, v.to_f64())).collect::<Vec<_>>();
    match cfg.kind {
        Kind::Annealed => {
            let results: Vec<AnnealedResult> = cfg.ys.iter().map(|&y| annealed_rate(y, &cfg.law, &grid, s)).collect::<Result<_, _>>()?;
            let vals: Vec<Extended> = results.iter().map(|r| r.value).collect();
            let feas: Vec<f64> = results.iter().map(|r| (r.achieved - r.y).abs()).collect();
            report.csv("ratefn.csv", &CURVE, &curve_rows(&cfg.ys, &vals, &feas))?;
            let summary: Vec<_> = results
                .iter()
                .map(|r| json!({"y": r.y, "value": r.value, "box_value": r.box_value, "entropy": r.entropy, "rate": r.rate, "achieved": r.achieved, "iterations": r.iterations}))
                .collect();
            report.json("ratefn.json", &summary)?;
            plot(curve_points(&cfg.ys, &vals), "annealed rate", "y", "I(y)")?;
        }
        Kind::ProductForm => {
            let vals: Vec<Extended> = cfg.ys.iter().map(|&y| annealed_rate_product_form(y, &cfg.law, &grid, s)).collect::<Result<_, _>>()?;
            report.csv("ratefn.csv", &CURVE, &curve_rows(&cfg.ys, &vals, &vec![0.0; vals.len()]))?;
            report.json("ratefn.json", &json!({"ys": cfg.ys, "values": vals}))?;
            plot(curve_points(&cfg.ys, &vals), "annealed rate, product form", "y", "I(y)")?;
        }
        Kind::J1 => {
            let results: Vec<J1Result> = cfg.ys.iter().map(|&y| j1_rate(y, &cfg.law, &grid, s)).collect::<Result<_, _>>()?;
            let vals: Vec<Extended> = results.iter().map(|r| r.value).collect();
            report.csv("ratefn.csv", &CURVE, &curve_rows(&cfg.ys, &vals, &vec![0.0; vals.len()]))?;
            let summary: Vec<_> = results
                .iter()
                .map(|r| json!({"y": r.y, "value": r.value, "box_value": r.box_value, "iterations": r.iterations}))
                .collect();
            report.json("ratefn.json", &summary)?;
            plot(curve_points(&cfg.ys, &vals), "single-profile quenched rate", "y", "J1(y)")?;
        }
        Kind::Quenched => {
            let st = quenched_study(&cfg.law, &grid, &cfg.ys, &cfg.alphas, s)?;
            let j = &st.legendre.transform;
            report.csv("ratefn.csv", &CURVE, &curve_rows(&j.ys, &j.values, &j.feasibility))?;
            let j1_rows: Vec<Vec<String>> = cfg
                .ys
                .iter()
                .zip(&st.j1.values)
                .zip(&st.j1_envelope)
                .map(|((y, v), e)| vec![num(*y), ext(*v), ext(*e), a.clone(), n.clone()])
                .collect();
            report.csv("j1.csv", &["y", "j1", "j1_envelope", "A", "N"], &j1_rows)?;
            report.csv("l.csv", &["alpha", "l", "A", "N"], &l_rows(&cfg.alphas, &st.legendre.l_values, &a, &n))?;
            report.json("ratefn.json", &st)?;
            plot(curve_points(&j.ys, &j.values), "quenched rate", "y", "J(y)")?;
        }
        Kind::QuenchedL => {
            let results: Vec<QuenchedResult> = cfg.alphas.iter().map(|&al| quenched_l(al, &cfg.law, &grid, s)).collect::<Result<_, _>>()?;
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| vec![num(r.alpha), num(r.value), num(r.box_value), a.clone(), n.clone()])
                .collect();
            report.csv("ratefn.csv", &["alpha", "value", "box_value", "A", "N"], &rows)?;
            let summary: Vec<_> = results
                .iter()
                .map(|r| json!({"alpha": r.alpha, "value": r.value, "box_value": r.box_value, "entropy": r.entropy, "iterations": r.iterations}))
                .collect();
            report.json("ratefn.json", &summary)?;
            plot(results.iter().map(|r| (r.alpha, r.value)).collect(), "quenched l", "alpha", "l(alpha)")?;
        }
        Kind::Dual => {
            let f = match cfg.density {
                DensitySource::GroundState => {
                    let e = principal_eigenvalue(&vec![0.0; grid.cells()], &grid, default_tol(cfg.dim))?;
                    Density::from_eigenvector(grid, &e.eigenvector)?.values
                }
                DensitySource::Uniform => Density::uniform(grid).values,
            };
            let reports: Vec<DualityReport> = cfg.ys.iter().map(|&y| duality_check(y, &f, &cfg.law, &grid)).collect::<Result<_, _>>()?;
            let rows: Vec<Vec<String>> = cfg
                .ys
                .iter()
                .zip(&reports)
                .map(|(y, r)| vec![num(*y), ext(r.primal), ext(r.dual), num(r.gap)])
                .collect();
            report.csv("ratefn.csv", &["y", "primal", "dual", "gap"], &rows)?;
            report.json("ratefn.json", &reports)?;
            plot(cfg.ys.iter().zip(&reports).map(|(y, r)| (*y, r.primal.to_f64())).collect(), "duality: primal side", "y", "value")?;
        }
    }
    Ok(())
}

fn l_rows(alphas: &[f64], ls: &[f64], a: &str, n: &str) -> Vec<Vec<String>> {
    alphas.iter().zip(ls).map(|(al, l)| vec![num(*al), num(*l), a.into(), n.into()]).collect()
}
