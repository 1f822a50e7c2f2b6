use brownian_scenery::field::{sample_scenery, FieldLaw};
use brownian_scenery::montecarlo::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{finite, require};
use crate::error::CliResult;
use crate::report::{num, opt, Report};
use crate::svg;

fn default_dt() -> f64 {
    1.0 / 64.0
}

fn fine_dt() -> f64 {
    1.0 / 1024.0
}

fn annealed() -> SpeedMode {
    SpeedMode::Annealed
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulateConfig {
    /// Decay speed of the tail along a ladder of horizons.
    SpeedFit {
        law: FieldLaw,
        dim: usize,
        y: f64,
        ladder: Vec<f64>,
        n: u64,
        #[serde(default = "annealed")]
        mode: SpeedMode,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Tail frequencies at one horizon for a list of levels.
    Tail {
        law: FieldLaw,
        dim: usize,
        t: f64,
        ys: Vec<f64>,
        n: u64,
        #[serde(default = "annealed")]
        mode: SpeedMode,
        /// Exponential tilt of the scenery law (annealed mode only).
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Second-moment growth of the random walk in random scenery.
    KsScaling {
        law: FieldLaw,
        dim: usize,
        ladder: Vec<u64>,
        samples: u64,
        #[serde(default)]
        seed: u64,
    },
    /// Exit frequencies against `Ĉ exp(-R²τ/2)`.
    ExitTime {
        dim: usize,
        radii: Vec<f64>,
        taus: Vec<f64>,
        n: u64,
        #[serde(default = "fine_dt")]
        dt: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Feynman–Kac functional of the mollified scenery against its spectral bound.
    FeynmanKac {
        law: FieldLaw,
        dim: usize,
        t: f64,
        alphas: Vec<f64>,
        delta: f64,
        r: f64,
        cells: usize,
        paths: u64,
        #[serde(default = "unit")]
        radius: f64,
        #[serde(default)]
        slack: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        scenery_seed: u64,
    },
}

impl SimulateConfig {
    pub fn validate(&self) -> CliResult<()> {
        match self {
            SimulateConfig::SpeedFit { dim, ladder, n, dt, seed, .. } => {
                finite(ladder, "ladder")?;
                require(ladder.len() >= 2 && ladder.windows(2).all(|w| w[0] < w[1]), "'ladder' needs at least two increasing horizons")?;
                require(*n > 0, "'n' must be positive")?;
                for &t in ladder {
                    WalkConfig::new(*dim, t, *dt, *seed).validate()?;
                }
            }
            SimulateConfig::Tail { dim, t, ys, n, mode, beta, dt, seed, .. } => {
                finite(ys, "ys")?;
                require(!ys.is_empty() && *n > 0, "need levels 'ys' and n > 0")?;
                require(beta.is_none() || *mode == SpeedMode::Annealed, "'beta' tilts the annealed law only")?;
                WalkConfig::new(*dim, *t, *dt, *seed).validate()?;
            }
            SimulateConfig::KsScaling { dim, ladder, samples, .. } => {
                require((1..=3).contains(dim), "'dim' must be 1, 2 or 3")?;
                require(ladder.len() >= 2 && ladder.windows(2).all(|w| w[0] < w[1]) && ladder[0] >= 2, "'ladder' needs at least two increasing lengths ≥ 2")?;
                require(*samples >= 2, "'samples' must be at least 2")?;
            }
            SimulateConfig::ExitTime { dim, radii, taus, n, dt, seed } => {
                finite(radii, "radii")?;
                finite(taus, "taus")?;
                require(!radii.is_empty() && !taus.is_empty() && *n > 0, "need radii, taus and n > 0")?;
                require(radii.iter().all(|r| *r > 0.0), "radii must be positive")?;
                for &t in taus {
                    WalkConfig::new(*dim, t, *dt, *seed).validate()?;
                }
            }
            SimulateConfig::FeynmanKac { dim, t, alphas, delta, r, cells, paths, radius, dt, seed, .. } => {
                finite(alphas, "alphas")?;
                require(!alphas.is_empty() && *paths > 0 && *cells >= 2, "need alphas, paths > 0 and cells ≥ 2")?;
                require(*delta > 0.0 && *r > 0.0 && *radius > 0.0, "delta, r and radius must be positive")?;
                WalkConfig { radius: *radius, ..WalkConfig::new(*dim, *t, *dt, *seed) }.validate()?;
            }
        }
        Ok(())
    }
}

const LADDER: [&str; 6] = ["t", "y", "hits", "n", "logprob", "stderr"];

pub fn run(cfg: &SimulateConfig, report: &Report) -> CliResult<()> {
    cfg.validate()?;
    match cfg {
        SimulateConfig::SpeedFit { law, dim, y, ladder, n, mode, dt, seed } => {
            let fc = SpeedFitConfig {
                dim: *dim,
                y: *y,
                ladder: ladder.clone(),
                n: *n,
                mode: *mode,
                dt: *dt,
                seed: *seed,
            };
            let fit = speed_fit(law, &fc)?;
            let rows: Vec<Vec<String>> = fit
                .points
                .iter()
                .map(|p| vec![num(p.t), num(p.y), p.hits.to_string(), p.n.to_string(), opt(p.logprob), opt(p.stderr)])
                .collect();
            report.csv("simulate.csv", &LADDER, &rows)?;
            report.json("simulate.json", &fit)?;
            if *dim == 1 {
                let pts = fit.points.iter().filter_map(|p| p.logprob.map(|l| (p.t.ln(), (-l).ln()))).collect::<Vec<_>>();
                report.svg("simulate.svg", &svg::line_plot(&pts, "tail decay", "log t", "log(-log P)"))?;
            }
        }
        SimulateConfig::Tail { law, dim, t, ys, n, mode, beta, dt, seed } => {
            let walk = WalkConfig::new(*dim, *t, *dt, *seed);
            match (mode, beta) {
                (SpeedMode::Annealed, Some(b)) => {
                    let est: Vec<Estimate> = ys.iter().map(|&y| annealed_tail_tilted(law, &walk, y, *n, *b)).collect::<Result<_, _>>()?;
                    let rows: Vec<Vec<String>> = ys
                        .iter()
                        .zip(&est)
                        .map(|(y, e)| vec![num(*t), num(*y), num(e.mean), e.n.to_string(), opt(e.logprob), opt(e.log_stderr())])
                        .collect();
                    report.csv("simulate.csv", &["t", "y", "mean", "n", "logprob", "stderr"], &rows)?;
                    report.json("simulate.json", &est)?;
                }
                _ => {
                    let scenery = match mode {
                        SpeedMode::Quenched => Some(sample_scenery(law, *dim, reach(*t, *dim), *seed)?),
                        SpeedMode::Annealed => None,
                    };
                    let est: Vec<TailEstimate> = ys
                        .iter()
                        .map(|&y| match &scenery {
                            Some(s) => quenched_tail(s, &walk, y, *n),
                            None => annealed_tail(law, &walk, y, *n),
                        })
                        .collect::<Result<_, _>>()?;
                    let rows: Vec<Vec<String>> = est
                        .iter()
                        .map(|e| vec![num(e.t), num(e.y), e.hits.to_string(), e.estimate.n.to_string(), opt(e.estimate.logprob), opt(e.estimate.log_stderr())])
                        .collect();
                    report.csv("simulate.csv", &LADDER, &rows)?;
                    report.json("simulate.json", &est)?;
                }
            }
        }
        SimulateConfig::KsScaling { law, dim, ladder, samples, seed } => {
            let fit = ks_scaling(law, *dim, ladder, *samples, *seed)?;
            let rows: Vec<Vec<String>> = fit.points.iter().map(|p| vec![p.n.to_string(), num(p.mean_sq), num(p.stderr)]).collect();
            report.csv("simulate.csv", &["n", "mean_sq", "stderr"], &rows)?;
            report.json("simulate.json", &fit)?;
            let pts = fit.points.iter().map(|p| ((p.n as f64).ln(), p.mean_sq.ln())).collect::<Vec<_>>();
            report.svg("simulate.svg", &svg::line_plot(&pts, "second moment growth", "log n", "log E[Z^2]"))?;
        }
        SimulateConfig::ExitTime { dim, radii, taus, n, dt, seed } => {
            let walk = WalkConfig::new(*dim, taus[0], *dt, *seed);
            let rep = exit_time_table(&walk, radii, taus, *n)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.r),
                        num(r.tau),
                        num(r.estimate.mean),
                        r.estimate.n.to_string(),
                        opt(r.estimate.logprob),
                        opt(r.estimate.log_stderr()),
                        num(r.log_bound),
                        r.violation.to_string(),
                    ]
                })
                .collect();
            report.csv("simulate.csv", &["R", "tau", "frequency", "n", "logprob", "stderr", "log_bound", "violation"], &rows)?;
            report.json("simulate.json", &rep)?;
        }
        SimulateConfig::FeynmanKac { law, dim, t, alphas, delta, r, cells, paths, radius, slack, dt, seed, scenery_seed } => {
            let walk = WalkConfig { radius: *radius, ..WalkConfig::new(*dim, *t, *dt, *seed) };
            // The raster reads the scenery up to δ/2 past the box wall.
            let hw = (r * (radius * t + delta)).ceil() as i64 + 1;
            let scenery = sample_scenery(law, *dim, hw, *scenery_seed)?;
            let reps: Vec<FkReport> = alphas
                .iter()
                .map(|&alpha| {
                    let fk = FkConfig {
                        delta: *delta,
                        alpha,
                        r: *r,
                        cells: *cells,
                        paths: *paths,
                    };
                    feynman_kac_check(&scenery, &fk, &walk, *slack)
                })
                .collect::<Result<_, _>>()?;
            let rows: Vec<Vec<String>> = alphas
                .iter()
                .zip(&reps)
                .map(|(a, f)| {
                    vec![
                        num(*a),
                        num(f.lambda),
                        num(f.lambda_free),
                        num(f.c_hat),
                        num(f.mc.mean),
                        num(f.mc.stderr),
                        num(f.bound),
                        f.holds.to_string(),
                        f.overflow.to_string(),
                    ]
                })
                .collect();
            report.csv("simulate.csv", &["alpha", "lambda", "lambda_free", "c_hat", "mc", "mc_stderr", "bound", "holds", "overflow"], &rows)?;
            report.json("simulate.json", &json!({"scenery_halfwidth": hw, "reports": reps}))?;
        }
    }
    Ok(())
}
