use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, pairwise_sum, wilson};
use super::walk::{occupation_ladder, Fresh, Frozen};
use super::{Estimate, WalkConfig, Z95};
use crate::error::{Error, Result};
use crate::field::{sample_scenery, FieldLaw, Scenery};
use crate::ratefn::r_of_t;
use crate::rng;

/// Frequency estimate of `P[⟨L_t,ξ⟩ ≥ y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub y: f64,
    pub hits: u64,
    pub estimate: Estimate,
    /// Wilson 95% interval for the probability.
    pub wilson: (f64, f64),
    /// No hits: only the upper end of the interval is informative.
    pub lower_bound_only: bool,
    /// `y > M`: the event is empty and nothing was simulated.
    pub impossible: bool,
}

impl TailEstimate {
    fn from_hits(t: f64, y: f64, hits: u64, n: u64) -> TailEstimate {
        let p = hits as f64 / n as f64;
        TailEstimate {
            t,
            y,
            hits,
            estimate: Estimate {
                mean: p,
                stderr: (p * (1.0 - p) / n as f64).sqrt(),
                n,
                logprob: (hits > 0).then(|| p.ln()),
            },
            wilson: wilson(hits, n, Z95),
            lower_bound_only: hits == 0,
            impossible: false,
        }
    }

    fn impossible(t: f64, y: f64, n: u64) -> TailEstimate {
        TailEstimate {
            impossible: true,
            wilson: (0.0, 0.0),
            ..TailEstimate::from_hits(t, y, 0, n)
        }
    }
}

/// Half-width of a site box the walk leaves with negligible probability.
pub fn reach(t: f64, dim: usize) -> i64 {
    (8.0 * (t * dim as f64).sqrt()).ceil() as i64 + 2
}

fn horizons(cfg: &WalkConfig, ts: &[f64]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let c = WalkConfig { t, ..*cfg };
        c.validate()?;
        let s = c.steps_checked()?;
        if out.last().is_some_and(|&p| s <= p) {
            return Err(Error::InvalidArgument("horizons must increase".into()));
        }
        out.push(s);
    }
    Ok(out)
}

/// Occupation functionals with a fresh scenery per path, at every horizon.
fn fresh_ladder(law: &FieldLaw, cfg: &WalkConfig, ts: &[f64], n: u64, beta: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    let steps = horizons(cfg, ts)?;
    let hw = reach(*ts.last().expect("nonempty ladder"), cfg.dim);
    (0..n)
        .into_par_iter()
        .map_init(
            || Fresh::new(law, cfg.dim, hw, beta),
            |field, p| {
                field.reset(cfg.seed, rng::FRESH_SCENERY_BASE + p);
                let xs = occupation_ladder(field, cfg, p, &steps)?;
                Ok((xs, field.log_lr))
            },
        )
        .collect()
}

fn frozen_ladder(scenery: &Scenery, cfg: &WalkConfig, ts: &[f64], n: u64) -> Result<Vec<Vec<f64>>> {
    let steps = horizons(cfg, ts)?;
    (0..n).into_par_iter().map(|p| occupation_ladder(&mut Frozen(scenery), cfg, p, &steps)).collect()
}

fn count(xs: &[(Vec<f64>, f64)], k: usize, y: f64) -> u64 {
    xs.iter().filter(|(v, _)| v[k] >= y).count() as u64
}

/// `P̃[⟨L_t,ξ⟩ ≥ y]` under the annealed law, with a fresh scenery per path.
pub fn annealed_tail(law: &FieldLaw, cfg: &WalkConfig, y: f64, n: u64) -> Result<TailEstimate> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if y > law.ess_sup() {
        return Ok(TailEstimate::impossible(cfg.t, y, n));
    }
    let xs = fresh_ladder(law, cfg, &[cfg.t], n, 0.0)?;
    Ok(TailEstimate::from_hits(cfg.t, y, count(&xs, 0, y), n))
}

/// Importance-sampled annealed tail: every visited site is drawn from the
/// tilted law `e^{βx}ν(dx)/e^{Λ(β)}` and hits are weighted by the likelihood
/// ratio `Π e^{Λ(β) - βξ}`.
pub fn annealed_tail_tilted(law: &FieldLaw, cfg: &WalkConfig, y: f64, n: u64, beta: f64) -> Result<Estimate> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let xs = fresh_ladder(law, cfg, &[cfg.t], n, beta)?;
    let w: Vec<f64> = xs.iter().map(|(v, lr)| if v[0] >= y { lr.exp() } else { 0.0 }).collect();
    let mut e = Estimate::from_samples(&w);
    e.logprob = (e.mean > 0.0).then(|| e.mean.ln());
    Ok(e)
}

/// `P₀[⟨L_t,ξ⟩ ≥ y]` for a frozen scenery.
pub fn quenched_tail(scenery: &Scenery, cfg: &WalkConfig, y: f64, n: u64) -> Result<TailEstimate> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if scenery.dim != cfg.dim {
        return Err(Error::InvalidArgument("scenery and walk dimensions differ".into()));
    }
    if y > scenery.law.ess_sup() {
        return Ok(TailEstimate::impossible(cfg.t, y, n));
    }
    let xs = frozen_ladder(scenery, cfg, &[cfg.t], n)?;
    let hits = xs.iter().filter(|v| v[0] >= y).count() as u64;
    Ok(TailEstimate::from_hits(cfg.t, y, hits, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMode {
    Annealed,
    Quenched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedFitConfig {
    pub dim: usize,
    pub y: f64,
    /// Increasing horizons, all multiples of `dt`.
    pub ladder: Vec<f64>,
    /// Paths per ladder point.
    pub n: u64,
    pub mode: SpeedMode,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_dt() -> f64 {
    1.0 / 64.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub t: f64,
    pub y: f64,
    pub hits: u64,
    pub n: u64,
    pub logprob: Option<f64>,
    /// Standard error of `logprob`.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    /// Slope of `log(-log P̂)` against `log t`.
    pub exponent: f64,
    /// Annealed: `-log P̂ ≈ slope · t^{d/(d+2)}`; quenched: `-log P̂ ≈ slope · t/r²(t)`
    /// (least squares through the origin).
    pub slope: f64,
    /// Coefficient of determination of the exponent fit.
    pub r2: f64,
    pub points: Vec<LadderPoint>,
    /// Horizons dropped for lack of hits.
    pub dropped: Vec<f64>,
}

/// Speed of decay of `log P[⟨L_t,ξ⟩ ≥ y]` along a ladder of horizons.
///
/// One set of paths serves the whole ladder (each path is recorded at every
/// horizon). The quenched mode uses a single scenery for all horizons.
pub fn speed_fit(law: &FieldLaw, cfg: &SpeedFitConfig) -> Result<SpeedFit> {
    if cfg.ladder.len() < 2 {
        return Err(Error::InvalidArgument("the ladder needs at least two horizons".into()));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let walk = WalkConfig::new(cfg.dim, cfg.ladder[0], cfg.dt, cfg.seed);
    let t_max = *cfg.ladder.last().expect("nonempty");
    let hits: Vec<u64> = match cfg.mode {
        SpeedMode::Annealed => {
            let xs = fresh_ladder(law, &walk, &cfg.ladder, cfg.n, 0.0)?;
            (0..cfg.ladder.len()).map(|k| count(&xs, k, cfg.y)).collect()
        }
        SpeedMode::Quenched => {
            let scenery = sample_scenery(law, cfg.dim, reach(t_max, cfg.dim), cfg.seed)?;
            let xs = frozen_ladder(&scenery, &walk, &cfg.ladder, cfg.n)?;
            (0..cfg.ladder.len()).map(|k| xs.iter().filter(|v| v[k] >= cfg.y).count() as u64).collect()
        }
    };
    let d = cfg.dim as f64;
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    let (mut lx, mut ly, mut sx, mut sy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&t, &h) in cfg.ladder.iter().zip(&hits) {
        let est = TailEstimate::from_hits(t, cfg.y, h, cfg.n);
        points.push(LadderPoint {
            t,
            y: cfg.y,
            hits: h,
            n: cfg.n,
            logprob: est.estimate.logprob,
            stderr: est.estimate.log_stderr(),
        });
        match est.estimate.logprob {
            Some(lp) if lp < 0.0 => {
                lx.push(t.ln());
                ly.push((-lp).ln());
                sx.push(match cfg.mode {
                    SpeedMode::Annealed => t.powf(d / (d + 2.0)),
                    SpeedMode::Quenched => {
                        let r = r_of_t(t, cfg.dim)?;
                        t / (r * r)
                    }
                });
                sy.push(-lp);
            }
            _ => dropped.push(t),
        }
    }
    if lx.len() < 2 {
        return Err(Error::InvalidArgument(format!("only {} ladder points with hits; raise n or lower y", lx.len())));
    }
    let fit = linear_fit(&lx, &ly);
    let sxy: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a * b).collect();
    let sxx: Vec<f64> = sx.iter().map(|a| a * a).collect();
    Ok(SpeedFit {
        exponent: fit.slope,
        slope: pairwise_sum(&sxy) / pairwise_sum(&sxx),
        r2: fit.r2,
        points,
        dropped,
    })
}
