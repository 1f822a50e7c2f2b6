use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::Walker;
use super::{Estimate, WalkConfig};
use crate::error::{Error, Result};

/// Frequency of `σ(Rτ) ≤ τ`: the walk reaches sup-norm `Rτ` before `τ = cfg.t`.
pub fn exit_time_check(cfg: &WalkConfig, r: f64, n: u64) -> Result<Estimate> {
    cfg.validate()?;
    if !(r > 0.0) || n == 0 {
        return Err(Error::InvalidArgument("need R > 0 and n > 0".into()));
    }
    let steps = cfg.steps_checked()?;
    let level = r * cfg.t;
    let hits: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut w = Walker::new(cfg, p, cfg.dt);
            for _ in 0..steps {
                w.step();
                if w.sup_norm() >= level {
                    return 1.0;
                }
            }
            0.0
        })
        .collect();
    let mut e = Estimate::from_samples(&hits);
    e.logprob = (e.mean > 0.0).then(|| e.mean.ln());
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitRow {
    pub r: f64,
    pub tau: f64,
    pub estimate: Estimate,
    /// `log Ĉ - R²τ/2`.
    pub log_bound: f64,
    /// `logprob > log_bound + 2·stderr(logprob)`.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    /// `log Ĉ`, fitted at the smallest radius.
    pub log_c: f64,
    pub rows: Vec<ExitRow>,
    pub violations: usize,
}

/// Exit frequencies over a set of radii and horizons against
/// `C exp(-R²τ/2)`, with `Ĉ` fitted at the smallest radius of the first horizon.
pub fn exit_time_table(cfg: &WalkConfig, radii: &[f64], taus: &[f64], n: u64) -> Result<ExitReport> {
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let (&r0, &tau0) = radii.first().zip(taus.first()).ok_or_else(|| Error::InvalidArgument("empty radius or horizon list".into()))?;
    let base = exit_time_check(&WalkConfig { t: tau0, ..*cfg }, r0, n)?;
    let log_c = base
        .logprob
        .ok_or_else(|| Error::InvalidArgument(format!("no exits at the smallest radius {r0}; Ĉ cannot be fitted")))?
        + r0 * r0 * tau0 / 2.0;
    let mut rows = Vec::new();
    for &tau in taus {
        for &r in &radii {
            let c = WalkConfig { t: tau, ..*cfg };
            let e = exit_time_check(&c, r, n)?;
            let log_bound = log_c - r * r * tau / 2.0;
            let violation = match (e.logprob, e.log_stderr()) {
                (Some(lp), Some(se)) => lp > log_bound + 2.0 * se,
                _ => false,
            };
            rows.push(ExitRow {
                r,
                tau,
                estimate: e,
                log_bound,
                violation,
            });
        }
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(ExitReport { log_c, rows, violations })
}
