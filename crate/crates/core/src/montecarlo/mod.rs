//! Path simulation of `⟨L_t, ξ⟩` and the Monte Carlo checks built on it.
//!
//! Path `k` draws its increments from stream `PATH_BASE + k` and, in annealed
//! runs, its scenery from `FRESH_SCENERY_BASE + k`; per-path results are
//! collected in index order and reduced by pairwise summation, so estimates
//! do not depend on the thread count.

mod exit;
mod fk;
mod ks;
pub mod stats;
mod tail;
mod walk;

pub use exit::{exit_time_check, exit_time_table, ExitReport, ExitRow};
pub use fk::{feynman_kac_check, FkConfig, FkReport};
pub use ks::{ks_scaling, KsFit, KsPoint};
pub use tail::{annealed_tail, annealed_tail_tilted, quenched_tail, reach, speed_fit, LadderPoint, SpeedFit, SpeedFitConfig, SpeedMode, TailEstimate};
pub use walk::{occupation_functional, occupation_ladder, Fresh, Frozen, SiteField};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal quantile for the 95% intervals reported by the estimators.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub dim: usize,
    /// Horizon.
    pub t: f64,
    /// Euler step.
    pub dt: f64,
    /// Confinement radius multiplier `R`: the walk is watched in `Q(2Rt)`.
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_radius() -> f64 {
    1.0
}

impl WalkConfig {
    pub fn new(dim: usize, t: f64, dt: f64, seed: u64) -> WalkConfig {
        WalkConfig {
            dim,
            t,
            dt,
            radius: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidArgument(format!("dimension {} not in 1..=3", self.dim)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon t = {} must be positive", self.t)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t / 100.0) {
            return Err(Error::InvalidArgument(format!("dt = {} must lie in ]0, t/100]", self.dt)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius = {} must be positive", self.radius)));
        }
        Ok(())
    }

    /// Number of Euler steps; `t` must be a multiple of `dt` up to rounding.
    pub fn steps(&self) -> usize {
        (self.t / self.dt).round() as usize
    }

    pub(crate) fn steps_checked(&self) -> Result<usize> {
        let steps = self.steps();
        if ((steps as f64) * self.dt - self.t).abs() > 1e-9 * self.t {
            return Err(Error::InvalidArgument(format!("t = {} is not a multiple of dt = {}", self.t, self.dt)));
        }
        Ok(steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    /// Log of the estimated probability, for tail estimates with hits.
    pub logprob: Option<f64>,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let (mean, stderr) = stats::mean_stderr(xs);
        Estimate {
            mean,
            stderr,
            n: xs.len() as u64,
            logprob: None,
        }
    }

    /// Standard error of `logprob` by the delta method.
    pub fn log_stderr(&self) -> Option<f64> {
        (self.mean > 0.0).then(|| self.stderr / self.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(WalkConfig::new(1, 1.0, 0.01, 0).validate().is_ok());
        assert!(WalkConfig::new(1, 1.0, 0.02, 0).validate().is_err());
        assert!(WalkConfig::new(4, 1.0, 0.01, 0).validate().is_err());
        assert!(WalkConfig::new(2, -1.0, 0.01, 0).validate().is_err());
        let c: WalkConfig = serde_json::from_str(r#"{"dim":1,"t":2.0,"dt":0.01}"#).unwrap();
        assert_eq!((c.radius, c.seed), (1.0, 0));
        assert!(serde_json::from_str::<WalkConfig>(r#"{"dim":1,"t":2.0,"dt":0.01,"x":1}"#).is_err());
    }
}
