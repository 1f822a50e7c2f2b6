use brownian_scenery::grid::Grid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Box `Q(A)` with `N` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "A")]
    pub side: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self, dim: usize) -> CliResult<Grid> {
        Ok(Grid::new(dim, self.side, self.n)?)
    }
}

pub fn one() -> usize {
    1
}

pub fn require(ok: bool, msg: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

pub fn finite(xs: &[f64], what: &str) -> CliResult<()> {
    require(xs.iter().all(|x| x.is_finite()), &format!("{what} must be finite"))
}
