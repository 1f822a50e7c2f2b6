use serde::{Deserialize, Serialize};

use super::Settings;
use crate::ext::Extended;
use crate::field::FieldLaw;
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub kind: String,
    pub law: FieldLaw,
    pub dim: usize,
    pub side: f64,
    pub n: usize,
    pub settings: Settings,
}

impl CurveMeta {
    pub fn new(kind: &str, law: &FieldLaw, grid: &Grid, settings: &Settings) -> CurveMeta {
        CurveMeta {
            kind: kind.to_string(),
            law: law.clone(),
            dim: grid.dim,
            side: grid.side,
            n: grid.n,
            settings: settings.clone(),
        }
    }
}

/// Rate values sampled on a `y`-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub ys: Vec<f64>,
    pub values: Vec<Extended>,
    /// `|⟨μ,u⟩ - y|` of the pair behind each value.
    pub feasibility: Vec<f64>,
    pub meta: CurveMeta,
}

impl RateCurve {
    /// Largest minorant that is nondecreasing in `|y|` on each side of 0
    /// (`ys` sorted increasingly).
    pub fn lsc_minorant(&self) -> RateCurve {
        let mut values = self.values.clone();
        let n = values.len();
        for j in (0..n).rev() {
            if self.ys[j] >= 0.0 && j + 1 < n && self.ys[j + 1] >= 0.0 {
                values[j] = values[j].min(values[j + 1]);
            }
        }
        for j in 0..n {
            if self.ys[j] <= 0.0 && j > 0 && self.ys[j - 1] <= 0.0 {
                values[j] = values[j].min(values[j - 1]);
            }
        }
        RateCurve { values, ..self.clone() }
    }
}

/// One mixture step `𝓙_{2p}(θy₁+(1-θ)y₂) ≤ θ𝓙_p(y₁)+(1-θ)𝓙_p(y₂)` on a
/// sorted grid: each value is replaced by the lowest chord passing over it.
pub fn jp_combine(ys: &[f64], values: &[Extended]) -> Vec<Extended> {
    let n = ys.len();
    let mut out = values.to_vec();
    for j in 0..n {
        for i in 0..j {
            let Extended::Finite(vi) = values[i] else { continue };
            for k in j + 1..n {
                let Extended::Finite(vk) = values[k] else { continue };
                let theta = (ys[k] - ys[j]) / (ys[k] - ys[i]);
                let chord = theta * vi + (1.0 - theta) * vk;
                if Extended::Finite(chord) < out[j] {
                    out[j] = Extended::Finite(chord);
                }
            }
        }
    }
    out
}
