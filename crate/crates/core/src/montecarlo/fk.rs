use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::Walker;
use super::{Estimate, WalkConfig};
use crate::error::{Error, Result};
use crate::field::Scenery;
use crate::grid::{Grid, Mollifier};
use crate::spectral::{default_tol, principal_eigenvalue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkConfig {
    /// Mollifier width.
    pub delta: f64,
    /// Potential strength: `V = α ψ_δ * ξ̄_r`.
    pub alpha: f64,
    /// Scale of the coarse-grained field.
    pub r: f64,
    /// Cells per axis of the raster of `V` on the walk's box.
    pub cells: usize,
    pub paths: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkReport {
    /// `λ(V, Q(2Rτ))` on the raster.
    pub lambda: f64,
    pub lambda_free: f64,
    /// `ĉ(d)`, fitted on the same paths at `V = 0`.
    pub c_hat: f64,
    /// `E₀[exp ∫₀^τ V(B_s) ds ; σ > τ]`.
    pub mc: Estimate,
    pub mc_free: Estimate,
    /// `ĉ (1 + (τ(λ + s))^{d/2}) e^{-τλ}` with `s = max(sup V, 0)`.
    pub bound: f64,
    /// `mc - 2·stderr ≤ bound·(1 + slack)`.
    pub holds: bool,
    /// Weights overflowed or the relative error exceeds 1/2; importance
    /// sampling would be needed for this `ατ`.
    pub overflow: bool,
}

// The classical bound is stated for killing potentials; `V - s ≤ 0` is one,
// with principal eigenvalue `λ + s ≥ 0`.
fn prefactor(tau: f64, shifted: f64, dim: usize) -> f64 {
    1.0 + (tau * shifted.max(0.0)).powf(dim as f64 / 2.0)
}

/// Feynman–Kac functional of the mollified scenery against the spectral
/// bound on the box `Q(2Rτ)`, `R = cfg.radius`, `τ = cfg.t`.
pub fn feynman_kac_check(scenery: &Scenery, fk: &FkConfig, cfg: &WalkConfig, slack: f64) -> Result<FkReport> {
    cfg.validate()?;
    if scenery.dim != cfg.dim {
        return Err(Error::InvalidArgument("scenery and walk dimensions differ".into()));
    }
    if fk.paths == 0 {
        return Err(Error::InvalidArgument("paths must be positive".into()));
    }
    let steps = cfg.steps_checked()?;
    let tau = cfg.t;
    let side = 2.0 * cfg.radius * tau;
    let grid = Grid::new(cfg.dim, side, fk.cells)?;
    let moll = Mollifier::new(fk.delta, &grid)?;
    let v: Vec<f64> = moll.smooth_scenery(&grid, scenery, fk.r)?.into_iter().map(|x| fk.alpha * x).collect();
    let tol = default_tol(cfg.dim);
    let lambda = principal_eigenvalue(&v, &grid, tol)?.lambda;
    let lambda_free = principal_eigenvalue(&vec![0.0; grid.cells()], &grid, tol)?.lambda;
    let h = grid.h();
    let half = 0.5 * side;
    let dt = cfg.dt;
    // (survival indicator, exp ∫V) per path.
    let samples: Vec<(f64, f64)> = (0..fk.paths)
        .into_par_iter()
        .map(|p| {
            let mut w = Walker::new(cfg, p, dt);
            let mut integral = 0.0;
            for _ in 0..steps {
                let mut flat = 0;
                for a in 0..cfg.dim {
                    let i = (((w.pos[a] + half) / h).floor() as usize).min(grid.n - 1);
                    flat += i * grid.stride(a);
                }
                integral += v[flat] * dt;
                w.step();
                if w.sup_norm() >= half {
                    return (0.0, 0.0);
                }
            }
            (1.0, integral.exp())
        })
        .collect();
    let free: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let weighted: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let mc_free = Estimate::from_samples(&free);
    let mc = Estimate::from_samples(&weighted);
    let c_hat = mc_free.mean / (prefactor(tau, lambda_free, cfg.dim) * (-tau * lambda_free).exp());
    let s = v.iter().copied().fold(0.0f64, f64::max);
    let bound = c_hat * prefactor(tau, lambda + s, cfg.dim) * (-tau * lambda).exp();
    let overflow = !mc.mean.is_finite() || (mc.mean > 0.0 && mc.stderr > 0.5 * mc.mean);
    Ok(FkReport {
        lambda,
        lambda_free,
        c_hat,
        mc,
        mc_free,
        bound,
        holds: mc.mean - 2.0 * mc.stderr <= bound * (1.0 + slack),
        overflow,
    })
}
