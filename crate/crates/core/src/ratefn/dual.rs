use serde::{Deserialize, Serialize};

use super::{pairing_u_step, Ctx, Settings};
use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::field::FieldLaw;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    pub value: Extended,
    /// Maximizing multiplier (0 when the supremum sits at `a → 0`).
    pub a: f64,
    /// Set when the ascent was unbounded or stopped at the cap.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub primal: Extended,
    pub dual: Extended,
    /// `primal - dual`; 0 when both are infinite.
    pub gap: f64,
}

const A_CAP: f64 = 1e12;

fn check(f: &[f64], grid: &Grid) -> Result<f64> {
    if f.len() != grid.cells() {
        return Err(Error::GridMismatch(format!("{} values on a grid of {} cells", f.len(), grid.cells())));
    }
    if f.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("f must be nonnegative and finite".into()));
    }
    Ok(f.iter().sum::<f64>() * grid.cell_volume())
}

// Σ_{f > 0} H(M) h^d: the limit of both problems at the saturation level.
fn saturation_cost(law: &FieldLaw, f: &[f64], grid: &Grid) -> Extended {
    let support = f.iter().filter(|x| **x > 0.0).count() as f64 * grid.cell_volume();
    law.cramer(law.ess_sup()).scale(support)
}

/// `sup_{a > 0} {a y - Σ Λ(a f_c) h^d}` by golden-section search in `log a`.
pub fn dual_upper(y: f64, f: &[f64], law: &FieldLaw, grid: &Grid) -> Result<DualResult> {
    let mass = check(f, grid)?;
    let vol = grid.cell_volume();
    if y <= 0.0 {
        return Ok(DualResult {
            value: Extended::ZERO,
            a: 0.0,
            capped: false,
        });
    }
    let top = law.ess_sup() * mass;
    if y > top {
        return Ok(DualResult {
            value: Extended::PosInf,
            a: f64::INFINITY,
            capped: true,
        });
    }
    if y == top {
        return Ok(DualResult {
            value: saturation_cost(law, f, grid),
            a: f64::INFINITY,
            capped: true,
        });
    }
    let objective = |a: f64| a * y - f.iter().map(|x| law.log_mgf(a * x)).sum::<f64>() * vol;
    let slope = |a: f64| y - f.iter().map(|x| x * law.d_log_mgf(a * x)).sum::<f64>() * vol;
    let mut hi = 1.0;
    while slope(hi) > 0.0 {
        hi *= 2.0;
        if hi > A_CAP {
            return Ok(DualResult {
                value: Extended::Finite(objective(A_CAP)),
                a: A_CAP,
                capped: true,
            });
        }
    }
    let mut lo = 0.5 * hi;
    while slope(lo) < 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    let (mut t0, mut t1) = (lo.ln(), hi.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = t1 - g * (t1 - t0);
    let mut x2 = t0 + g * (t1 - t0);
    let (mut f1, mut f2) = (objective(x1.exp()), objective(x2.exp()));
    for _ in 0..200 {
        if t1 - t0 < 1e-13 {
            break;
        }
        if f1 < f2 {
            t0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = t0 + g * (t1 - t0);
            f2 = objective(x2.exp());
        } else {
            t1 = x2;
            x2 = x1;
            f2 = f1;
            x1 = t1 - g * (t1 - t0);
            f1 = objective(x1.exp());
        }
    }
    let (a, v) = if f1 > f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    Ok(DualResult {
        value: Extended::Finite(v.max(0.0)),
        a,
        capped: false,
    })
}

/// Primal `inf{I(u) : ⟨f,u⟩ ≥ y}` against [`dual_upper`].
///
/// The primal minimizer is `u = Λ'(a f)` with `a` fixed by `⟨f,u⟩ = y`; its
/// entropy is evaluated cell by cell through `H`, independently of the dual
/// objective.
pub fn duality_check(y: f64, f: &[f64], law: &FieldLaw, grid: &Grid) -> Result<DualityReport> {
    let mass = check(f, grid)?;
    let dual = dual_upper(y, f, law, grid)?.value;
    let top = law.ess_sup() * mass;
    let primal = if y <= 0.0 {
        Extended::ZERO
    } else if y > top {
        Extended::PosInf
    } else if y == top {
        saturation_cost(law, f, grid)
    } else {
        let settings = Settings::default();
        let ctx = Ctx::new(*grid, law, &settings);
        let (u, _, _) = pairing_u_step(&ctx, f, y).ok_or(Error::Infeasible { target: y, achieved: top })?;
        let achieved = ctx.pair(f, &u);
        if achieved < y - 1e-10 {
            return Err(Error::Infeasible { target: y, achieved });
        }
        ctx.entropy(&u).map_or(Extended::PosInf, Extended::Finite)
    };
    let gap = match (primal, dual) {
        (Extended::Finite(p), Extended::Finite(d)) => p - d,
        (Extended::PosInf, Extended::PosInf) => 0.0,
        (Extended::PosInf, _) => f64::INFINITY,
        (_, Extended::PosInf) => f64::NEG_INFINITY,
    };
    Ok(DualityReport { primal, dual, gap })
}
