//! Variational rate functionals on boxes, with whole-space estimates
//! obtained by dilating the box solutions.
//!
//! All solvers alternate between two exact block minimizations:
//!
//! * for fixed `u`, `inf{𝓛(μ) : ⟨μ,u⟩ = y} = sup_α {αy + λ(αu)}`, attained
//!   at the ground-state density of `αu` for the root of `⟨φ²_α, u⟩ = y`;
//! * for fixed `μ`, the optimal profile is pointwise `u = Λ'(s μ)` with a
//!   scalar `s` fixed by the active constraint.

mod annealed;
mod dual;
mod legendre;
mod quenched;
mod speed;

pub use annealed::{annealed_curve, annealed_rate, annealed_rate_product_form, dilation_minimum, product_constant, AnnealedResult};
pub use dual::{dual_upper, duality_check, DualResult, DualityReport};
pub use legendre::{jp_combine, CurveMeta, RateCurve};
pub use quenched::{j1_rate, quenched_j, quenched_l, quenched_l_convergence, quenched_study, J1Result, LegendrePair, Pair, Pool, QuenchedResult, QuenchedStudy};
pub use speed::r_of_t;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldLaw;
use crate::grid::{dirichlet_energy, weighted_sum, Grid};
use crate::rng;
use crate::spectral::{default_tol, principal_eigenvalue_from, EigenResult};

/// Solver settings shared by the rate functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Accepted `|⟨μ,u⟩ - y|` for a feasible pair.
    pub feas_tol: f64,
    /// Stop alternating when the objective drops by less than this (relative).
    pub obj_tol: f64,
    pub max_alternations: usize,
    /// Number of random dyadic starting profiles.
    pub random_starts: usize,
    pub seed: u64,
    /// Eigen solver tolerance; the dimension default when absent.
    pub eig_tol: Option<f64>,
    /// Margin turning the strict entropy budget `I(u) < d` into `I(u) ≤ d - ε`.
    pub eps_strict: f64,
    /// Amplitude samples per sign when rescaling profiles for whole-space estimates.
    pub scale_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            feas_tol: 1e-4,
            obj_tol: 1e-6,
            max_alternations: 200,
            random_starts: 3,
            seed: 0,
            eig_tol: None,
            eps_strict: 1e-6,
            scale_steps: 200,
        }
    }
}

pub(crate) struct Ctx<'a> {
    pub grid: Grid,
    pub law: &'a FieldLaw,
    pub settings: &'a Settings,
    pub eig_tol: f64,
    pub vol: f64,
}

impl<'a> Ctx<'a> {
    pub fn new(grid: Grid, law: &'a FieldLaw, settings: &'a Settings) -> Ctx<'a> {
        Ctx {
            grid,
            law,
            settings,
            eig_tol: settings.eig_tol.unwrap_or(default_tol(grid.dim)),
            vol: grid.cell_volume(),
        }
    }

    pub fn budget(&self) -> f64 {
        self.grid.dim as f64 - self.settings.eps_strict
    }

    pub fn eigen(&self, alpha: f64, u: &[f64], guess: Option<&[f64]>) -> Result<EigenResult> {
        let v: Vec<f64> = u.iter().map(|x| alpha * x).collect();
        principal_eigenvalue_from(&v, &self.grid, self.eig_tol, guess)
    }

    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_sum(a, b) * self.vol
    }

    pub fn rate(&self, phi: &[f64]) -> f64 {
        0.5 * dirichlet_energy(&self.grid, phi)
    }

    /// `Σ H(Λ'(s μ_c)) h^d` for the tilted profile `u = Λ'(s μ)`.
    pub fn tilt_entropy(&self, s: f64, mu: &[f64]) -> f64 {
        mu.iter().map(|m| self.law.cramer_at_tilt(s * m)).sum::<f64>() * self.vol
    }

    /// `Σ H(u_c) h^d`, infinite outside `[m, M]`.
    pub fn entropy(&self, u: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for &x in u {
            total += self.law.cramer(x).finite()?;
        }
        Some(total * self.vol)
    }
}

/// Ground-state density and cost after the `μ`-step.
#[derive(Debug, Clone)]
pub(crate) struct MuStep {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub pairing: f64,
    pub rate: f64,
}

/// `inf{𝓛(μ) : ⟨μ,u⟩ = y}` through the root of `α ↦ ⟨φ²_α, u⟩ - y`.
///
/// With `nonneg_alpha`, the constraint is `⟨μ,u⟩ ≥ y`. Returns `None` when
/// `y` is out of reach for this `u`.
pub(crate) fn mu_step(ctx: &Ctx, u: &[f64], y: f64, nonneg_alpha: bool, guess: Option<&[f64]>) -> Result<Option<MuStep>> {
    let root_tol = 0.01 * ctx.settings.feas_tol;
    let umax = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut warm: Option<Vec<f64>> = guess.map(|g| g.to_vec());
    let mut eval = |alpha: f64| -> Result<(EigenResult, f64)> {
        let r = ctx.eigen(alpha, u, warm.as_deref())?;
        let mu: Vec<f64> = r.eigenvector.iter().map(|f| f * f).collect();
        let p = ctx.pair(&mu, u);
        warm = Some(r.eigenvector.clone());
        Ok((r, p))
    };
    let build = |r: EigenResult, p: f64| -> MuStep {
        let mu = r.eigenvector.iter().map(|f| f * f).collect();
        MuStep {
            rate: ctx.rate(&r.eigenvector),
            phi: r.eigenvector,
            mu,
            pairing: p,
        }
    };
    let (r0, p0) = eval(0.0)?;
    if (p0 - y).abs() <= root_tol || (nonneg_alpha && p0 >= y) {
        return Ok(Some(build(r0, p0)));
    }
    let dir = if p0 < y { 1.0 } else { -1.0 };
    if (dir > 0.0 && y >= umax) || (dir < 0.0 && y <= umin) {
        return Ok(None);
    }
    // Bracket the root, α ordered so that g(lo) < 0 < g(hi) with g = P - y.
    let (mut a_in, mut g_in) = (0.0, p0 - y);
    let mut a_out = dir;
    let (mut r_out, mut p_out) = eval(a_out)?;
    while (p_out - y) * dir < 0.0 {
        if (p_out - y).abs() <= root_tol {
            return Ok(Some(build(r_out, p_out)));
        }
        a_in = a_out;
        g_in = p_out - y;
        a_out *= 2.0;
        if a_out.abs() > 1e7 {
            return Ok(None);
        }
        let next = eval(a_out)?;
        r_out = next.0;
        p_out = next.1;
    }
    let (mut lo, mut glo, mut hi, mut ghi) = if dir > 0.0 { (a_in, g_in, a_out, p_out - y) } else { (a_out, p_out - y, a_in, g_in) };
    let mut best = (a_out, r_out, p_out);
    let mut side = 0i8;
    for _ in 0..200 {
        if (best.2 - y).abs() <= root_tol {
            break;
        }
        let mut a = (lo * ghi - hi * glo) / (ghi - glo);
        if !(a > lo && a < hi) {
            a = 0.5 * (lo + hi);
        }
        let (r, p) = eval(a)?;
        let g = p - y;
        if g.abs() < (best.2 - y).abs() {
            best = (a, r, p);
        }
        // Illinois: halve the stale end when the same side repeats.
        if g < 0.0 {
            lo = a;
            glo = g;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = a;
            ghi = g;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let (_, r, p) = best;
    if (p - y).abs() > ctx.settings.feas_tol {
        return Err(Error::Infeasible { target: y, achieved: p });
    }
    Ok(Some(build(r, p)))
}

/// `u = Λ'(aμ)` with `⟨μ,u⟩ = y`; the least-entropy profile for fixed `μ`.
/// Returns the profile, its entropy and the multiplier.
pub(crate) fn pairing_u_step(ctx: &Ctx, mu: &[f64], y: f64) -> Option<(Vec<f64>, f64, f64)> {
    let law = ctx.law;
    if y >= law.ess_sup() || y <= law.ess_inf() {
        return None;
    }
    let g = |a: f64| mu.iter().map(|m| m * law.d_log_mgf(a * m)).sum::<f64>() * ctx.vol - y;
    let dg = |a: f64| mu.iter().map(|m| m * m * law.d2_log_mgf(a * m)).sum::<f64>() * ctx.vol;
    let a = if y == 0.0 {
        0.0
    } else {
        let dir = y.signum();
        let (mut lo, mut hi) = (0.0f64, dir);
        while g(hi) * dir < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi.abs() > 1e12 {
                return None;
            }
        }
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let mut a = 0.5 * (lo + hi);
        for _ in 0..300 {
            let v = g(a);
            if v.abs() <= 1e-14 {
                break;
            }
            if v < 0.0 {
                lo = a;
            } else {
                hi = a;
            }
            let d = dg(a);
            let newton = a - v / d;
            a = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        a
    };
    let u: Vec<f64> = mu.iter().map(|m| law.d_log_mgf(a * m)).collect();
    Some((u, ctx.tilt_entropy(a, mu), a))
}

/// `u = Λ'(σ t μ)` with `t ≥ 0` chosen so that `I(u) = budget`; maximizes
/// `σ⟨μ,u⟩` under the entropy budget. Returns the profile and its entropy.
pub(crate) fn budget_u_step(ctx: &Ctx, mu: &[f64], sign: f64, budget: f64) -> (Vec<f64>, f64) {
    let law = ctx.law;
    let edge = if sign > 0.0 { law.ess_sup() } else { law.ess_inf() };
    let support: f64 = mu.iter().filter(|m| **m > 0.0).count() as f64 * ctx.vol;
    if let Some(h) = law.cramer(edge).finite() {
        if h * support <= budget {
            let u = mu.iter().map(|m| if *m > 0.0 { edge } else { 0.0 }).collect();
            return (u, h * support);
        }
    }
    let ent = |t: f64| ctx.tilt_entropy(sign * t, mu);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ent(hi) <= budget {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if mid <= lo || mid >= hi {
            break;
        }
        if ent(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let u = mu.iter().map(|m| law.d_log_mgf(sign * lo * m)).collect();
    (u, ent(lo))
}

/// Ground-state densities of centered sub-boxes of side `A`, `A/2`, `A/4`,
/// `A/8` (those spanning at least four cells), in closed form.
pub(crate) fn bump_densities(grid: &Grid) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut w = grid.side;
    while w >= 4.0 * grid.h() - 1e-12 && out.len() < 4 {
        let vals: Vec<f64> = (0..grid.cells())
            .map(|c| {
                let x = grid.center(c);
                (0..grid.dim)
                    .map(|a| {
                        if x[a].abs() < 0.5 * w {
                            (std::f64::consts::PI * x[a] / w).cos().powi(2)
                        } else {
                            0.0
                        }
                    })
                    .product::<f64>()
            })
            .collect();
        let total: f64 = vals.iter().sum::<f64>() * grid.cell_volume();
        out.push(vals.into_iter().map(|v| v / total).collect());
        w *= 0.5;
    }
    out
}

/// Random profiles with values on the dyadic levels `k/4` inside `[m, M]`.
pub(crate) fn random_dyadic_profiles(ctx: &Ctx, count: usize) -> Vec<Vec<f64>> {
    let lo = (4.0 * ctx.law.ess_inf()).ceil() as i64;
    let hi = (4.0 * ctx.law.ess_sup()).floor() as i64;
    let levels = (hi - lo + 1) as u64;
    (0..count)
        .map(|k| {
            let mut g = rng::keyed(ctx.settings.seed, 0x5eed_0000 + k as u64);
            (0..ctx.grid.cells()).map(|_| (lo + (g.next_u64() % levels) as i64) as f64 / 4.0).collect()
        })
        .collect()
}

/// Shrinks `u` towards 0 until its entropy fits the budget.
pub(crate) fn fit_budget(ctx: &Ctx, u: &[f64], budget: f64) -> Option<Vec<f64>> {
    let ent = |c: f64| ctx.entropy(&u.iter().map(|x| c * x).collect::<Vec<_>>());
    if ent(1.0).is_some_and(|i| i <= budget) {
        return Some(u.to_vec());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ent(mid).is_some_and(|i| i <= budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo > 0.0).then(|| u.iter().map(|x| lo * x).collect())
}
