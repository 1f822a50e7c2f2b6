//! Quenched functionals under the entropy budget `I(u) < d`.
//!
//! Box solutions are turned into whole-space candidates through the
//! two-parameter family `(c u, μ)` dilated by `s = (I(cu)/b)^{1/d}`: the
//! pairing becomes `c⟨μ,u⟩`, the entropy sits exactly at the budget `b` and
//! the Dirichlet rate becomes `s²𝓛(μ)`. Every candidate is feasible, so the
//! estimates below are upper bounds on the whole-space infima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::legendre::{jp_combine, CurveMeta, RateCurve};
use super::{budget_u_step, bump_densities, fit_budget, mu_step, random_dyadic_profiles, Ctx, Settings};
use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::field::FieldLaw;
use crate::grid::{Density, Grid, Profile};

/// A feasible box pair, reduced to what the whole-space family needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub u: Vec<f64>,
    /// `𝓛(μ)` on the box.
    pub rate: f64,
    /// `⟨μ,u⟩`.
    pub pairing: f64,
}

/// Candidate pool shared by `l`, `J` and `𝓙₁`.
///
/// Each pair contributes the points `(c⟨μ,u⟩, (I(cu)/b)^{2/d} 𝓛(μ))` for
/// amplitudes `c` on a uniform grid, plus any point added explicitly.
#[derive(Debug, Clone)]
pub struct Pool {
    grid: Grid,
    law: FieldLaw,
    budget: f64,
    steps: usize,
    pairs: Vec<Pair>,
    points: Vec<(f64, f64)>,
}

impl Pool {
    pub fn new(grid: Grid, law: &FieldLaw, settings: &Settings) -> Pool {
        Pool {
            grid,
            law: law.clone(),
            budget: grid.dim as f64 - settings.eps_strict,
            steps: settings.scale_steps.max(1),
            pairs: Vec::new(),
            points: vec![(0.0, 0.0)],
        }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Whole-space cost of `(c u, μ)` with the entropy budget saturated by dilation.
    pub fn cost(&self, pair: &Pair, c: f64) -> Option<f64> {
        let mut total = 0.0;
        for &x in &pair.u {
            let v = c * x;
            if v.abs() > 1.0 {
                return None;
            }
            total += self.law.cramer(v).finite()?;
        }
        let entropy = total * self.grid.cell_volume();
        Some((entropy / self.budget).powf(2.0 / self.grid.dim as f64) * pair.rate)
    }

    pub fn add(&mut self, pair: Pair) {
        let umax = pair.u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if umax > 0.0 && pair.pairing != 0.0 {
            let k = self.steps as i64;
            let pts: Vec<(f64, f64)> = (-k..=k)
                .into_par_iter()
                .filter(|&j| j != 0)
                .filter_map(|j| {
                    let c = j as f64 / (k as f64 * umax);
                    self.cost(&pair, c).map(|a| (c * pair.pairing, a))
                })
                .collect();
            self.points.extend(pts);
        }
        self.pairs.push(pair);
    }

    pub fn add_point(&mut self, y: f64, value: f64) {
        self.points.push((y, value));
    }

    /// `l(α) ≈ min(0, min_i a_i - α b_i)`.
    pub fn l(&self, alpha: f64) -> f64 {
        self.points.iter().map(|&(b, a)| a - alpha * b).fold(0.0, f64::min)
    }

    fn argmin_b(&self, alpha: f64) -> f64 {
        let mut best = (0.0, 0.0);
        for &(b, a) in &self.points {
            let v = a - alpha * b;
            if v < best.0 || (v == best.0 && alpha * b > alpha * best.1) {
                best = (v, b);
            }
        }
        best.1
    }

    /// `𝓙₁(y)`: the cheapest member of the family with pairing exactly `y`.
    pub fn j1(&self, y: f64) -> Extended {
        if y == 0.0 {
            return Extended::ZERO;
        }
        self.pairs
            .par_iter()
            .filter(|p| p.pairing != 0.0)
            .filter_map(|p| self.cost(p, y / p.pairing))
            .min_by(|a, b| a.total_cmp(b))
            .map_or(Extended::PosInf, Extended::Finite)
    }

    /// `J(y) = sup_α {αy + l(α)}` by bisection on the sign of the
    /// superderivative `y - b*(α)` of this concave function.
    pub fn j(&self, y: f64) -> Result<Extended> {
        if y.is_nan() || y > self.law.ess_sup() || y < self.law.ess_inf() {
            return Ok(Extended::PosInf);
        }
        if y == 0.0 {
            return Ok(Extended::ZERO);
        }
        let dir = y.signum();
        let slope = |a: f64| y - self.argmin_b(a);
        let (mut lo, mut hi) = (0.0f64, dir);
        while slope(hi) * dir > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi.abs() > 1e9 {
                return Err(Error::GridTooNarrow { alpha: hi });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if slope(mid) * dir > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let f = |a: f64| a * y + self.l(a);
        Ok(Extended::Finite(f(lo).max(f(hi)).max(0.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchedResult {
    pub alpha: f64,
    /// Whole-space estimate of `l(α)`.
    pub value: f64,
    /// `λ(αu, Q(A))` for the best profile on the box.
    pub box_value: f64,
    pub entropy: f64,
    pub u: Profile,
    pub mu: Density,
    pub iterations: usize,
    pub pairs: Vec<Pair>,
}

struct QRun {
    best: (f64, Vec<f64>, Vec<f64>, f64),
    pairs: Vec<Pair>,
    iterations: usize,
}

fn quenched_run(ctx: &Ctx, alpha: f64, start: Vec<f64>) -> Result<QRun> {
    let budget = ctx.budget();
    let sign = alpha.signum();
    let mut u = start;
    let mut entropy = ctx.entropy(&u).unwrap_or(f64::INFINITY);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
    let mut pairs = Vec::new();
    let mut prev = f64::INFINITY;
    let mut guess: Option<Vec<f64>> = None;
    let mut iterations = 0;
    for _ in 0..ctx.settings.max_alternations {
        iterations += 1;
        let r = ctx.eigen(alpha, &u, guess.as_deref())?;
        let mu: Vec<f64> = r.eigenvector.iter().map(|f| f * f).collect();
        let obj = r.lambda;
        if obj > prev + 1e-8 * (1.0 + prev.abs()) {
            return Err(Error::NonMonotone { before: prev, after: obj });
        }
        pairs.push(Pair {
            u: u.clone(),
            rate: ctx.rate(&r.eigenvector),
            pairing: ctx.pair(&mu, &u),
        });
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, u.clone(), mu.clone(), entropy));
        }
        if prev - obj < ctx.settings.obj_tol * (1.0 + obj.abs()) {
            break;
        }
        prev = obj;
        guess = Some(r.eigenvector);
        let (u_new, i_new) = budget_u_step(ctx, &mu, sign, budget);
        u = u_new;
        entropy = i_new;
    }
    Ok(QRun {
        best: best.expect("at least one iteration"),
        pairs,
        iterations,
    })
}

fn budget_starts(ctx: &Ctx, sign: f64) -> Vec<Vec<f64>> {
    let budget = ctx.budget();
    let mut out: Vec<Vec<f64>> = bump_densities(&ctx.grid).iter().map(|mu| budget_u_step(ctx, mu, sign, budget).0).collect();
    for u in random_dyadic_profiles(ctx, ctx.settings.random_starts) {
        let aligned: Vec<f64> = u.iter().map(|x| if x * sign >= 0.0 { *x } else { 0.0 }).collect();
        if let Some(v) = fit_budget(ctx, &aligned, budget) {
            if v.iter().any(|x| *x != 0.0) {
                out.push(v);
            }
        }
    }
    out
}

/// `l(α) = inf{λ(αu, ℝ^d) : I(u) < d}`, from box alternations followed by
/// the whole-space family of the module docs.
pub fn quenched_l(alpha: f64, law: &FieldLaw, grid: &Grid, settings: &Settings) -> Result<QuenchedResult> {
    let ctx = Ctx::new(*grid, law, settings);
    if alpha == 0.0 || !alpha.is_finite() {
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} must be finite")));
        }
        let zero = vec![0.0; grid.cells()];
        let r = ctx.eigen(0.0, &zero, None)?;
        return Ok(QuenchedResult {
            alpha,
            value: 0.0,
            box_value: r.lambda,
            entropy: 0.0,
            u: Profile::new(*grid, zero)?,
            mu: Density::from_eigenvector(*grid, &r.eigenvector)?,
            iterations: 0,
            pairs: Vec::new(),
        });
    }
    let runs: Vec<QRun> = budget_starts(&ctx, alpha.signum())
        .into_par_iter()
        .map(|u0| quenched_run(&ctx, alpha, u0))
        .collect::<Result<_>>()?;
    let mut pool = Pool::new(*grid, law, settings);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut pairs = Vec::new();
    for r in runs {
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.best.0 < b.0) {
            best = Some(r.best);
        }
        pairs.extend(r.pairs);
    }
    for p in &pairs {
        pool.add(p.clone());
    }
    let (box_value, u, mu, entropy) = best.expect("at least one start");
    Ok(QuenchedResult {
        alpha,
        value: pool.l(alpha).min(box_value).min(0.0),
        box_value,
        entropy,
        u: Profile::new(*grid, u.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())?,
        mu: Density::normalized(*grid, mu)?,
        iterations,
        pairs,
    })
}

/// `l(α)` on boxes `A, 2A, 4A, …` at fixed spacing: `(side, value, box value)`.
pub fn quenched_l_convergence(alpha: f64, law: &FieldLaw, grid: &Grid, settings: &Settings, doublings: usize) -> Result<Vec<(f64, f64, f64)>> {
    (0..=doublings)
        .map(|k| {
            let g = Grid::new(grid.dim, grid.side * (1 << k) as f64, grid.n << k)?;
            let r = quenched_l(alpha, law, &g, settings)?;
            Ok((g.side, r.value, r.box_value))
        })
        .collect()
}

/// `J(y) = sup_α {αy + l(α)}` over the candidate pool.
pub fn quenched_j(y: f64, pool: &Pool) -> Result<Extended> {
    pool.j(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct J1Result {
    pub y: f64,
    /// Whole-space estimate.
    pub value: Extended,
    /// `𝓛(μ)` of the best pair on the box.
    pub box_value: Extended,
    pub u: Option<Profile>,
    pub mu: Option<Density>,
    pub iterations: usize,
    pub pairs: Vec<Pair>,
}

fn j1_run(ctx: &Ctx, y: f64, start: Vec<f64>) -> Result<Option<QRun>> {
    let budget = ctx.budget();
    let mut u = start;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
    let mut pairs = Vec::new();
    let mut prev = f64::INFINITY;
    let mut guess: Option<Vec<f64>> = None;
    let mut iterations = 0;
    for _ in 0..ctx.settings.max_alternations {
        iterations += 1;
        let Some(ms) = mu_step(ctx, &u, y, true, guess.as_deref())? else {
            break;
        };
        let obj = ms.rate;
        pairs.push(Pair {
            u: u.clone(),
            rate: ms.rate,
            pairing: ms.pairing,
        });
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, u.clone(), ms.mu.clone(), ms.pairing));
        }
        if prev - obj < ctx.settings.obj_tol * (1.0 + obj.abs()) {
            break;
        }
        prev = obj;
        let (u_new, _) = budget_u_step(ctx, &ms.mu, 1.0, budget);
        pairs.push(Pair {
            pairing: ctx.pair(&ms.mu, &u_new),
            u: u_new.clone(),
            rate: ms.rate,
        });
        u = u_new;
        guess = Some(ms.phi);
    }
    Ok(best.map(|best| QRun { best, pairs, iterations }))
}

/// `𝓙₁(y) = inf{𝓛(μ) : ⟨μ,u⟩ = y, I(u) < d}`.
pub fn j1_rate(y: f64, law: &FieldLaw, grid: &Grid, settings: &Settings) -> Result<J1Result> {
    let empty = |value: Extended, box_value: Extended| J1Result {
        y,
        value,
        box_value,
        u: None,
        mu: None,
        iterations: 0,
        pairs: Vec::new(),
    };
    if y.is_nan() || y > law.ess_sup() || y < law.ess_inf() {
        return Ok(empty(Extended::PosInf, Extended::PosInf));
    }
    if y == law.ess_sup() || y == law.ess_inf() {
        return Err(Error::InvalidArgument(format!("y = {y} is an endpoint of the support; pass a value strictly inside")));
    }
    if y == 0.0 {
        let ctx = Ctx::new(*grid, law, settings);
        let r = ctx.eigen(0.0, &vec![0.0; grid.cells()], None)?;
        return Ok(empty(Extended::ZERO, Extended::Finite(ctx.rate(&r.eigenvector))));
    }
    if y < 0.0 {
        let mut r = j1_rate(-y, &law.reflected(), grid, settings)?;
        let flip = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = -*x);
        r.y = y;
        if let Some(u) = r.u.as_mut() {
            flip(&mut u.values);
        }
        for p in &mut r.pairs {
            flip(&mut p.u);
            p.pairing = -p.pairing;
        }
        return Ok(r);
    }
    let ctx = Ctx::new(*grid, law, settings);
    let starts: Vec<Vec<f64>> = budget_starts(&ctx, 1.0).into_iter().filter(|u| u.iter().any(|x| *x > y)).collect();
    let runs: Vec<Option<QRun>> = starts.into_par_iter().map(|u0| j1_run(&ctx, y, u0)).collect::<Result<_>>()?;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut pairs = Vec::new();
    for r in runs.into_iter().flatten() {
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.best.0 < b.0) {
            best = Some(r.best);
        }
        pairs.extend(r.pairs);
    }
    let Some((box_value, u, mu, _)) = best else {
        return Ok(empty(Extended::PosInf, Extended::PosInf));
    };
    let mut pool = Pool::new(*grid, law, settings);
    pool.pairs = pairs.clone();
    Ok(J1Result {
        y,
        value: pool.j1(y).min(Extended::Finite(box_value)),
        box_value: Extended::Finite(box_value),
        u: Some(Profile::new(*grid, u.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())?),
        mu: Some(Density::normalized(*grid, mu)?),
        iterations,
        pairs,
    })
}

/// `l` on an `α`-grid with its transform `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendrePair {
    pub alphas: Vec<f64>,
    pub l_values: Vec<f64>,
    pub transform: RateCurve,
}

/// `l`, `J` and `𝓙₁` computed over one shared candidate pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchedStudy {
    pub legendre: LegendrePair,
    pub j1: RateCurve,
    /// Fixed point of [`jp_combine`] applied to `𝓙₁`.
    pub j1_envelope: Vec<Extended>,
    pub pool_pairs: usize,
    pub pool_points: usize,
}

pub fn quenched_study(law: &FieldLaw, grid: &Grid, ys: &[f64], alphas: &[f64], settings: &Settings) -> Result<QuenchedStudy> {
    let l_runs: Vec<QuenchedResult> = alphas.par_iter().map(|&a| quenched_l(a, law, grid, settings)).collect::<Result<_>>()?;
    let j1_runs: Vec<J1Result> = ys.par_iter().map(|&y| j1_rate(y, law, grid, settings)).collect::<Result<_>>()?;
    let mut pool = Pool::new(*grid, law, settings);
    for p in l_runs.iter().flat_map(|r| r.pairs.iter()).chain(j1_runs.iter().flat_map(|r| r.pairs.iter())) {
        pool.add(p.clone());
    }
    let j1: Vec<Extended> = ys.iter().zip(&j1_runs).map(|(&y, r)| pool.j1(y).min(r.value)).collect();
    for (&y, v) in ys.iter().zip(&j1) {
        if let Extended::Finite(v) = v {
            pool.add_point(y, *v);
        }
    }
    let l_values: Vec<f64> = alphas.iter().map(|&a| pool.l(a)).collect();
    let j: Vec<Extended> = ys.iter().map(|&y| pool.j(y)).collect::<Result<_>>()?;
    let mut envelope = j1.clone();
    loop {
        let next = jp_combine(ys, &envelope);
        if next == envelope {
            break;
        }
        envelope = next;
    }
    let meta = |kind: &str| CurveMeta::new(kind, law, grid, settings);
    Ok(QuenchedStudy {
        legendre: LegendrePair {
            alphas: alphas.to_vec(),
            l_values,
            transform: RateCurve {
                ys: ys.to_vec(),
                values: j,
                feasibility: vec![0.0; ys.len()],
                meta: meta("quenched_j"),
            },
        },
        j1: RateCurve {
            ys: ys.to_vec(),
            values: j1,
            feasibility: vec![0.0; ys.len()],
            meta: meta("j1"),
        },
        j1_envelope: envelope,
        pool_pairs: pool.pairs.len(),
        pool_points: pool.points.len(),
    })
}
