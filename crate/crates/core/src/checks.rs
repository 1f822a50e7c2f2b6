//! Property suite run by `verify`: closed-form eigenvalues, duality gaps,
//! the mollification bound, scaling identities and localization.

use std::f64::consts::PI;
use std::time::Instant;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{sample_scenery, FieldLaw};
use crate::grid::{dirichlet_rate, entropy_i, mollifier_defect, pairing, Density, Grid, Mollifier, Profile};
use crate::ratefn::{dilation_minimum, duality_check, product_constant};
use crate::rng;
use crate::spectral::{default_tol, localization_gap, principal_eigenvalue};

/// Names accepted by [`run`]'s filter.
pub const CHECKS: [&str; 5] = ["eigen", "duality", "mollifier", "scaling", "localization"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Relative tolerance on `dπ²/2` for `d = 1` (`N = 256`) and `d = 2` (`N = 128`).
    pub eigen_tol: [f64; 2],
    pub duality_instances: usize,
    /// Accepted gap range `[-low, high]`.
    pub duality_low: f64,
    pub duality_high: f64,
    pub mollifier_instances: usize,
    /// Additive slack in units of `h`.
    pub mollifier_slack_h: f64,
    pub pairing_tol: f64,
    pub scaling_tol: f64,
    pub localization_instances: usize,
    /// Accepted spread `max/min` of `gap·A²` over `A ∈ {1, 2, 4}`.
    pub localization_factor: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            eigen_tol: [0.005, 0.01],
            duality_instances: 20,
            duality_low: 1e-6,
            duality_high: 1e-3,
            mollifier_instances: 100,
            mollifier_slack_h: 10.0,
            pairing_tol: 1e-12,
            scaling_tol: 1e-10,
            localization_instances: 50,
            localization_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

struct Draw(ChaCha8Rng);

impl Draw {
    fn new(seed: u64, stream: u64) -> Draw {
        Draw(rng::keyed(seed, stream))
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * rng::unit_f64(self.0.next_u64())
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Ground state of the free box against `dπ²/2`.
pub fn eigen(cfg: &VerifyConfig) -> CheckOutcome {
    timed("eigen", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (dim, n, tol) in [(1, 256, cfg.eigen_tol[0]), (2, 128, cfg.eigen_tol[1])] {
            let start = Instant::now();
            let g = Grid::new(dim, 1.0, n)?;
            let r = principal_eigenvalue(&vec![0.0; g.cells()], &g, default_tol(dim))?;
            let exact = dim as f64 * PI * PI / 2.0;
            let rel = (r.lambda - exact).abs() / exact;
            let secs = start.elapsed().as_secs_f64();
            ok &= rel <= tol && secs < 10.0;
            parts.push(format!("d={dim} N={n}: rel err {rel:.2e} (tol {tol:.1e}){}", if secs < 10.0 { "" } else { ", over 10 s" }));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// A smooth random probability density on a 1-d grid: a few Gaussian bumps.
fn random_density(g: &Grid, d: &mut Draw) -> Vec<f64> {
    let bumps = 1 + (d.0.next_u64() % 3) as usize;
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| (d.uniform(-0.3, 0.3) * g.side, d.uniform(0.05, 0.25) * g.side, d.uniform(0.2, 1.0)))
        .collect();
    let v: Vec<f64> = (0..g.cells())
        .map(|c| {
            let x = g.center(c)[0];
            params.iter().map(|(m, s, w)| w * (-(x - m) * (x - m) / (2.0 * s * s)).exp()).sum()
        })
        .collect();
    let mass: f64 = v.iter().sum::<f64>() * g.cell_volume();
    v.into_iter().map(|x| x / mass).collect()
}

/// Primal entropy problem against its dual on random smooth densities.
pub fn duality(cfg: &VerifyConfig) -> CheckOutcome {
    timed("duality", || {
        let g = Grid::new(1, 2.0, 64)?;
        let mut worst: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut bad = 0;
        for k in 0..cfg.duality_instances {
            let mut d = Draw::new(cfg.seed, 0xd0a1_0000 + k as u64);
            let law = if k % 2 == 0 { FieldLaw::rademacher() } else { FieldLaw::uniform() };
            let f = random_density(&g, &mut d);
            let y = d.uniform(0.02, 0.95);
            let r = duality_check(y, &f, &law, &g)?;
            worst = (worst.0.min(r.gap), worst.1.max(r.gap));
            if !(r.gap >= -cfg.duality_low && r.gap <= cfg.duality_high) {
                bad += 1;
            }
        }
        Ok((
            bad == 0,
            format!("{} instances, gap in [{:.2e}, {:.2e}], {bad} outside [-{:.0e}, {:.0e}]", cfg.duality_instances, worst.0, worst.1, cfg.duality_low, cfg.duality_high),
        ))
    })
}

/// `|⟨μ, ψ_δ*u - u⟩| ≤ (c₀δ²/ε₁)𝓛(μ) + 2ε₁ + slack·h` on random instances.
pub fn mollifier(cfg: &VerifyConfig) -> CheckOutcome {
    timed("mollifier", || {
        let g = Grid::new(1, 4.0, 128)?;
        let h = g.h();
        let mut bad = 0;
        let mut worst = f64::NEG_INFINITY;
        for k in 0..cfg.mollifier_instances {
            let mut d = Draw::new(cfg.seed, 0x3011_0000 + k as u64);
            let mu = Density::normalized(g, random_density(&g, &mut d))?;
            // Piecewise-constant profile on random blocks.
            let mut values = Vec::with_capacity(g.cells());
            while values.len() < g.cells() {
                let len = 1 + (d.0.next_u64() % 24) as usize;
                let level = d.uniform(-1.0, 1.0);
                values.extend(std::iter::repeat_n(level, len));
            }
            values.truncate(g.cells());
            let u = Profile::new(g, values)?;
            let m = Mollifier::new(d.uniform(2.0 * h, 1.0), &g)?;
            let eps1 = d.uniform(0.01, 1.0);
            let (lhs, rhs) = mollifier_defect(&mu, &u, &m, eps1)?;
            worst = worst.max(lhs - rhs);
            if lhs > rhs + cfg.mollifier_slack_h * h {
                bad += 1;
            }
        }
        Ok((bad == 0, format!("{} instances, max(lhs - rhs) = {worst:.3e}, {bad} beyond {}h", cfg.mollifier_instances, cfg.mollifier_slack_h)))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Contraction identities for pairing, rate and entropy, and the
/// product-form constant against a direct one-variable minimization.
pub fn scaling(cfg: &VerifyConfig) -> CheckOutcome {
    timed("scaling", || {
        let mut d = Draw::new(cfg.seed, 0x5ca1_0000);
        let law = FieldLaw::uniform();
        let mut worst_pair = 0.0f64;
        let mut worst_rate = 0.0f64;
        for dim in 1..=2 {
            let n = if dim == 1 { 64 } else { 24 };
            let g = Grid::new(dim, 2.0, n)?;
            let mu = Density::normalized(g, (0..g.cells()).map(|_| d.uniform(0.1, 1.0)).collect())?;
            let u = Profile::new(g, (0..g.cells()).map(|_| d.uniform(-0.9, 0.9)).collect())?;
            let (p0, l0, i0) = (pairing(&mu, &u)?, dirichlet_rate(&mu), entropy_i(&u, &law).to_f64());
            for factor in [0.5, 2.0, 3.0] {
                let (mu_a, u_a) = (mu.contracted(factor), u.contracted(factor));
                worst_pair = worst_pair.max((pairing(&mu_a, &u_a)? - p0).abs());
                worst_rate = worst_rate.max(rel(dirichlet_rate(&mu_a), factor * factor * l0));
                worst_rate = worst_rate.max(rel(entropy_i(&u_a, &law).to_f64(), factor.powi(-(dim as i32)) * i0));
            }
        }
        let mut worst_const = 0.0f64;
        for dim in 1..=3 {
            let (i, l) = (d.uniform(0.1, 2.0), d.uniform(0.1, 5.0));
            let df = dim as f64;
            let f = |t: f64| {
                let s = t.exp();
                s.powi(dim as i32) * i + l / (s * s)
            };
            let numeric = golden_min(f, -20.0, 20.0);
            let product = product_constant(dim) * i.powf(2.0 / (df + 2.0)) * l.powf(df / (df + 2.0));
            worst_const = worst_const.max(rel(numeric, product)).max(rel(dilation_minimum(i, l, dim), product));
        }
        let ok = worst_pair <= cfg.pairing_tol && worst_rate <= cfg.scaling_tol && worst_const <= cfg.scaling_tol;
        Ok((ok, format!("pairing drift {worst_pair:.1e}, rate/entropy rel err {worst_rate:.1e}, product constant rel err {worst_const:.1e}")))
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// `λ(V, Q(2A)) ≤ min_k λ(V, Q_k(A))` for mollified random sceneries, and
/// the spread of the mean `gap·A²` over `A ∈ {1, 2, 4}`.
pub fn localization(cfg: &VerifyConfig) -> CheckOutcome {
    timed("localization", || {
        let sides = [1.0, 2.0, 4.0];
        let mut violations = 0;
        let mut scaled = [0.0; 3];
        let law = FieldLaw::rademacher();
        for k in 0..cfg.localization_instances {
            let scenery = sample_scenery(&law, 1, 16, cfg.seed.wrapping_add(k as u64))?;
            for (j, &a) in sides.iter().enumerate() {
                let g = Grid::new(1, 2.0 * a, 64)?;
                let m = Mollifier::new(0.5, &g)?;
                let v = m.smooth_scenery(&g, &scenery, 1.0)?;
                let (big, min_sub) = localization_gap(&v, &g, a, default_tol(1))?;
                if big > min_sub + 1e-9 * (1.0 + min_sub.abs()) {
                    violations += 1;
                }
                scaled[j] += (min_sub - big) * a * a / cfg.localization_instances as f64;
            }
        }
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(*x), h.max(*x)));
        let spread = hi / lo;
        Ok((
            violations == 0 && spread <= cfg.localization_factor,
            format!("{violations} violations; mean gap·A² = {:.4} / {:.4} / {:.4}, spread {spread:.3}", scaled[0], scaled[1], scaled[2]),
        ))
    })
}

/// Runs the checks whose names contain `filter` (all when `None`).
pub fn run(cfg: &VerifyConfig, filter: Option<&str>) -> Vec<CheckOutcome> {
    let all: [(&str, fn(&VerifyConfig) -> CheckOutcome); 5] = [("eigen", eigen), ("duality", duality), ("mollifier", mollifier), ("scaling", scaling), ("localization", localization)];
    all.iter().filter(|(name, _)| filter.is_none_or(|f| name.contains(f))).map(|(_, check)| check(cfg)).collect()
}
