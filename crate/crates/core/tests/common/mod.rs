#![allow(dead_code)]

use brownian_scenery::field::FieldLaw;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

/// Dense `-½Δ - V` on a 1-d cell grid, wall Dirichlet through a reflected ghost.
pub fn operator_1d(h: f64, v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    let k = 0.5 / (h * h);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let walls = (i == 0) as usize + (i == n - 1) as usize;
            (2 + walls) as f64 * k - v[i]
        } else if i.abs_diff(j) == 1 {
            -k
        } else {
            0.0
        }
    })
}

pub fn lowest_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

/// All profiles with values on `levels`, as base-`levels.len()` digits.
pub fn profiles(cells: usize, levels: &[f64]) -> impl ParallelIterator<Item = Vec<f64>> + '_ {
    let b = levels.len();
    (0..b.pow(cells as u32)).into_par_iter().map(move |mut code| {
        (0..cells)
            .map(|_| {
                let l = levels[code % b];
                code /= b;
                l
            })
            .collect()
    })
}

/// Entropy `Σ H(u_c) w` with `H` from a direct scan of `αy - Λ(α)`.
pub fn entropy(law: &FieldLaw, u: &[f64], w: f64) -> f64 {
    u.iter().map(|&x| legendre_scan(law, x)).sum::<f64>() * w
}

fn legendre_scan(law: &FieldLaw, y: f64) -> f64 {
    if y.abs() >= 1.0 {
        // Atom at ±1 with mass p: H = -ln p.
        return if y.abs() > 1.0 { f64::INFINITY } else { legendre_limit(law, y) };
    }
    golden_max(|a| a * y - law.log_mgf(a), -60.0, 60.0)
}

fn legendre_limit(law: &FieldLaw, y: f64) -> f64 {
    // sup_α {αy - Λ(α)} is approached as α → ±∞.
    let a = 200.0 * y.signum();
    a * y - law.log_mgf(a)
}

/// Maximizer value of a concave function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Levels `k/4` in `[0, 1]`.
pub const LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// `min_u {I(u) + sup_α (αy + λ(αu))}` over dyadic profiles on `n` cells of
/// width `h`, visiting profiles by increasing entropy and stopping once
/// `I(u) + λ(0)` cannot beat the best value.
pub fn annealed_brute_force(law: &FieldLaw, y: f64, h: f64, n: usize) -> f64 {
    let free = lowest_eigenvalue(operator_1d(h, &vec![0.0; n]));
    let mut cands: Vec<(f64, Vec<f64>)> = profiles(n, &LEVELS)
        .filter(|u| u.iter().any(|x| *x > y))
        .map(|u| (entropy(law, &u, h), u))
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for chunk in cands.chunks(4096) {
        if chunk[0].0 + free >= best {
            break;
        }
        let b = chunk
            .par_iter()
            .map(|(i, u)| {
                let dual = |a: f64| a * y + lowest_eigenvalue(operator_1d(h, &u.iter().map(|x| a * x).collect::<Vec<_>>()));
                i + golden_max(dual, -200.0, 200.0)
            })
            .reduce(|| f64::INFINITY, f64::min);
        best = best.min(b);
    }
    best
}

/// `min λ(αu)` over dyadic profiles on `coarse` cells of a box of side `side`
/// with `I(u) ≤ budget`, each profile eigen-solved after upsampling to `fine`
/// cells. For `α > 0`, `λ(αu)` decreases in `u`, so only profiles that cannot
/// be raised by one level within budget are solved.
pub fn quenched_brute_force(law: &FieldLaw, alpha: f64, side: f64, coarse: usize, fine: usize, budget: f64) -> f64 {
    let w = side / coarse as f64;
    let h_single: Vec<f64> = LEVELS.iter().map(|&l| entropy(law, &[l], w)).collect();
    let level_of = |x: f64| LEVELS.iter().position(|l| *l == x).expect("dyadic level");
    profiles(coarse, &LEVELS)
        .filter(|u| {
            let i: f64 = u.iter().map(|x| h_single[level_of(*x)]).sum();
            i <= budget
                && (0..coarse).all(|c| {
                    let k = level_of(u[c]);
                    k + 1 == LEVELS.len() || i - h_single[k] + h_single[k + 1] > budget
                })
        })
        .map(|u| {
            let v: Vec<f64> = (0..fine).map(|c| alpha * u[c * coarse / fine]).collect();
            lowest_eigenvalue(operator_1d(side / fine as f64, &v))
        })
        .reduce(|| f64::INFINITY, f64::min)
}
