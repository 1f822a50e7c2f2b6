//! Principal Dirichlet eigenpair of `-½Δ - V` on a grid.
//!
//! In one dimension the operator is tridiagonal: the eigenvalue comes from
//! Sturm-count bisection and the eigenvector from one shifted inverse
//! iteration. In two and three dimensions we run shift-and-invert power
//! iteration with conjugate-gradient inner solves; the shift sits below the
//! lower bound `λ(0) - max V`, so the shifted operator stays positive
//! definite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, weighted_sum, Grid};

/// Largest number of unknowns accepted by the solver.
pub const MAX_UNKNOWNS: usize = 1 << 22;

const MAX_OUTER: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Ground state with `Σ f² h^d = 1`, entrywise nonnegative.
    pub eigenvector: Vec<f64>,
    /// `‖(Op - λ) f‖` in the grid `L²` norm.
    pub residual: f64,
    pub iterations: usize,
}

/// Default solver tolerance for a dimension.
pub fn default_tol(dim: usize) -> f64 {
    if dim == 1 {
        1e-8
    } else {
        1e-6
    }
}

/// `out = (-½Δ - V) f` with the wall Dirichlet condition.
pub fn apply(grid: &Grid, v: &[f64], f: &[f64], out: &mut [f64]) {
    let n = grid.n;
    let h = grid.h();
    let k = 0.5 / (h * h);
    for (c, o) in out.iter_mut().enumerate() {
        *o = -v[c] * f[c];
    }
    for axis in 0..grid.dim {
        let s = grid.stride(axis);
        for c in 0..f.len() {
            let i = (c / s) % n;
            let left = if i > 0 { f[c - s] } else { -f[c] };
            let right = if i + 1 < n { f[c + s] } else { -f[c] };
            out[c] += k * (2.0 * f[c] - left - right);
        }
    }
}

fn norm(grid: &Grid, f: &[f64]) -> f64 {
    (weighted_sum(f, f) * grid.cell_volume()).sqrt()
}

fn check(grid: &Grid, v: &[f64]) -> Result<()> {
    if v.len() != grid.cells() {
        return Err(Error::GridMismatch(format!("potential has {} values, grid has {} cells", v.len(), grid.cells())));
    }
    if grid.cells() > MAX_UNKNOWNS {
        return Err(Error::Capacity {
            requested: grid.cells(),
            budget: MAX_UNKNOWNS,
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("potential must be finite".into()));
    }
    Ok(())
}

/// Smallest eigenvalue of `-½Δ - V` and its nonnegative eigenvector.
pub fn principal_eigenvalue(v: &[f64], grid: &Grid, tol: f64) -> Result<EigenResult> {
    principal_eigenvalue_from(v, grid, tol, None)
}

/// As [`principal_eigenvalue`], starting the iteration from `guess` when
/// the solver is iterative.
pub fn principal_eigenvalue_from(v: &[f64], grid: &Grid, tol: f64, guess: Option<&[f64]>) -> Result<EigenResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    check(grid, v)?;
    if grid.dim == 1 {
        tridiagonal(v, grid, tol)
    } else {
        shift_invert(v, grid, tol, guess)
    }
}

fn finish(grid: &Grid, v: &[f64], mut f: Vec<f64>, lambda: f64, iterations: usize) -> EigenResult {
    if f.iter().sum::<f64>() < 0.0 {
        f.iter_mut().for_each(|x| *x = -*x);
    }
    f.iter_mut().for_each(|x| *x = x.max(0.0));
    let nf = norm(grid, &f);
    f.iter_mut().for_each(|x| *x /= nf);
    let mut r = vec![0.0; f.len()];
    apply(grid, v, &f, &mut r);
    r.iter_mut().zip(&f).for_each(|(r, f)| *r -= lambda * f);
    EigenResult {
        lambda,
        residual: norm(grid, &r),
        eigenvector: f,
        iterations,
    }
}

fn tridiagonal(v: &[f64], grid: &Grid, tol: f64) -> Result<EigenResult> {
    let n = grid.n;
    let h = grid.h();
    let k = 0.5 / (h * h);
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let walls = (i == 0) as usize + (i + 1 == n) as usize;
            k * (2.0 + walls as f64) - v[i]
        })
        .collect();
    let off = -k;
    let below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = diag[0] - x;
        for i in 0..n {
            if i > 0 {
                q = diag[i] - x - off * off / q;
            }
            if q == 0.0 {
                q = -f64::MIN_POSITIVE;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let ground = grid.laplacian_ground();
    let scale = 1.0 + ground + vmax.abs().max(vmin.abs());
    let (mut lo, mut hi) = (ground - vmax - 1e-9 * scale, ground - vmin + 1e-9 * scale);
    let mut iterations = 0;
    while hi - lo > 4.0 * f64::EPSILON * scale && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let lambda = 0.5 * (lo + hi);
    // Inverse iteration at a shift just below λ, so T - shift is positive definite.
    let shift = lo - 16.0 * f64::EPSILON * scale;
    let mut f = vec![1.0; n];
    for _ in 0..3 {
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        let mut piv = diag[0] - shift;
        cp[0] = off / piv;
        dp[0] = f[0] / piv;
        for i in 1..n {
            piv = diag[i] - shift - off * cp[i - 1];
            if piv == 0.0 {
                piv = f64::MIN_POSITIVE;
            }
            cp[i] = off / piv;
            dp[i] = (f[i] - off * dp[i - 1]) / piv;
        }
        f[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            f[i] = dp[i] - cp[i] * f[i + 1];
        }
        let m = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        f.iter_mut().for_each(|x| *x /= m);
    }
    let result = finish(grid, v, f, lambda, iterations);
    if result.residual > tol * (1.0 + lambda.abs()) {
        return Err(Error::NoConvergence {
            iterations,
            residual: result.residual,
        });
    }
    Ok(result)
}

// Conjugate gradients for (Op - σ) x = b, warm-started from x.
fn cg(grid: &Grid, v: &[f64], sigma: f64, b: &[f64], x: &mut [f64], rel_tol: f64) -> usize {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(grid, v, x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i] + sigma * x[i]).collect();
    let mut p = r.clone();
    let mut rr = weighted_sum(&r, &r);
    let bb = weighted_sum(b, b).max(f64::MIN_POSITIVE);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n.max(50);
    for it in 0..max_iter {
        if rr <= rel_tol * rel_tol * bb {
            return it;
        }
        apply(grid, v, &p, &mut ap);
        ap.iter_mut().zip(&p).for_each(|(a, p)| *a -= sigma * p);
        let alpha = rr / weighted_sum(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = weighted_sum(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    max_iter
}

fn shift_invert(v: &[f64], grid: &Grid, tol: f64, guess: Option<&[f64]>) -> Result<EigenResult> {
    let n = grid.cells();
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ground = grid.laplacian_ground();
    let gap0 = grid.laplacian_second() - ground;
    let sigma = ground - vmax - 0.1 * gap0;
    let mut f: Vec<f64> = match guess {
        Some(g) if g.len() == n && g.iter().any(|x| *x != 0.0) => g.to_vec(),
        _ => {
            // Positive start with full overlap on the ground state.
            (0..n)
                .map(|c| {
                    let x = grid.center(c);
                    (0..grid.dim).map(|a| (std::f64::consts::PI * x[a] / grid.side).cos()).product::<f64>()
                })
                .collect()
        }
    };
    let nf = norm(grid, &f);
    f.iter_mut().for_each(|x| *x /= nf);
    let mut of = vec![0.0; n];
    let mut theta_prev = f64::INFINITY;
    let mut x = f.clone();
    let inner_tol = (tol * 1e-3).max(1e-14);
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_OUTER {
        cg(grid, v, sigma, &f, &mut x, inner_tol);
        let nx = norm(grid, &x);
        f.iter_mut().zip(&x).for_each(|(f, x)| *f = x / nx);
        // Keep the warm start on the same scale as the next solution.
        x.iter_mut().zip(&f).for_each(|(x, f)| *x = f * nx);
        apply(grid, v, &f, &mut of);
        let theta = weighted_sum(&f, &of) * grid.cell_volume();
        of.iter_mut().zip(&f).for_each(|(o, f)| *o -= theta * f);
        residual = norm(grid, &of);
        let rel_change = (theta - theta_prev).abs() / theta.abs().max(1e-300);
        theta_prev = theta;
        if rel_change < tol && residual < tol * (1.0 + theta.abs()) {
            return Ok(finish(grid, v, f, theta, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_OUTER,
        residual,
    })
}

/// `½ (Dirichlet energy of f) - Σ V f² h^d` for `Σ f² h^d = 1`.
pub fn rayleigh(v: &[f64], f: &[f64], grid: &Grid) -> Result<f64> {
    check(grid, v)?;
    if f.len() != v.len() {
        return Err(Error::GridMismatch("test function and potential differ in length".into()));
    }
    let mass = weighted_sum(f, f) * grid.cell_volume();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized { norm: mass });
    }
    let pot: f64 = v.iter().zip(f).map(|(v, f)| v * f * f).sum::<f64>() * grid.cell_volume();
    Ok(0.5 * dirichlet_energy(grid, f) - pot)
}

/// Sub-grid of side `sub_side` whose lowest corner is cell `corner`.
fn extract(grid: &Grid, v: &[f64], corner: [usize; 3], m: usize) -> Vec<f64> {
    let sub = Grid { n: m, ..*grid };
    (0..sub.cells())
        .map(|c| {
            let k = sub.coords(c);
            let mut idx = 0;
            for axis in 0..grid.dim {
                idx = idx * grid.n + corner[axis] + k[axis];
            }
            v[idx]
        })
        .collect()
}

/// Principal eigenvalue on the whole grid and the smallest one over the
/// partition into sub-boxes of side `sub_side`.
pub fn localization_gap(v: &[f64], grid: &Grid, sub_side: f64, tol: f64) -> Result<(f64, f64)> {
    check(grid, v)?;
    let ratio = grid.side / sub_side;
    let k = ratio.round();
    if !(k >= 1.0) || (ratio - k).abs() > 1e-9 * ratio || grid.n % (k as usize) != 0 {
        return Err(Error::Partition {
            big: grid.side,
            sub: sub_side,
        });
    }
    let k = k as usize;
    let m = grid.n / k;
    if m < 2 {
        return Err(Error::Partition {
            big: grid.side,
            sub: sub_side,
        });
    }
    let big = principal_eigenvalue(v, grid, tol)?.lambda;
    let sub_grid = Grid::new(grid.dim, sub_side, m)?;
    let boxes = k.pow(grid.dim as u32);
    let min_sub = (0..boxes)
        .into_par_iter()
        .map(|b| {
            let mut corner = [0; 3];
            let mut rest = b;
            for axis in (0..grid.dim).rev() {
                corner[axis] = (rest % k) * m;
                rest /= k;
            }
            let sv = extract(grid, v, corner, m);
            principal_eigenvalue(&sv, &sub_grid, tol).map(|r| r.lambda)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok((big, min_sub))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_eigenvalues_match_closed_forms() {
        let g1 = Grid::new(1, 1.0, 256).unwrap();
        let r1 = principal_eigenvalue(&vec![0.0; 256], &g1, 1e-8).unwrap();
        assert!((r1.lambda - g1.laplacian_ground()).abs() < 1e-10);
        assert!((r1.lambda / (PI * PI / 2.0) - 1.0).abs() < 5e-3);
        let g2 = Grid::new(2, 1.0, 32).unwrap();
        let r2 = principal_eigenvalue(&vec![0.0; 1024], &g2, 1e-8).unwrap();
        assert!((r2.lambda - g2.laplacian_ground()).abs() < 1e-6);
        assert!(r2.eigenvector.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn constant_potential_shifts() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 2.0, 8).unwrap();
            let r = principal_eigenvalue(&vec![0.7; g.cells()], &g, 1e-9).unwrap();
            assert!((r.lambda - (g.laplacian_ground() - 0.7)).abs() < 1e-7, "d={dim}");
        }
    }

    #[test]
    fn rayleigh_bounds_and_consistency() {
        let g = Grid::new(1, 2.0, 40).unwrap();
        let v: Vec<f64> = (0..40).map(|c| (c as f64 * 0.37).sin()).collect();
        let r = principal_eigenvalue(&v, &g, 1e-10).unwrap();
        assert!((rayleigh(&v, &r.eigenvector, &g).unwrap() - r.lambda).abs() < 1e-9);
        let mut f: Vec<f64> = (0..40).map(|c| 1.0 + (c % 5) as f64).collect();
        let nf = norm(&g, &f);
        f.iter_mut().for_each(|x| *x /= nf);
        assert!(rayleigh(&v, &f, &g).unwrap() >= r.lambda);
        assert!(matches!(rayleigh(&v, &vec![1.0; 40], &g), Err(Error::Unnormalized { .. })));
    }

    #[test]
    fn iterative_and_direct_solvers_agree_on_separable_potential() {
        // V(x, y) = a(x) + b(y) separates, so λ₂ = λ(a) + λ(b) computed in 1-d.
        let n = 24;
        let g1 = Grid::new(1, 3.0, n).unwrap();
        let a: Vec<f64> = (0..n).map(|i| 0.8 * ((i as f64) * 0.5).cos()).collect();
        let b: Vec<f64> = (0..n).map(|i| if i % 4 == 0 { 0.5 } else { -0.2 }).collect();
        let la = principal_eigenvalue(&a, &g1, 1e-12).unwrap().lambda;
        let lb = principal_eigenvalue(&b, &g1, 1e-12).unwrap().lambda;
        let g2 = Grid::new(2, 3.0, n).unwrap();
        let v: Vec<f64> = (0..n * n).map(|c| a[c / n] + b[c % n]).collect();
        let l2 = principal_eigenvalue(&v, &g2, 1e-9).unwrap().lambda;
        assert!((l2 - (la + lb)).abs() < 1e-7, "{l2} vs {}", la + lb);
    }

    #[test]
    fn localization_of_free_operator() {
        let g = Grid::new(1, 2.0, 128).unwrap();
        let (big, sub) = localization_gap(&vec![0.0; 128], &g, 1.0, 1e-10).unwrap();
        assert!((big - PI * PI / 8.0).abs() < 1e-3);
        assert!((sub - PI * PI / 2.0).abs() < 1e-3);
        let (big_c, sub_c) = localization_gap(&vec![0.3; 128], &g, 1.0, 1e-10).unwrap();
        assert!(((sub_c - big_c) - (sub - big)).abs() < 1e-9);
        assert!(matches!(localization_gap(&vec![0.0; 128], &g, 0.7, 1e-8), Err(Error::Partition { .. })));
    }
}
