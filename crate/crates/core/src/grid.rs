//! Cell-centered grids on `Q(A) = [-A/2, A/2]^d`, profiles, densities and
//! the functionals defined on them.
//!
//! The Dirichlet condition sits on the box wall: a cell touching the wall
//! sees an antisymmetric ghost, so a wall face contributes
//! `(f / (h/2))^2 · (h/2) · h^{d-1}` to the energy. The same convention is
//! used by the spectral operator, which makes [`dirichlet_rate`] its exact
//! discrete dual.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::field::{FieldLaw, Scenery};

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Box side `A`.
    pub side: f64,
    /// Cells per side `N`.
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, side: f64, n: usize) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!("box side {side} must be positive")));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 cells per side, got {n}")));
        }
        Ok(Grid { dim, side, n })
    }

    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    /// `h^d`, the volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Stride of `axis` in the flat layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn coords(&self, flat: usize) -> [usize; 3] {
        let mut k = [0; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            k[axis] = rest % self.n;
            rest /= self.n;
        }
        k
    }

    pub fn center(&self, flat: usize) -> [f64; 3] {
        let k = self.coords(flat);
        let h = self.h();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = -0.5 * self.side + (k[axis] as f64 + 0.5) * h;
        }
        x
    }

    /// The same cell layout on a box `factor` times smaller.
    pub fn contracted(&self, factor: f64) -> Grid {
        Grid {
            side: self.side / factor,
            ..*self
        }
    }

    /// Smallest eigenvalue of `-½Δ` on this grid (closed form).
    pub fn laplacian_ground(&self) -> f64 {
        let h = self.h();
        let per_axis = 0.5 * (2.0 - 2.0 * (PI / self.n as f64).cos()) / (h * h);
        per_axis * self.dim as f64
    }

    /// Second smallest eigenvalue of `-½Δ` on this grid.
    pub fn laplacian_second(&self) -> f64 {
        let h = self.h();
        let mode = |k: f64| 0.5 * (2.0 - 2.0 * (k * PI / self.n as f64).cos()) / (h * h);
        mode(2.0) + (self.dim as f64 - 1.0) * mode(1.0)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.cells() {
            return Err(Error::GridMismatch(format!("{} values on a grid of {} cells", len, self.cells())));
        }
        Ok(())
    }
}

/// Continuum value `λ₁(d)/A² = dπ²/(2A²)` of the Dirichlet ground state on `Q(A)`.
pub fn lambda_one(dim: usize, side: f64) -> f64 {
    dim as f64 * PI * PI / (2.0 * side * side)
}

/// Piecewise-constant `u` with `‖u‖_∞ ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Profile> {
        grid.check_len(values.len())?;
        if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidArgument(format!("profile value {v} outside [-1, 1]")));
        }
        Ok(Profile { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Profile> {
        Profile::new(grid, vec![c; grid.cells()])
    }

    /// `u_s(x) = u(s x)`: same values on a box `s` times smaller.
    pub fn contracted(&self, factor: f64) -> Profile {
        Profile {
            grid: self.grid.contracted(factor),
            values: self.values.clone(),
        }
    }
}

/// Discretized probability density, stored as `ρ` per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Density {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Density> {
        grid.check_len(values.len())?;
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("density value {v} is negative or not finite")));
        }
        let mass = values.iter().sum::<f64>() * grid.cell_volume();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("density has mass {mass}, not 1")));
        }
        Ok(Density { grid, values })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(grid: Grid, mut values: Vec<f64>) -> Result<Density> {
        grid.check_len(values.len())?;
        let total = values.iter().sum::<f64>() * grid.cell_volume();
        if !(total > 0.0 && total.is_finite()) || values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument("weights must be nonnegative with positive finite sum".into()));
        }
        for v in &mut values {
            *v /= total;
        }
        Ok(Density { grid, values })
    }

    pub fn uniform(grid: Grid) -> Density {
        let v = 1.0 / grid.side.powi(grid.dim as i32);
        Density {
            grid,
            values: vec![v; grid.cells()],
        }
    }

    /// Ground-state density `f²` of an eigenvector normalized by `Σ f² h^d = 1`.
    pub fn from_eigenvector(grid: Grid, f: &[f64]) -> Result<Density> {
        Density::normalized(grid, f.iter().map(|x| x * x).collect())
    }

    /// `μ_s(x) = s^d μ(s x)` on a box `s` times smaller.
    pub fn contracted(&self, factor: f64) -> Density {
        let scale = factor.powi(self.grid.dim as i32);
        Density {
            grid: self.grid.contracted(factor),
            values: self.values.iter().map(|v| v * scale).collect(),
        }
    }

    pub fn sqrt(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }
}

/// `⟨μ, u⟩ = Σ μ_c u_c h^d`.
pub fn pairing(mu: &Density, u: &Profile) -> Result<f64> {
    if mu.grid != u.grid {
        return Err(Error::GridMismatch("density and profile live on different grids".into()));
    }
    Ok(weighted_sum(&mu.values, &u.values) * mu.grid.cell_volume())
}

pub(crate) fn weighted_sum(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `I_A(u) = Σ H(u_c) h^d`.
pub fn entropy_i(u: &Profile, law: &FieldLaw) -> Extended {
    let mut total = 0.0;
    for &v in &u.values {
        match law.cramer(v) {
            Extended::Finite(h) => total += h,
            Extended::PosInf => return Extended::PosInf,
        }
    }
    Extended::Finite(total * u.grid.cell_volume())
}

/// Discrete Dirichlet energy `Σ ‖∇f‖² h^d` with the wall condition.
pub fn dirichlet_energy(grid: &Grid, f: &[f64]) -> f64 {
    let n = grid.n;
    let h = grid.h();
    let mut interior = 0.0;
    let mut wall = 0.0;
    for axis in 0..grid.dim {
        let s = grid.stride(axis);
        for (c, &fc) in f.iter().enumerate() {
            let k = (c / s) % n;
            if k + 1 < n {
                let d = f[c + s] - fc;
                interior += d * d;
            }
            if k == 0 || k + 1 == n {
                wall += fc * fc;
            }
        }
    }
    (interior + 2.0 * wall) / (h * h) * grid.cell_volume()
}

/// `𝓛(μ) = ½ Σ ‖∇√μ‖² h^d`.
pub fn dirichlet_rate(mu: &Density) -> f64 {
    0.5 * dirichlet_energy(&mu.grid, &mu.sqrt())
}

/// Replaces each value by `trunc(2^n v) / 2^n`.
pub fn dyadic_quantize(u: &Profile, n: u32) -> Profile {
    let scale = (2.0f64).powi(n as i32);
    Profile {
        grid: u.grid,
        values: u.values.iter().map(|v| (v * scale).trunc() / scale).collect(),
    }
}

// Unnormalized radial profile of the bump, |x| in units of the support diameter.
fn bump(r: f64) -> f64 {
    let s = 2.0 * r;
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

// ∫_0^{1/2} bump(r) r^p dr by composite Simpson.
fn radial_moment(p: i32) -> f64 {
    let m = 20_000;
    let step = 0.5 / m as f64;
    let mut acc = 0.0;
    for i in 0..=m {
        let r = i as f64 * step;
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * bump(r) * r.powi(p);
    }
    acc * step / 3.0
}

/// `(c, c₀)` for `ψ(x) = c·exp(-1/(1-(2‖x‖)²))`: `c` makes `∫ψ = 1` and
/// `c₀ = ∫ψ(z)‖z‖² dz`.
pub fn bump_constants(dim: usize) -> (f64, f64) {
    static CACHE: [OnceLock<(f64, f64)>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    *CACHE[dim - 1].get_or_init(|| {
        let area = sphere_area(dim);
        let c = 1.0 / (area * radial_moment(dim as i32 - 1));
        let c0 = c * area * radial_moment(dim as i32 + 1);
        (c, c0)
    })
}

/// `ψ_δ` sampled on a grid stencil and renormalized to `Σ w h^d = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    pub delta: f64,
    pub dim: usize,
    pub h: f64,
    /// Stencil offsets in cells, with their weights.
    pub offsets: Vec<[i64; 3]>,
    pub weights: Vec<f64>,
    /// `∫ψ(z)‖z‖² dz`, so that `∫ψ_δ(z)‖z‖² dz = c₀δ²`.
    pub c0: f64,
}

impl Mollifier {
    pub fn new(delta: f64, grid: &Grid) -> Result<Mollifier> {
        let h = grid.h();
        if !(delta >= 2.0 * h) {
            return Err(Error::Resolution { delta, h });
        }
        let dim = grid.dim;
        let (c, c0) = bump_constants(dim);
        let reach = (0.5 * delta / h).ceil() as i64;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let span = |axis: usize| if axis < dim { -reach..=reach } else { 0..=0 };
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    let r = h * ((i * i + j * j + k * k) as f64).sqrt() / delta;
                    let w = c * bump(r);
                    if w > 0.0 {
                        offsets.push([i, j, k]);
                        weights.push(w);
                    }
                }
            }
        }
        let vol = grid.cell_volume();
        let total: f64 = weights.iter().sum::<f64>() * vol;
        for w in &mut weights {
            *w /= total;
        }
        Ok(Mollifier {
            delta,
            dim,
            h,
            offsets,
            weights,
            c0,
        })
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if grid.dim != self.dim || (grid.h() - self.h).abs() > 1e-12 * self.h {
            return Err(Error::GridMismatch("mollifier was built for another grid spacing".into()));
        }
        Ok(())
    }

    /// `ψ_δ * f` with `f` extended by zero outside the box.
    pub fn convolve(&self, grid: &Grid, f: &[f64]) -> Result<Vec<f64>> {
        self.check(grid)?;
        grid.check_len(f.len())?;
        let n = grid.n as i64;
        let vol = grid.cell_volume();
        let mut out = vec![0.0; f.len()];
        for (c, o) in out.iter_mut().enumerate() {
            let k = grid.coords(c);
            let mut acc = 0.0;
            'stencil: for (off, w) in self.offsets.iter().zip(&self.weights) {
                let mut idx = 0i64;
                for axis in 0..grid.dim {
                    let q = k[axis] as i64 - off[axis];
                    if q < 0 || q >= n {
                        continue 'stencil;
                    }
                    idx = idx * n + q;
                }
                acc += w * f[idx as usize];
            }
            *o = acc * vol;
        }
        Ok(out)
    }

    /// `ψ_δ * ξ̄_r` at the cell centers, reading the scenery beyond the box
    /// edge instead of padding with zeros.
    pub fn smooth_scenery(&self, grid: &Grid, scenery: &Scenery, r: f64) -> Result<Vec<f64>> {
        self.check(grid)?;
        if scenery.dim != grid.dim {
            return Err(Error::GridMismatch("scenery and grid dimensions differ".into()));
        }
        let h = grid.h();
        if h > 1.0 / (2.0 * r) + 1e-12 {
            return Err(Error::Resolution { delta: 1.0 / r, h });
        }
        let vol = grid.cell_volume();
        let mut out = vec![0.0; grid.cells()];
        for (c, o) in out.iter_mut().enumerate() {
            let x = grid.center(c);
            let mut acc = 0.0;
            for (off, w) in self.offsets.iter().zip(&self.weights) {
                let mut site = [0i64; 3];
                for axis in 0..grid.dim {
                    site[axis] = crate::field::integer_part(r * (x[axis] - off[axis] as f64 * h));
                }
                acc += w * scenery.get(&site[..grid.dim])?;
            }
            *o = acc * vol;
        }
        Ok(out)
    }
}

/// `ψ_δ * u` with zero padding outside `Q(A)`.
pub fn mollify(u: &Profile, m: &Mollifier) -> Result<Profile> {
    let values = m.convolve(&u.grid, &u.values)?;
    Ok(Profile {
        grid: u.grid,
        values: values.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
    })
}

/// Both sides of the mollification bound:
/// `|⟨μ, ψ_δ*u - u⟩| ≤ (c₀δ²/ε₁) 𝓛(μ) + 2ε₁`.
pub fn mollifier_defect(mu: &Density, u: &Profile, m: &Mollifier, eps1: f64) -> Result<(f64, f64)> {
    if !(eps1 > 0.0) {
        return Err(Error::InvalidArgument(format!("eps1 = {eps1} must be positive")));
    }
    let smooth = mollify(u, m)?;
    let lhs = (pairing(mu, &smooth)? - pairing(mu, u)?).abs();
    let rhs = m.c0 * m.delta * m.delta / eps1 * dirichlet_rate(mu) + 2.0 * eps1;
    Ok((lhs, rhs))
}
