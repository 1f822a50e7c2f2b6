use std::collections::HashMap;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::WalkConfig;
use crate::error::{Error, Result};
use crate::field::{integer_part, FieldLaw, Scenery};
use crate::rng;

/// Scenery values along a path.
pub trait SiteField {
    /// `ξ(site)`; `time` is only used to report an exit.
    fn at(&mut self, site: &[i64; 3], time: f64) -> Result<f64>;
}

/// A frozen scenery.
pub struct Frozen<'a>(pub &'a Scenery);

impl SiteField for Frozen<'_> {
    #[inline]
    fn at(&mut self, site: &[i64; 3], time: f64) -> Result<f64> {
        let s = self.0;
        s.index(&site[..s.dim]).map(|i| s.values[i]).ok_or(Error::WalkExited { time })
    }
}

enum Memo {
    Dense { hw: i64, vals: Vec<f64>, touched: Vec<usize> },
    Sparse(HashMap<[i64; 3], f64>),
}

/// A scenery drawn site by site on first visit, from the tilted law
/// `e^{βx}ν(dx)/e^{Λ(β)}` (plain law at `β = 0`).
///
/// Values depend on the order of first visits, which is a function of the
/// path, so a `(seed, stream)` pair still fixes everything.
pub struct Fresh {
    law: FieldLaw,
    beta: f64,
    log_mgf: f64,
    rng: ChaCha8Rng,
    memo: Memo,
    /// `Σ (Λ(β) - βξ)` over the sites drawn so far: the log likelihood ratio.
    pub log_lr: f64,
}

/// Largest dense memo, in sites.
const DENSE_LIMIT: i64 = 1 << 22;

impl Fresh {
    /// `hw` bounds `|site|` along each axis when a dense memo is affordable.
    pub fn new(law: &FieldLaw, dim: usize, hw: i64, beta: f64) -> Fresh {
        let side = 2 * hw + 1;
        let memo = if dim == 1 && side <= DENSE_LIMIT {
            Memo::Dense {
                hw,
                vals: vec![f64::NAN; side as usize],
                touched: Vec::new(),
            }
        } else {
            Memo::Sparse(HashMap::new())
        };
        Fresh {
            law: law.clone(),
            beta,
            log_mgf: law.log_mgf(beta),
            rng: rng::keyed(0, 0),
            memo,
            log_lr: 0.0,
        }
    }

    pub fn reset(&mut self, seed: u64, stream: u64) {
        self.rng = rng::keyed(seed, stream);
        self.log_lr = 0.0;
        match &mut self.memo {
            Memo::Dense { vals, touched, .. } => {
                for &i in touched.iter() {
                    vals[i] = f64::NAN;
                }
                touched.clear();
            }
            Memo::Sparse(m) => m.clear(),
        }
    }

    fn draw(&mut self) -> f64 {
        let x = self.law.tilted_quantile(self.beta, rng::unit_f64(self.rng.next_u64()));
        self.log_lr += self.log_mgf - self.beta * x;
        x
    }
}

impl SiteField for Fresh {
    #[inline]
    fn at(&mut self, site: &[i64; 3], time: f64) -> Result<f64> {
        match &mut self.memo {
            Memo::Dense { hw, vals, touched } => {
                if site[0].abs() > *hw {
                    return Err(Error::WalkExited { time });
                }
                let i = (site[0] + *hw) as usize;
                if vals[i].is_nan() {
                    touched.push(i);
                    let x = self.law.tilted_quantile(self.beta, rng::unit_f64(self.rng.next_u64()));
                    self.log_lr += self.log_mgf - self.beta * x;
                    vals[i] = x;
                }
                Ok(vals[i])
            }
            Memo::Sparse(m) => {
                if let Some(&x) = m.get(site) {
                    return Ok(x);
                }
                let x = self.draw();
                if let Memo::Sparse(m) = &mut self.memo {
                    m.insert(*site, x);
                }
                Ok(x)
            }
        }
    }
}

/// Brownian motion from the origin by Euler steps of a config.
pub(crate) struct Walker {
    rng: ChaCha8Rng,
    pub pos: [f64; 3],
    dim: usize,
    sd: f64,
}

impl Walker {
    pub fn new(cfg: &WalkConfig, path: u64, dt: f64) -> Walker {
        Walker {
            rng: rng::keyed(cfg.seed, rng::PATH_BASE + path),
            pos: [0.0; 3],
            dim: cfg.dim,
            sd: dt.sqrt(),
        }
    }

    #[inline]
    pub fn step(&mut self) {
        for a in 0..self.dim {
            let z: f64 = self.rng.sample(StandardNormal);
            self.pos[a] += self.sd * z;
        }
    }

    #[inline]
    pub fn cell(&self) -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..self.dim {
            c[a] = integer_part(self.pos[a]);
        }
        c
    }

    #[inline]
    pub fn sup_norm(&self) -> f64 {
        self.pos[..self.dim].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// `⟨L_t, ξ⟩ = (1/t) Σ ξ([B_s]) dt` along path `path`, recorded at each
/// horizon of `horizons` (increasing multiples of `cfg.dt`).
pub fn occupation_ladder<F: SiteField>(field: &mut F, cfg: &WalkConfig, path: u64, horizons: &[usize]) -> Result<Vec<f64>> {
    let dt = cfg.dt;
    let mut w = Walker::new(cfg, path, dt);
    let mut out = Vec::with_capacity(horizons.len());
    let mut sum = 0.0;
    let mut k = 0usize;
    for &steps in horizons {
        while k < steps {
            sum += field.at(&w.cell(), k as f64 * dt)?;
            w.step();
            k += 1;
        }
        out.push(sum / steps as f64);
    }
    Ok(out)
}

/// `⟨L_t, ξ⟩` for one Euler path (path index 0) in a frozen scenery.
pub fn occupation_functional(scenery: &Scenery, cfg: &WalkConfig) -> Result<f64> {
    cfg.validate()?;
    if scenery.dim != cfg.dim {
        return Err(Error::InvalidArgument(format!("scenery is {}-dimensional, walk is {}-dimensional", scenery.dim, cfg.dim)));
    }
    Ok(occupation_ladder(&mut Frozen(scenery), cfg, 0, &[cfg.steps()])?[0])
}
