use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, mean_stderr, LinearFit};
use super::walk::{Fresh, SiteField};
use crate::error::{Error, Result};
use crate::field::FieldLaw;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsPoint {
    pub n: u64,
    /// `E[(Σ_{k<n} ξ(S_k))²]`.
    pub mean_sq: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsFit {
    /// Slope of `log E[Z_n²]` against `log n`.
    pub exponent: f64,
    pub r2: f64,
    /// Same fit for `E[Z_n²]/log n` (the planar correction).
    pub log_corrected: LinearFit,
    pub points: Vec<KsPoint>,
}

/// Growth of the second moment of the random walk in random scenery
/// `Z_n = Σ_{k<n} ξ(S_k)`, with a fresh scenery per sample.
///
/// Each sample is one walk of the longest length, read off at every `n`.
pub fn ks_scaling(law: &FieldLaw, dim: usize, ladder: &[u64], samples: u64, seed: u64) -> Result<KsFit> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
    }
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] < 2 || samples < 2 {
        return Err(Error::InvalidArgument("need an increasing ladder of at least two lengths ≥ 2 and two samples".into()));
    }
    let n_max = *ladder.last().expect("nonempty");
    let sums: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map_init(
            || Fresh::new(law, dim, n_max as i64 + 1, 0.0),
            |field, s| -> Result<Vec<f64>> {
                field.reset(seed, rng::FRESH_SCENERY_BASE + s);
                let mut walk = rng::keyed(seed, rng::PATH_BASE + s);
                let mut site = [0i64; 3];
                let mut z = 0.0;
                let mut out = Vec::with_capacity(ladder.len());
                let mut next = 0;
                for k in 0..n_max {
                    z += field.at(&site, k as f64)?;
                    if k + 1 == ladder[next] {
                        out.push(z);
                        next += 1;
                    }
                    let m = walk.random_range(0..2 * dim);
                    site[m / 2] += if m % 2 == 0 { 1 } else { -1 };
                }
                Ok(out)
            },
        )
        .collect::<Result<_>>()?;
    let points: Vec<KsPoint> = ladder
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let sq: Vec<f64> = sums.iter().map(|s| s[j] * s[j]).collect();
            let (mean_sq, stderr) = mean_stderr(&sq);
            KsPoint { n, mean_sq, stderr }
        })
        .collect();
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.mean_sq.ln()).collect();
    let yc: Vec<f64> = points.iter().map(|p| (p.mean_sq / (p.n as f64).ln()).ln()).collect();
    let fit = linear_fit(&x, &y);
    Ok(KsFit {
        exponent: fit.slope,
        r2: fit.r2,
        log_corrected: linear_fit(&x, &yc),
        points,
    })
}
