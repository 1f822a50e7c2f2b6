//! Scenery laws, lattice samples and the cumulant pair `Λ`, `H`.

use std::f64::consts::LN_2;
use std::path::Path;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::rng;

/// Largest scenery (in sites) that [`sample_scenery`] will allocate.
pub const SCENERY_BUDGET: usize = 1 << 26;

const NEWTON_TOL: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-12;

/// JSON form of a law, e.g. `{"kind":"rademacher"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Rademacher {},
    UniformSymmetric {},
    /// `P[ξ = a] = p`, `P[ξ = b] = 1 - p`.
    TwoPoint { p: f64, a: f64, b: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Rademacher,
    Uniform,
    Atoms { values: Vec<f64>, probs: Vec<f64> },
}

/// A centered law with support in `[-1, 1]` and positive variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub struct FieldLaw {
    spec: LawSpec,
    kind: Kind,
    m: f64,
    big_m: f64,
}

impl TryFrom<LawSpec> for FieldLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        FieldLaw::new(spec)
    }
}

impl From<FieldLaw> for LawSpec {
    fn from(law: FieldLaw) -> LawSpec {
        law.spec
    }
}

impl FieldLaw {
    pub fn new(spec: LawSpec) -> Result<Self> {
        let (kind, m, big_m) = match &spec {
            LawSpec::Rademacher {} => (Kind::Rademacher, -1.0, 1.0),
            LawSpec::UniformSymmetric {} => (Kind::Uniform, -1.0, 1.0),
            LawSpec::TwoPoint { p, a, b } => atoms(vec![*a, *b], vec![*p, 1.0 - *p])?,
            LawSpec::Discrete { values, probs } => atoms(values.clone(), probs.clone())?,
        };
        Ok(FieldLaw { spec, kind, m, big_m })
    }

    pub fn rademacher() -> Self {
        FieldLaw::new(LawSpec::Rademacher {}).expect("valid law")
    }

    pub fn uniform() -> Self {
        FieldLaw::new(LawSpec::UniformSymmetric {}).expect("valid law")
    }

    pub fn spec(&self) -> &LawSpec {
        &self.spec
    }

    /// Essential infimum `m`.
    pub fn ess_inf(&self) -> f64 {
        self.m
    }

    /// Essential supremum `M`.
    pub fn ess_sup(&self) -> f64 {
        self.big_m
    }

    /// Whether `ξ ↦ -ξ` leaves the law unchanged.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            Kind::Rademacher | Kind::Uniform => true,
            Kind::Atoms { values, probs } => values.iter().zip(probs).all(|(v, p)| {
                values
                    .iter()
                    .zip(probs)
                    .any(|(w, q)| (w + v).abs() < 1e-14 && (q - p).abs() < 1e-14)
            }),
        }
    }

    /// The law of `-ξ`.
    pub fn reflected(&self) -> FieldLaw {
        match &self.spec {
            LawSpec::Rademacher {} | LawSpec::UniformSymmetric {} => self.clone(),
            LawSpec::TwoPoint { p, a, b } => FieldLaw::new(LawSpec::TwoPoint { p: *p, a: -a, b: -b }).expect("reflection keeps validity"),
            LawSpec::Discrete { values, probs } => FieldLaw::new(LawSpec::Discrete {
                values: values.iter().map(|v| -v).collect(),
                probs: probs.clone(),
            })
            .expect("reflection keeps validity"),
        }
    }

    pub fn variance(&self) -> f64 {
        self.d2_log_mgf(0.0)
    }

    /// `P[ξ = y]`; zero for the continuous law.
    pub fn atom(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Rademacher => {
                if y == 1.0 || y == -1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            Kind::Uniform => 0.0,
            Kind::Atoms { values, probs } => values.iter().zip(probs).filter(|(v, _)| **v == y).map(|(_, p)| p).sum(),
        }
    }

    /// `Λ(α) = log E e^{αξ}`.
    pub fn log_mgf(&self, alpha: f64) -> f64 {
        match &self.kind {
            Kind::Rademacher => {
                let a = alpha.abs();
                a + (-2.0 * a).exp().ln_1p() - LN_2
            }
            Kind::Uniform => {
                let a = alpha.abs();
                if a < 1e-3 {
                    let a2 = a * a;
                    a2 / 6.0 - a2 * a2 / 180.0
                } else if a > 20.0 {
                    a - (2.0 * a).ln() + (-(-2.0 * a).exp()).ln_1p()
                } else {
                    (a.sinh() / a).ln()
                }
            }
            Kind::Atoms { values, probs } => {
                let shift = values.iter().map(|v| alpha * v).fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = values.iter().zip(probs).map(|(v, p)| p * (alpha * v - shift).exp()).sum();
                shift + s.ln()
            }
        }
    }

    /// `Λ'(α)`, the mean of the tilted law.
    pub fn d_log_mgf(&self, alpha: f64) -> f64 {
        match &self.kind {
            Kind::Rademacher => alpha.tanh(),
            Kind::Uniform => {
                let a = alpha;
                if a.abs() < 0.05 {
                    let a2 = a * a;
                    a * (1.0 / 3.0 - a2 / 45.0 + 2.0 * a2 * a2 / 945.0)
                } else {
                    1.0 / a.tanh() - 1.0 / a
                }
            }
            Kind::Atoms { values, probs } => {
                let (w, _) = tilted_weights(values, probs, alpha);
                values.iter().zip(&w).map(|(v, w)| v * w).sum()
            }
        }
    }

    /// `Λ''(α)`, the variance of the tilted law.
    pub fn d2_log_mgf(&self, alpha: f64) -> f64 {
        match &self.kind {
            Kind::Rademacher => {
                let t = alpha.tanh();
                1.0 - t * t
            }
            Kind::Uniform => {
                let a = alpha.abs();
                if a < 0.01 {
                    let a2 = a * a;
                    1.0 / 3.0 - a2 / 15.0 + 2.0 * a2 * a2 / 189.0
                } else {
                    let s = a.sinh();
                    1.0 / (a * a) - 1.0 / (s * s)
                }
            }
            Kind::Atoms { values, probs } => {
                let (w, _) = tilted_weights(values, probs, alpha);
                let mean: f64 = values.iter().zip(&w).map(|(v, w)| v * w).sum();
                values.iter().zip(&w).map(|(v, w)| w * (v - mean) * (v - mean)).sum()
            }
        }
    }

    /// Solves `Λ'(α) = y` for `y` strictly inside `]m, M[`.
    pub fn dual_point(&self, y: f64) -> f64 {
        debug_assert!(y > self.m && y < self.big_m);
        if y == 0.0 {
            return 0.0;
        }
        // Bracket grown geometrically from [-1, 1].
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while self.d_log_mgf(hi) < y && hi < 1e12 {
            lo = hi;
            hi *= 2.0;
        }
        while self.d_log_mgf(lo) > y && lo > -1e12 {
            hi = lo;
            lo *= 2.0;
        }
        let mut a = if y > 0.0 { 0.5 * (lo.max(0.0) + hi) } else { 0.5 * (lo + hi.min(0.0)) };
        let mut stalls = 0;
        let mut last_width = hi - lo;
        for _ in 0..500 {
            let g = self.d_log_mgf(a) - y;
            if g.abs() <= NEWTON_TOL {
                return a;
            }
            if g > 0.0 {
                hi = a;
            } else {
                lo = a;
            }
            let width = hi - lo;
            if width >= 0.5 * last_width {
                stalls += 1;
            } else {
                stalls = 0;
            }
            last_width = width;
            let slope = self.d2_log_mgf(a);
            let newton = a - g / slope;
            a = if stalls < 3 && slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                stalls = 0;
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        a
    }

    /// `H(y) = sup_α (αy - Λ(α))`.
    pub fn cramer(&self, y: f64) -> Extended {
        if y.is_nan() || y < self.m || y > self.big_m {
            return Extended::PosInf;
        }
        if y == 0.0 {
            return Extended::ZERO;
        }
        if y == self.m || y == self.big_m {
            let p = self.atom(y);
            return if p > 0.0 { Extended::Finite(-p.ln()) } else { Extended::PosInf };
        }
        let a = self.dual_point(y);
        Extended::Finite((a * y - self.log_mgf(a)).max(0.0))
    }

    /// `H` at the tilted mean `Λ'(s)`, via `H(Λ'(s)) = sΛ'(s) - Λ(s)`.
    pub fn cramer_at_tilt(&self, s: f64) -> f64 {
        (s * self.d_log_mgf(s) - self.log_mgf(s)).max(0.0)
    }

    /// Maps a uniform `[0,1)` draw to a sample of the law.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            Kind::Uniform => 2.0 * u - 1.0,
            Kind::Atoms { values, probs } => pick(values, probs, u),
        }
    }

    /// Sample of the tilted law `e^{βx} ν(dx) / e^{Λ(β)}` from a uniform draw.
    pub fn tilted_quantile(&self, beta: f64, u: f64) -> f64 {
        if beta == 0.0 {
            return self.quantile(u);
        }
        match &self.kind {
            Kind::Rademacher => {
                if u < 0.5 * (1.0 - beta.tanh()) {
                    -1.0
                } else {
                    1.0
                }
            }
            Kind::Uniform => {
                // Inverse CDF of the density ∝ e^{βx} on [-1, 1].
                let b = beta;
                if b > 0.0 {
                    1.0 + (u + (1.0 - u) * (-2.0 * b).exp()).ln() / b
                } else {
                    -1.0 + ((1.0 - u) + u * (2.0 * b).exp()).ln() / b
                }
            }
            Kind::Atoms { values, probs } => {
                let (w, _) = tilted_weights(values, probs, beta);
                pick(values, &w, u)
            }
        }
    }
}

fn atoms(values: Vec<f64>, probs: Vec<f64>) -> Result<(Kind, f64, f64)> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(Error::InvalidLaw("values and probs must be non-empty and of equal length".into()));
    }
    if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
        return Err(Error::InvalidLaw("support must lie in [-1, 1]".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidLaw("probabilities must be nonnegative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MOMENT_TOL {
        return Err(Error::InvalidLaw(format!("probabilities sum to {total}, not 1")));
    }
    let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    if mean.abs() > MOMENT_TOL {
        return Err(Error::InvalidLaw(format!("mean is {mean}, not 0")));
    }
    let var: f64 = values.iter().zip(&probs).map(|(v, p)| v * v * p).sum();
    if var <= 0.0 {
        return Err(Error::InvalidLaw("variance must be positive".into()));
    }
    let (values, probs): (Vec<f64>, Vec<f64>) = values.into_iter().zip(probs).filter(|(_, p)| *p > 0.0).unzip();
    let m = values.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((Kind::Atoms { values, probs }, m, big_m))
}

fn tilted_weights(values: &[f64], probs: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let shift = values.iter().map(|v| alpha * v).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().zip(probs).map(|(v, p)| p * (alpha * v - shift).exp()).collect();
    let z: f64 = w.iter().sum();
    (w.into_iter().map(|x| x / z).collect(), z)
}

fn pick(values: &[f64], probs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for (v, p) in values.iter().zip(probs) {
        acc += p;
        if u < acc {
            return *v;
        }
    }
    *values.last().expect("non-empty support")
}

/// An i.i.d. sample of the law on the lattice box `[-halfwidth, halfwidth]^dim`.
///
/// Sites are flattened row-major with the last axis fastest. Site `i` draws
/// the `i`-th word of the scenery stream for `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenery {
    pub law: FieldLaw,
    pub dim: usize,
    pub halfwidth: i64,
    pub seed: u64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

pub fn sample_scenery(law: &FieldLaw, dim: usize, halfwidth: i64, seed: u64) -> Result<Scenery> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
    }
    if halfwidth < 1 {
        return Err(Error::InvalidArgument(format!("halfwidth {halfwidth} < 1")));
    }
    let side = (2 * halfwidth + 1) as u128;
    let requested = side.pow(dim as u32);
    if requested > SCENERY_BUDGET as u128 {
        return Err(Error::Capacity {
            requested: requested.min(usize::MAX as u128) as usize,
            budget: SCENERY_BUDGET,
        });
    }
    let total = requested as usize;
    let mut values = vec![0.0; total];
    const CHUNK: usize = 1 << 14;
    values.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut g = rng::at_word(seed, rng::SCENERY_STREAM, (c * CHUNK) as u64);
        for v in chunk.iter_mut() {
            *v = law.quantile(rng::unit_f64(g.next_u64()));
        }
    });
    Ok(Scenery {
        law: law.clone(),
        dim,
        halfwidth,
        seed,
        values,
    })
}

impl Scenery {
    pub fn side(&self) -> i64 {
        2 * self.halfwidth + 1
    }

    /// Flat index of a lattice site, or `None` outside the box.
    pub fn index(&self, site: &[i64]) -> Option<usize> {
        debug_assert_eq!(site.len(), self.dim);
        let side = self.side();
        let mut idx = 0i64;
        for &j in site {
            if j < -self.halfwidth || j > self.halfwidth {
                return None;
            }
            idx = idx * side + (j + self.halfwidth);
        }
        Some(idx as usize)
    }

    pub fn get(&self, site: &[i64]) -> Result<f64> {
        self.index(site).map(|i| self.values[i]).ok_or_else(|| Error::OutOfRange {
            site: site.to_vec(),
            halfwidth: self.halfwidth,
        })
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (little-endian `f64`s).
    pub fn save(&self, stem: &Path) -> Result<()> {
        let header = serde_json::to_string_pretty(self)?;
        std::fs::write(stem.with_extension("json"), header + "\n")?;
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(stem.with_extension("bin"), bytes)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Scenery> {
        let mut s: Scenery = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        let expected = (s.side() as usize).pow(s.dim as u32);
        if bytes.len() != 8 * expected {
            return Err(Error::Format(format!("expected {} values, found {} bytes", expected, bytes.len())));
        }
        s.values = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        Ok(s)
    }
}

/// Integer part used for the coarse-grained field: `floor`, so that cell `j`
/// is `[j/r, (j+1)/r)` on both sides of the origin.
#[inline]
pub fn integer_part(x: f64) -> i64 {
    x.floor() as i64
}

/// `ξ([r x])`, the scenery seen at spatial scale `1/r`.
pub fn rescaled_eval(scenery: &Scenery, r: f64, x: &[f64]) -> Result<f64> {
    if x.len() != scenery.dim {
        return Err(Error::InvalidArgument(format!("point has {} coordinates, scenery is {}-dimensional", x.len(), scenery.dim)));
    }
    let mut site = [0i64; 3];
    for (s, xi) in site.iter_mut().zip(x) {
        *s = integer_part(r * xi);
    }
    scenery.get(&site[..scenery.dim])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> FieldLaw {
        FieldLaw::new(LawSpec::TwoPoint { p: 0.75, a: -1.0 / 3.0, b: 1.0 }).unwrap()
    }

    #[test]
    fn log_mgf_closed_forms() {
        let r = FieldLaw::rademacher();
        assert_eq!(r.log_mgf(0.0), 0.0);
        assert!((r.log_mgf(1.0) - 1f64.cosh().ln()).abs() < 1e-15);
        assert!((r.log_mgf(1.0) - 0.4337808).abs() < 1e-7);
        let u = FieldLaw::uniform();
        assert!((u.log_mgf(2.0) - (2f64.sinh() / 2.0).ln()).abs() < 1e-15);
        assert!((u.log_mgf(2.0) - 0.5952202).abs() < 1e-7);
        // Series branch agrees with the direct formula near its threshold.
        let a = 1.2e-3;
        assert!((u.log_mgf(a) - (a.sinh() / a).ln()).abs() < 1e-15);
        // Large-argument branch.
        assert!((u.log_mgf(30.0) - (30f64.sinh() / 30.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for law in [FieldLaw::rademacher(), FieldLaw::uniform(), two_point()] {
            for &a in &[-3.0, -0.7, -0.02, 0.004, 0.3, 1.5, 6.0] {
                let e = 1e-5;
                let d1 = (law.log_mgf(a + e) - law.log_mgf(a - e)) / (2.0 * e);
                let d2 = (law.d_log_mgf(a + e) - law.d_log_mgf(a - e)) / (2.0 * e);
                assert!((law.d_log_mgf(a) - d1).abs() < 1e-8, "{law:?} Λ' at {a}");
                assert!((law.d2_log_mgf(a) - d2).abs() < 1e-7, "{law:?} Λ'' at {a}");
            }
        }
    }

    #[test]
    fn cramer_rademacher_closed_form() {
        let r = FieldLaw::rademacher();
        let exact = |y: f64| 0.5 * ((1.0 + y) * (1.0 + y).ln() + (1.0 - y) * (1.0 - y).ln());
        for &y in &[-0.99, -0.5, -0.1, 0.05, 0.3, 0.9, 0.999] {
            let h = r.cramer(y).finite().unwrap();
            assert!((h - exact(y)).abs() < 1e-11, "y={y}: {h} vs {}", exact(y));
        }
        assert_eq!(r.cramer(0.0), Extended::ZERO);
        assert!((r.cramer(1.0).finite().unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(r.cramer(1.5), Extended::PosInf);
        assert_eq!(r.cramer(-1.0000001), Extended::PosInf);
    }

    #[test]
    fn cramer_endpoints() {
        assert_eq!(FieldLaw::uniform().cramer(1.0), Extended::PosInf);
        let t = two_point();
        assert!((t.cramer(1.0).finite().unwrap() + 0.25f64.ln()).abs() < 1e-15);
        assert!((t.cramer(-1.0 / 3.0).finite().unwrap() + 0.75f64.ln()).abs() < 1e-15);
        assert_eq!(t.cramer(-0.5), Extended::PosInf);
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(FieldLaw::new(LawSpec::TwoPoint { p: 0.5, a: -1.0, b: 0.5 }).is_err());
        assert!(FieldLaw::new(LawSpec::Discrete { values: vec![-2.0, 2.0], probs: vec![0.5, 0.5] }).is_err());
        assert!(FieldLaw::new(LawSpec::Discrete { values: vec![0.0], probs: vec![1.0] }).is_err());
        let bad = r#"{"kind":"rademacher","extra":1}"#;
        assert!(serde_json::from_str::<FieldLaw>(bad).is_err());
    }

    #[test]
    fn law_serde_round_trip() {
        let t = two_point();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"kind":"two_point","p":0.75,"a":-0.3333333333333333,"b":1.0}"#);
        assert_eq!(serde_json::from_str::<FieldLaw>(&s).unwrap(), t);
    }

    #[test]
    fn tilted_sampler_has_tilted_mean() {
        for law in [FieldLaw::rademacher(), FieldLaw::uniform(), two_point()] {
            let beta = 0.8;
            let n = 200_000;
            let mean: f64 = (0..n).map(|i| law.tilted_quantile(beta, (i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
            assert!((mean - law.d_log_mgf(beta)).abs() < 1e-3, "{law:?}");
        }
    }

    #[test]
    fn scenery_support_and_determinism() {
        let law = FieldLaw::rademacher();
        let s = sample_scenery(&law, 1, 4, 11).unwrap();
        assert_eq!(s.values.len(), 9);
        assert!(s.values.iter().all(|v| *v == 1.0 || *v == -1.0));
        assert_eq!(s.values, sample_scenery(&law, 1, 4, 11).unwrap().values);
    }

    #[test]
    fn uniform_scenery_mean_in_clt_band() {
        let s = sample_scenery(&FieldLaw::uniform(), 2, 64, 5).unwrap();
        let n = s.values.len() as f64;
        assert_eq!(n, 129.0 * 129.0);
        let mean = s.values.iter().sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt());
    }

    #[test]
    fn capacity_guard() {
        assert!(matches!(sample_scenery(&FieldLaw::rademacher(), 3, 1000, 0), Err(Error::Capacity { .. })));
    }

    #[test]
    fn rescaled_lookup() {
        let s = sample_scenery(&FieldLaw::uniform(), 1, 8, 3).unwrap();
        assert_eq!(rescaled_eval(&s, 1.0, &[0.3]).unwrap(), s.get(&[0]).unwrap());
        assert_eq!(rescaled_eval(&s, 4.0, &[0.6]).unwrap(), s.get(&[2]).unwrap());
        assert_eq!(rescaled_eval(&s, 4.0, &[-0.1]).unwrap(), s.get(&[-1]).unwrap());
        assert_eq!(rescaled_eval(&s, 4.0, &[0.51]).unwrap(), rescaled_eval(&s, 4.0, &[0.74]).unwrap());
        assert!(matches!(rescaled_eval(&s, 4.0, &[2.5]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn scenery_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample_scenery(&two_point(), 2, 3, 9).unwrap();
        let stem = dir.path().join("field");
        s.save(&stem).unwrap();
        assert_eq!(Scenery::load(&stem).unwrap(), s);
    }
}
