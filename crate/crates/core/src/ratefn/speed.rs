use crate::error::{Error, Result};

/// The positive root `r` of `t = r² exp(r^d)`.
pub fn r_of_t(t: f64, dim: usize) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive and finite")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let d = dim as f64;
    let target = t.ln();
    // In s = ln r the map φ(s) = 2s + e^{ds} - ln t is increasing and convex.
    let phi = |s: f64| 2.0 * s + (d * s).exp() - target;
    let dphi = |s: f64| 2.0 + d * (d * s).exp();
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while phi(lo) > 0.0 {
        lo *= 2.0;
    }
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut s = hi;
    for _ in 0..200 {
        let v = phi(s);
        if v.abs() <= 1e-15 * (1.0 + target.abs()) {
            break;
        }
        if v > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let next = s - v / dphi(s);
        s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 * (1.0 + s.abs()) {
            break;
        }
    }
    Ok(s.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn known_roots() {
        assert!((r_of_t(E, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((r_of_t(4.0 * E * E, 1).unwrap() - 2.0).abs() < 1e-12);
        assert!((4.0 * E * E - 29.556).abs() < 1e-3);
    }

    #[test]
    fn round_trip_and_monotone() {
        for dim in 1..=3 {
            let mut last = 0.0;
            for k in 0..60 {
                let t = 10f64.powf(-3.0 + 0.25 * k as f64);
                let r = r_of_t(t, dim).unwrap();
                let back = r * r * r.powi(dim as i32).exp();
                assert!(((back - t) / t).abs() <= 1e-10, "d={dim} t={t}");
                assert!(r > last);
                last = r;
            }
        }
    }
}
