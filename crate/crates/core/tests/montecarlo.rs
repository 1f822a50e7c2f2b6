use brownian_scenery::error::Error;
use brownian_scenery::field::{sample_scenery, FieldLaw};
use brownian_scenery::montecarlo::stats::{ks_two_sample, mean_stderr};
use brownian_scenery::montecarlo::*;
use brownian_scenery::rng;

fn fresh_samples(law: &FieldLaw, cfg: &WalkConfig, n: u64) -> Vec<f64> {
    let mut field = Fresh::new(law, cfg.dim, 4096, 0.0);
    (0..n)
        .map(|p| {
            field.reset(cfg.seed, rng::FRESH_SCENERY_BASE + p);
            occupation_ladder(&mut field, cfg, p, &[cfg.steps()]).unwrap()[0]
        })
        .collect()
}

fn combined(a: &Estimate, b: &Estimate) -> f64 {
    (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

#[test]
fn constant_scenery_gives_its_value() {
    let mut s = sample_scenery(&FieldLaw::rademacher(), 2, 60, 0).unwrap();
    s.values.iter_mut().for_each(|x| *x = 0.25);
    let cfg = WalkConfig::new(2, 10.0, 1.0 / 64.0, 3);
    assert!((occupation_functional(&s, &cfg).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn short_horizon_sees_the_cells_at_the_origin() {
    // The origin is a cell corner: [0, 1) and [-1, 0) share it.
    let s = sample_scenery(&FieldLaw::uniform(), 1, 4, 11).unwrap();
    let (a, b) = (s.get(&[-1]).unwrap(), s.get(&[0]).unwrap());
    let cfg = WalkConfig::new(1, 4.0 / 4096.0, 1.0 / 4096.0, 0);
    for p in 0..200 {
        let x = occupation_ladder(&mut Frozen(&s), &cfg, p, &[4]).unwrap()[0];
        assert!(x >= a.min(b) - 1e-12 && x <= a.max(b) + 1e-12);
    }
    assert_eq!(occupation_ladder(&mut Frozen(&s), &cfg, 0, &[1]).unwrap()[0], b);
}

#[test]
fn leaving_the_scenery_is_an_error() {
    let s = sample_scenery(&FieldLaw::rademacher(), 1, 1, 0).unwrap();
    let cfg = WalkConfig::new(1, 400.0, 1.0 / 16.0, 0);
    assert!(matches!(occupation_functional(&s, &cfg), Err(Error::WalkExited { .. })));
}

#[test]
fn annealed_functional_is_centered_and_symmetric() {
    let law = FieldLaw::uniform();
    let cfg = WalkConfig::new(1, 100.0, 1.0 / 64.0, 5);
    let xs = fresh_samples(&law, &cfg, 20_000);
    let (m, se) = mean_stderr(&xs);
    assert!(m.abs() <= 3.0 * se, "mean {m} stderr {se}");
    let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
    let (_, p) = ks_two_sample(&xs, &flipped);
    assert!(p > 0.01, "KS p-value {p}");
    assert!(xs.iter().all(|x| x.abs() <= 1.0));
}

#[test]
fn half_of_paths_end_above_zero() {
    let law = FieldLaw::uniform();
    let cfg = WalkConfig::new(1, 10.0, 1.0 / 64.0, 2);
    let e = annealed_tail(&law, &cfg, 0.0, 20_000).unwrap();
    assert!((e.estimate.mean - 0.5).abs() <= 3.0 * e.estimate.stderr, "{e:?}");
    assert!(e.wilson.0 < 0.5 && e.wilson.1 > 0.5);
}

#[test]
fn levels_above_the_support_are_impossible() {
    let law = FieldLaw::rademacher();
    let cfg = WalkConfig::new(1, 10.0, 1.0 / 64.0, 0);
    let e = annealed_tail(&law, &cfg, 1.01, 10).unwrap();
    assert!(e.impossible && e.hits == 0 && e.estimate.logprob.is_none());
    let s = sample_scenery(&law, 1, 30, 0).unwrap();
    assert!(quenched_tail(&s, &cfg, 1.01, 10).unwrap().impossible);
}

#[test]
fn tail_decreases_in_the_level() {
    let law = FieldLaw::rademacher();
    let cfg = WalkConfig::new(1, 200.0, 1.0 / 16.0, 9);
    let low = annealed_tail(&law, &cfg, 0.2, 100_000).unwrap();
    let high = annealed_tail(&law, &cfg, 0.4, 100_000).unwrap();
    assert!(low.hits > 0);
    assert!(low.hits >= high.hits, "{} < {}", low.hits, high.hits);
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let law = FieldLaw::rademacher();
    let cfg = WalkConfig::new(1, 20.0, 1.0 / 64.0, 4);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| annealed_tail(&law, &cfg, 0.1, 4000).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(a.estimate.mean.to_bits(), b.estimate.mean.to_bits());
}

#[test]
fn averaged_quenched_frequency_is_the_annealed_one() {
    let law = FieldLaw::rademacher();
    let cfg = WalkConfig::new(1, 25.0, 1.0 / 16.0, 1);
    let (y, per) = (0.2, 2000);
    let annealed = annealed_tail(&law, &cfg, y, 100_000).unwrap();
    let quenched: Vec<u64> = (0..50)
        .map(|k| {
            let s = sample_scenery(&law, 1, 80, 100 + k).unwrap();
            quenched_tail(&s, &WalkConfig { seed: k, ..cfg }, y, per).unwrap().hits
        })
        .collect();
    let freq: Vec<f64> = quenched.iter().map(|&h| h as f64 / per as f64).collect();
    let (m, se) = mean_stderr(&freq);
    let tol = 3.0 * (se * se + annealed.estimate.stderr.powi(2)).sqrt();
    assert!((m - annealed.estimate.mean).abs() <= tol, "quenched {m} annealed {}", annealed.estimate.mean);
    // Jensen: the typical quenched log-probability sits below the annealed one.
    let logs: Vec<f64> = quenched.iter().map(|&h| ((h as f64 + 0.5) / (per as f64 + 1.0)).ln()).collect();
    let (lm, lse) = mean_stderr(&logs);
    assert!(lm <= annealed.estimate.logprob.unwrap() + 3.0 * lse, "{lm} {lse} {annealed:?}");
}

#[test]
fn tilted_sampling_agrees_with_plain_sampling() {
    let law = FieldLaw::uniform();
    let cfg = WalkConfig::new(1, 25.0, 1.0 / 16.0, 6);
    let plain = annealed_tail(&law, &cfg, 0.4, 100_000).unwrap().estimate;
    let tilted = annealed_tail_tilted(&law, &cfg, 0.4, 20_000, 1.0).unwrap();
    assert!((plain.mean - tilted.mean).abs() <= 3.0 * combined(&plain, &tilted), "{plain:?} {tilted:?}");
    let rel_var = |e: &Estimate| e.stderr.powi(2) * e.n as f64 / e.mean.powi(2);
    assert!(rel_var(&tilted) < rel_var(&plain), "{plain:?} {tilted:?}");
    let untilted = annealed_tail_tilted(&law, &cfg, 0.4, 100_000, 0.0).unwrap();
    assert_eq!(untilted.mean, plain.mean);
}

#[test]
fn speed_fit_reports_every_horizon() {
    let law = FieldLaw::rademacher();
    for mode in [SpeedMode::Annealed, SpeedMode::Quenched] {
        let cfg = SpeedFitConfig {
            dim: 1,
            y: 0.3,
            ladder: vec![10.0, 20.0, 40.0],
            n: 20_000,
            mode,
            dt: 1.0 / 16.0,
            seed: 0,
        };
        let f = speed_fit(&law, &cfg).unwrap();
        assert_eq!(f.points.len(), 3);
        assert!(f.slope > 0.0 && f.exponent > 0.0, "{f:?}");
        assert!(f.points.windows(2).all(|w| w[1].hits <= w[0].hits + 200));
    }
    let bad = SpeedFitConfig {
        dim: 1,
        y: 0.3,
        ladder: vec![10.0],
        n: 10,
        mode: SpeedMode::Annealed,
        dt: 1.0 / 16.0,
        seed: 0,
    };
    assert!(speed_fit(&law, &bad).is_err());
}

#[test]
fn exit_frequency_scales_with_the_horizon() {
    let cfg = WalkConfig::new(1, 1.0, 1.0 / 1024.0, 0);
    assert_eq!(exit_time_check(&cfg, 20.0, 2000).unwrap().mean, 0.0);
    for r in [1.0, 1.5] {
        let one = exit_time_check(&cfg, r, 100_000).unwrap();
        let two = exit_time_check(&WalkConfig { t: 2.0, ..cfg }, r, 100_000).unwrap();
        let (l1, l2) = (-one.logprob.unwrap(), -two.logprob.unwrap());
        let se = (4.0 * one.log_stderr().unwrap().powi(2) + two.log_stderr().unwrap().powi(2)).sqrt();
        assert!(l2 >= 2.0 * l1 - 2.0 * se, "R={r}: {l2} < 2·{l1}");
    }
}

#[test]
fn exit_table_holds_its_bound() {
    let cfg = WalkConfig::new(1, 1.0, 1.0 / 256.0, 0);
    let rep = exit_time_table(&cfg, &[1.5, 1.0], &[1.0, 2.0], 20_000).unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert_eq!(rep.violations, 0, "{rep:?}");
    assert!(exit_time_table(&cfg, &[30.0], &[1.0], 100).is_err());
}

#[test]
fn feynman_kac_functional() {
    let law = FieldLaw::rademacher();
    let mut s = sample_scenery(&law, 1, 16, 2).unwrap();
    for j in -3..3 {
        let i = s.index(&[j]).unwrap();
        s.values[i] = 1.0;
    }
    let cfg = WalkConfig {
        radius: 1.0,
        ..WalkConfig::new(1, 2.0, 1.0 / 256.0, 0)
    };
    let fk = |alpha| FkConfig {
        delta: 0.5,
        alpha,
        r: 1.0,
        cells: 64,
        paths: 20_000,
    };
    let zero = feynman_kac_check(&s, &fk(0.0), &cfg, 0.0).unwrap();
    assert_eq!(zero.mc.mean, zero.mc_free.mean);
    assert!((zero.lambda - zero.lambda_free).abs() < 1e-12);
    let up = feynman_kac_check(&s, &fk(0.5), &cfg, 0.0).unwrap();
    let down = feynman_kac_check(&s, &fk(-0.5), &cfg, 0.0).unwrap();
    assert!(up.mc.mean >= down.mc.mean);
    assert!(up.lambda < down.lambda);
    for r in [&zero, &up, &down] {
        assert!(r.holds && !r.overflow, "{r:?}");
    }
}

#[test]
fn planar_scenery_walk_grows_like_n_log_n() {
    let law = FieldLaw::rademacher();
    let ladder: Vec<u64> = (8..=12).map(|k| 1u64 << k).collect();
    let f = ks_scaling(&law, 2, &ladder, 2000, 0).unwrap();
    assert!(f.exponent >= 1.0 && f.exponent <= 1.2, "{f:?}");
    assert!((f.log_corrected.slope - 1.0).abs() < (f.exponent - 1.0).abs());
    let line = ks_scaling(&law, 1, &ladder, 2000, 0).unwrap();
    assert!((line.exponent - 1.5).abs() < 0.1, "{line:?}");
    assert!(ks_scaling(&law, 4, &ladder, 10, 0).is_err());
}
