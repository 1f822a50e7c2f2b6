//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test --test acceptance -- 5 9` runs a subset by number.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use brownian_scenery::checks::{self, VerifyConfig};
use brownian_scenery::ext::Extended;
use brownian_scenery::field::FieldLaw;
use brownian_scenery::grid::Grid;
use brownian_scenery::montecarlo::{exit_time_table, ks_scaling, speed_fit, SpeedFitConfig, SpeedMode, WalkConfig};
use brownian_scenery::ratefn::{annealed_rate, quenched_l, quenched_study, Settings};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn from_check(c: checks::CheckOutcome) -> Outcome {
    if c.passed {
        Ok(c.detail)
    } else {
        Err(c.detail)
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, format!("{what} took {:.0} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()))
}

fn eigenvalues() -> Outcome {
    from_check(checks::eigen(&VerifyConfig::default()))
}

fn duality() -> Outcome {
    let t = Instant::now();
    let c = checks::duality(&VerifyConfig::default());
    within(t.elapsed(), Duration::from_secs(60), "duality")?;
    from_check(c)
}

fn mollifier() -> Outcome {
    from_check(checks::mollifier(&VerifyConfig::default()))
}

fn scaling() -> Outcome {
    from_check(checks::scaling(&VerifyConfig::default()))
}

fn ys21() -> Vec<f64> {
    (0..21).map(|k| -0.9 + 0.09 * k as f64).map(|y: f64| if y.abs() < 1e-12 { 0.0 } else { y }).collect()
}

const ALPHAS: [f64; 9] = [-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0];

fn finite(v: &[Extended], what: &str) -> Result<Vec<f64>, String> {
    v.iter()
        .map(|x| match x {
            Extended::Finite(f) => Ok(*f),
            _ => Err(format!("{what} is infinite inside (-1, 1)")),
        })
        .collect()
}

fn rate_shape() -> Outcome {
    let t = Instant::now();
    let law = FieldLaw::rademacher();
    let g = Grid::new(1, 4.0, 64).unwrap();
    let ys = ys21();
    let st = quenched_study(&law, &g, &ys, &ALPHAS, &Settings::default()).map_err(|e| e.to_string())?;
    within(t.elapsed(), Duration::from_secs(1800), "study")?;
    let j = finite(&st.legendre.transform.values, "J")?;
    let j1 = finite(&st.j1.values, "J1")?;
    let env = finite(&st.j1_envelope, "envelope of J1")?;
    let min_d2 = (1..20).map(|k| j[k + 1] - 2.0 * j[k] + j[k - 1]).fold(f64::INFINITY, f64::min);
    ensure(min_d2 >= -1e-6, format!("second difference {min_d2:.3e}"))?;
    ensure(j[10] == 0.0, format!("J(0) = {}", j[10]))?;
    ensure((11..21).all(|k| j[k] > j[k - 1]), "J not increasing on the positive side".into())?;
    let worst = j1.iter().zip(&j).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
    ensure(j1.iter().zip(&j).all(|(a, b)| *a >= b - 1e-12 * (1.0 + b.abs())), format!("J1 - J down to {worst:.3e}"))?;
    let sup_j = j.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sup_diff = env.iter().zip(&j).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ensure(sup_diff <= 0.02 * sup_j, format!("|env(J1) - J| = {sup_diff:.4} vs 2% of {sup_j:.4}"))?;
    Ok(format!(
        "min second difference {min_d2:.2e}, min J1-J {worst:.2e}, |env(J1)-J|/|J| {:.2e}, {:.0} s",
        sup_diff / sup_j,
        t.elapsed().as_secs_f64()
    ))
}

fn l_bounds() -> Outcome {
    let law = FieldLaw::rademacher();
    let g = Grid::new(1, 4.0, 64).unwrap();
    let st = quenched_study(&law, &g, &[-0.5, 0.0, 0.5], &ALPHAS, &Settings::default()).map_err(|e| e.to_string())?;
    let l = &st.legendre.l_values;
    let (m_lo, m_hi) = (law.ess_inf(), law.ess_sup());
    for (&a, &v) in ALPHAS.iter().zip(l) {
        let floor = if a >= 0.0 { -a * m_hi } else { -a * m_lo };
        ensure(floor <= v && v <= 0.0, format!("l({a}) = {v} outside [{floor}, 0]"))?;
    }
    ensure(l[4] == 0.0, format!("l(0) = {}", l[4]))?;
    // Concavity on a nonuniform grid: slopes decrease.
    let slopes: Vec<f64> = (1..ALPHAS.len()).map(|k| (l[k] - l[k - 1]) / (ALPHAS[k] - ALPHAS[k - 1])).collect();
    ensure(slopes.windows(2).all(|w| w[1] <= w[0] + 1e-9), format!("slopes {slopes:?}"))?;
    Ok(format!("l = {l:.4?}"))
}

fn oracles() -> Outcome {
    let law = FieldLaw::rademacher();
    let settings = Settings::default();
    let mut report = Vec::new();
    let mut brute = Duration::ZERO;
    for &y in &[0.25, 0.5] {
        let g = Grid::new(1, 2.0, 8).unwrap();
        let t = Instant::now();
        let oracle = common::annealed_brute_force(&law, y, g.h(), 8);
        brute += t.elapsed();
        let got = annealed_rate(y, &law, &g, &settings).map_err(|e| e.to_string())?.box_value.to_f64();
        let rel = (got - oracle).abs() / oracle;
        ensure(rel <= 0.05, format!("annealed y={y}: {got} vs brute force {oracle}"))?;
        report.push(format!("annealed y={y} {rel:.1e}"));
    }
    let g = Grid::new(1, 4.0, 8).unwrap();
    let t = Instant::now();
    let oracle = common::quenched_brute_force(&law, 1.0, 4.0, 8, 8, 1.0 - 1e-6);
    brute += t.elapsed();
    let got = quenched_l(1.0, &law, &g, &settings).map_err(|e| e.to_string())?.box_value;
    let rel = (got - oracle).abs() / oracle.abs();
    ensure(rel <= 0.05, format!("l(1): {got} vs brute force {oracle}"))?;
    report.push(format!("l(1) {rel:.1e}"));
    within(brute, Duration::from_secs(300), "brute force")?;
    Ok(format!("relative errors: {}; brute force {:.1} s", report.join(", "), brute.as_secs_f64()))
}

fn localization() -> Outcome {
    from_check(checks::localization(&VerifyConfig::default()))
}

fn exponents() -> Outcome {
    let t = Instant::now();
    let cfg = SpeedFitConfig {
        dim: 1,
        y: 0.4,
        ladder: vec![100.0, 200.0, 400.0, 800.0, 1600.0],
        n: 1_000_000,
        mode: SpeedMode::Annealed,
        dt: 1.0 / 64.0,
        seed: 1,
    };
    let fit = speed_fit(&FieldLaw::rademacher(), &cfg).map_err(|e| e.to_string())?;
    within(t.elapsed(), Duration::from_secs(3600), "speed fit")?;
    let speed_secs = t.elapsed().as_secs_f64();
    ensure((0.25..=0.45).contains(&fit.exponent), format!("speed exponent {:.3} (dropped {:?})", fit.exponent, fit.dropped))?;
    let t = Instant::now();
    let ladder = [256, 512, 1024, 2048, 4096];
    let ks1 = ks_scaling(&FieldLaw::rademacher(), 1, &ladder, 10_000, 1).map_err(|e| e.to_string())?;
    let ks3 = ks_scaling(&FieldLaw::rademacher(), 3, &ladder, 10_000, 1).map_err(|e| e.to_string())?;
    within(t.elapsed(), Duration::from_secs(1800), "variance growth")?;
    ensure((1.40..=1.60).contains(&ks1.exponent), format!("d=1 variance exponent {:.3}", ks1.exponent))?;
    ensure((0.90..=1.10).contains(&ks3.exponent), format!("d=3 variance exponent {:.3}", ks3.exponent))?;
    Ok(format!(
        "speed {:.3} ({speed_secs:.0} s), variance d=1 {:.3}, d=3 {:.3} ({:.0} s)",
        fit.exponent,
        ks1.exponent,
        ks3.exponent,
        t.elapsed().as_secs_f64()
    ))
}

fn exit_bound() -> Outcome {
    let rep = exit_time_table(&WalkConfig::new(1, 1.0, 1.0 / 1024.0, 3), &[1.0, 1.5, 2.0], &[1.0, 2.0], 1_000_000).map_err(|e| e.to_string())?;
    ensure(rep.violations == 0, format!("{} violations", rep.violations))?;
    Ok(format!("log C = {:.3}, {} rows, 0 violations", rep.log_c, rep.rows.len()))
}

const RUNS: [(&str, &str); 14] = [
    ("ratefn", r#"{"kind":"annealed","law":{"kind":"rademacher"},"grid":{"A":2.0,"N":16},"ys":[0.0,0.3,0.6]}"#),
    ("ratefn", r#"{"kind":"product_form","law":{"kind":"uniform_symmetric"},"grid":{"A":2.0,"N":16},"ys":[0.2,0.4]}"#),
    ("ratefn", r#"{"kind":"quenched","law":{"kind":"rademacher"},"grid":{"A":4.0,"N":16},"ys":[-0.4,0.0,0.4],"alphas":[-1.0,0.0,1.0]}"#),
    ("ratefn", r#"{"kind":"quenched_l","law":{"kind":"rademacher"},"grid":{"A":4.0,"N":16},"alphas":[-1.0,0.5]}"#),
    ("ratefn", r#"{"kind":"j1","law":{"kind":"rademacher"},"grid":{"A":4.0,"N":16},"ys":[0.3]}"#),
    ("ratefn", r#"{"kind":"dual","law":{"kind":"rademacher"},"grid":{"A":1.0,"N":32},"ys":[0.2,0.5]}"#),
    ("simulate", r#"{"experiment":"speed_fit","law":{"kind":"rademacher"},"dim":1,"y":0.3,"ladder":[10.0,20.0,40.0],"n":20000,"dt":0.0625,"seed":4}"#),
    ("simulate", r#"{"experiment":"tail","law":{"kind":"uniform_symmetric"},"dim":2,"t":5.0,"ys":[0.0,0.2],"n":3000,"beta":0.5}"#),
    ("simulate", r#"{"experiment":"ks_scaling","law":{"kind":"rademacher"},"dim":2,"ladder":[64,128,256],"samples":1000,"seed":9}"#),
    ("simulate", r#"{"experiment":"exit_time","dim":1,"radii":[1.0,1.5],"taus":[1.0],"n":5000,"dt":0.00390625}"#),
    ("simulate", r#"{"experiment":"feynman_kac","law":{"kind":"rademacher"},"dim":1,"t":1.0,"alphas":[-0.5,0.5],"delta":0.5,"r":1.0,"cells":32,"paths":2000,"dt":0.00390625}"#),
    ("spectral", r#"{"dim":1,"grid":{"A":1.0,"N":32},"potential":{"kind":"zero"}}"#),
    ("spectral", r#"{"dim":2,"grid":{"A":2.0,"N":16},"potential":{"kind":"scenery","law":{"kind":"rademacher"},"alpha":1.0,"delta":0.5,"r":1.0,"seed":3},"sub_side":1.0}"#),
    ("verify", "{}"),
];

fn run(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_bscenery")).args(args).output().map_err(|e| e.to_string())?;
    ensure(o.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (k, (cmd, cfg)) in RUNS.iter().enumerate() {
        let base = tmp.path().join(k.to_string());
        std::fs::create_dir_all(&base).unwrap();
        let cfg_path = base.join("config.json");
        std::fs::write(&cfg_path, cfg).unwrap();
        let first = base.join("first");
        run(&[cmd, "--config", cfg_path.to_str().unwrap(), "--out", first.to_str().unwrap()])?;
        let expected = csvs(&first);
        ensure(!expected.is_empty(), format!("{cmd} wrote no CSV"))?;
        // Re-run from the echoed config in both the CSV header and the JSON document.
        let echoed = [first.join(&expected[0].0), first.join(format!("{cmd}.json"))];
        for (i, src) in echoed.iter().enumerate() {
            let again = base.join(format!("again{i}"));
            run(&[cmd, "--config", src.to_str().unwrap(), "--out", again.to_str().unwrap(), "--threads", "3"])?;
            let got = csvs(&again);
            ensure(got == expected, format!("{cmd} run {k}: CSV differs after re-run from {}", src.display()))?;
            files += got.len();
        }
    }
    Ok(format!("{} runs, {files} CSV files byte-identical", RUNS.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closed-form eigenvalues", eigenvalues),
        ("duality gap", duality),
        ("mollifier bound", mollifier),
        ("box-size scaling", scaling),
        ("quenched rate shape", rate_shape),
        ("l bounds and concavity", l_bounds),
        ("tiny-grid oracles", oracles),
        ("localization", localization),
        ("Monte Carlo exponents", exponents),
        ("exit-time bound", exit_bound),
        ("determinism", determinism),
    ];
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !picked.is_empty() && !picked.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
