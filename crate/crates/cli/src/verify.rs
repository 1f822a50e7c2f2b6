use brownian_scenery::checks::{self, VerifyConfig, CHECKS};

use crate::error::{CliError, CliResult};
use crate::report::Report;

pub fn validate(filter: Option<&str>) -> CliResult<()> {
    match filter {
        Some(f) if !CHECKS.iter().any(|c| c.contains(f)) => Err(CliError::Config(format!("--filter '{f}' matches none of {}", CHECKS.join(", ")))),
        _ => Ok(()),
    }
}

/// Runs the property suite, prints a table and fails with the names of the
/// failed checks.
pub fn run(cfg: &VerifyConfig, filter: Option<&str>, report: &Report) -> CliResult<()> {
    validate(filter)?;
    let outcomes = checks::run(cfg, filter);
    println!("{:<13} {:<6} {:>9}  detail", "check", "result", "seconds");
    for o in &outcomes {
        println!("{:<13} {:<6} {:>9.2}  {}", o.name, if o.passed { "pass" } else { "FAIL" }, o.seconds, o.detail);
    }
    let rows: Vec<Vec<String>> = outcomes.iter().map(|o| vec![o.name.clone(), o.passed.to_string(), o.detail.clone()]).collect();
    report.csv("verify.csv", &["check", "passed", "detail"], &rows)?;
    report.json("verify.json", &outcomes)?;
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property { failed })
    }
}
