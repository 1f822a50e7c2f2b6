use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "bscenery";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory of one run. Every file carries the tool version, the
/// command and the effective config.
pub struct Report {
    dir: PathBuf,
    command: &'static str,
    config: Value,
}

impl Report {
    pub fn new(dir: &Path, command: &'static str, config: &impl Serialize) -> CliResult<Report> {
        std::fs::create_dir_all(dir)?;
        Ok(Report {
            dir: dir.to_path_buf(),
            command,
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
        })
    }

    fn header(&self) -> String {
        format!("# tool: {TOOL} {VERSION}\r\n# command: {}\r\n# config: {}\r\n", self.command, self.config)
    }

    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let mut file = File::create(&path)?;
        file.write_all(self.header().as_bytes())?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn json(&self, name: &str, result: &impl Serialize) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let doc = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    pub fn svg(&self, name: &str, body: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let desc = crate::svg::escape(&format!("{TOOL} {VERSION} {} {}", self.command, self.config));
        std::fs::write(&path, body.replacen("<desc></desc>", &format!("<desc>{desc}</desc>"), 1))?;
        Ok(path)
    }
}

/// Reads a config for `command` from a plain JSON config, a JSON output
/// document, or a CSV output with a `# config:` line.
pub fn load_config<T: DeserializeOwned>(path: &Path, command: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value = if text.starts_with('#') {
        let field = |key: &str| text.lines().find_map(|l| l.strip_prefix(key)).map(str::trim);
        check_command(field("# command:"), command)?;
        let cfg = field("# config:").ok_or_else(|| CliError::Config("no '# config:' line in CSV header".into()))?;
        parse(cfg)?
    } else {
        let v = parse(&text)?;
        match (v.get("tool"), v.get("config")) {
            (Some(_), Some(cfg)) => {
                check_command(v.get("command").and_then(Value::as_str), command)?;
                cfg.clone()
            }
            _ => v,
        }
    };
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse(text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))
}

fn check_command(found: Option<&str>, expected: &str) -> CliResult<()> {
    match found {
        Some(c) if c != expected => Err(CliError::Config(format!("file was written by '{c}', not '{expected}'"))),
        _ => Ok(()),
    }
}

/// Shortest round-trip decimal (exponent form for very small or large
/// magnitudes), `inf`/`-inf`/`NaN` for non-finite values.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
