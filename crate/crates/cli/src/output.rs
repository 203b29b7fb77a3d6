//! CSV and run-manifest writing, and the error type that picks exit codes.

use crate::config::RunConfig;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<spincool::Error> for Failure {
    fn from(e: spincool::Error) -> Self {
        match e {
            spincool::Error::InvalidParameter { .. } | spincool::Error::UnknownPulse(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

/// Shortest decimal string that parses back to the same `f64`, so every
/// digit of the double is kept. Exponent form outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<&str> = cells.iter().map(|c| c.as_ref()).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Serialize)]
struct Timing {
    phase: String,
    seconds: f64,
}

/// Collects outputs and per-phase wall-clock times for `run_manifest.json`.
pub struct Run {
    pub out: PathBuf,
    pub command: &'static str,
    timings: Vec<Timing>,
    outputs: Vec<String>,
    summary: serde_json::Map<String, serde_json::Value>,
}

impl Run {
    pub fn new(out: &Path, command: &'static str) -> Result<Self, Failure> {
        std::fs::create_dir_all(out).map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Self {
            out: out.to_path_buf(),
            command,
            timings: Vec::new(),
            outputs: Vec::new(),
            summary: serde_json::Map::new(),
        })
    }

    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        self.timings.push(Timing {
            phase: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        v
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: serde_json::Value) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn finish(mut self, cfg: &RunConfig, threads: usize) -> Result<(), Failure> {
        let manifest = serde_json::json!({
            "tool": "spincool",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "threads": threads,
            "config": cfg,
            "timings": self.timings,
            "outputs": self.outputs,
            "summary": self.summary,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n";
        self.write("run_manifest.json", &text)
    }
}
