use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use discrete_airy::C64;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] discrete_airy::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Seventeen significant digits, enough to round-trip any f64.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn cx(v: C64) -> Value {
    json!([v.re, v.im])
}

/// Comma-separated table built row by row.
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Output directory that remembers what it wrote, for the manifest.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("json values always serialise");
        self.write(name, &(text + "\n"))
    }

    /// `manifest.json`: the resolved configuration, versions and outputs.
    pub fn finish(mut self, command: &str, config: Value, summary: Value) -> CliResult<()> {
        let mut outputs = self.written.clone();
        outputs.push("manifest.json".into());
        let manifest = json!({
            "command": command,
            "config": config,
            "versions": {
                "dairy": env!("CARGO_PKG_VERSION"),
                "discrete-airy": discrete_airy::VERSION,
            },
            // Every computation is deterministic; no random seeds are drawn.
            "seeds": [],
            "outputs": outputs,
            "summary": summary,
        });
        self.write_json("manifest.json", &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [1.0 / 3.0, -2.0e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(
                s.split('e').next().unwrap().trim_start_matches('-').len(),
                18
            );
        }
        assert_eq!(num(0.0), "0");
        assert_eq!(num(f64::NAN), "");
    }
}
