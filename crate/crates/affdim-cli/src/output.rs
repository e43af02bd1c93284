//! Result document assembly. Every subcommand produces one JSON envelope
//! (stdout, or `--out` file) plus optional CSV side tables written next to
//! the `--out` path. Keys are emitted in sorted order so identical inputs
//! yield byte-identical documents.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "affdim-result/1";

/// One finished command run, ready to serialize.
pub struct ResultDoc {
    pub command: String,
    pub seed: u64,
    pub config_echo: Value,
    pub result: Value,
    pub warnings: Vec<String>,
    /// (table name, CSV text); written as `<out stem>.<name>.csv`.
    pub tables: Vec<(String, String)>,
}

impl ResultDoc {
    pub fn new(command: &str, seed: u64, config_echo: Value) -> Self {
        ResultDoc {
            command: command.to_string(),
            seed,
            config_echo,
            result: Value::Null,
            warnings: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn envelope(&self, with_timestamp: bool) -> Value {
        let mut doc = Map::new();
        doc.insert("schema".into(), json!(SCHEMA));
        doc.insert("command".into(), json!(self.command));
        doc.insert("seed".into(), json!(self.seed));
        if with_timestamp {
            let now = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            doc.insert("timestamp_unix".into(), json!(now));
        }
        doc.insert("config".into(), self.config_echo.clone());
        doc.insert("warnings".into(), json!(self.warnings));
        doc.insert("result".into(), self.result.clone());
        Value::Object(doc)
    }

    /// Writes the envelope (and side tables when a path is given).
    /// Returns the list of files written.
    pub fn write(
        &self,
        out: Option<&Path>,
        with_timestamp: bool,
    ) -> io::Result<Vec<PathBuf>> {
        let mut text = serde_json::to_string_pretty(&self.envelope(with_timestamp))?;
        text.push('\n');
        let mut written = Vec::new();
        match out {
            Some(path) => {
                fs::write(path, &text)?;
                written.push(path.to_path_buf());
                for (name, csv) in &self.tables {
                    let side = sibling_csv(path, name);
                    fs::write(&side, csv)?;
                    written.push(side);
                }
            }
            None => {
                io::stdout().write_all(text.as_bytes())?;
            }
        }
        Ok(written)
    }
}

/// `report.json` + table "curve" -> `report.curve.csv` in the same directory.
fn sibling_csv(out: &Path, table: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    out.with_file_name(format!("{stem}.{table}.csv"))
}

/// Formats a float for JSON without losing precision; NaN and infinities
/// become null since JSON has no encoding for them.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn num_vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}
