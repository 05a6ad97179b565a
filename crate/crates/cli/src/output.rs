//! Output framing: CSV with a commented header, or a JSON envelope. Both
//! carry the tool version and the resolved configuration.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::{Command, Format};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn config_json(cmd: &Command) -> String {
    serde_json::to_string(cmd).expect("configuration serializes")
}

pub fn csv_document(cmd: &Command, body: &str) -> String {
    format!("# espider {VERSION}\n# config {}\n{body}", config_json(cmd))
}

pub fn json_document<T: Serialize>(cmd: &Command, data: &T) -> String {
    let doc = serde_json::json!({
        "espider": VERSION,
        "config": cmd,
        "data": data,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
    s.push('\n');
    s
}

/// Renders either form; `csv` is only called when CSV is requested.
pub fn render<T: Serialize>(cmd: &Command, format: Format, data: &T, csv: impl FnOnce() -> String) -> String {
    match format {
        Format::Csv => csv_document(cmd, &csv()),
        Format::Json => json_document(cmd, data),
    }
}

pub fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut lock = std::io::stdout().lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}
