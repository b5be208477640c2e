//! Result emission. Floats are rounded to 15 significant digits and written
//! in their shortest round-trip form, so identical runs give identical bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_PREFIX: &str = "herald-sim";

pub fn schema(workflow: &str) -> String {
    format!("{SCHEMA_PREFIX}/{workflow}/1")
}

/// `x` rounded to 15 significant digits; `-0` becomes `0`.
pub fn sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x + 0.0;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

pub fn sig_opt(x: Option<f64>) -> Option<f64> {
    x.map(sig)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to `path`, or to standard output.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(io_error(p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(io_error(Path::new("<stdout>")))
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output types serialize");
    bytes.push(b'\n');
    bytes
}

pub fn csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io { path: "<csv>".into(), source: e.into() })?;
    }
    w.into_inner().map_err(|e| CliError::Io { path: "<csv>".into(), source: e.into_error() })
}
