//! CSV and JSON writers. Numbers are printed with 17 significant digits so
//! that a file read back reproduces every `f64` exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use freeclt_core::DensityTable;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn density_csv(table: &DensityTable) -> String {
    let mut s = String::with_capacity(48 * (table.len() + 1));
    s.push_str("x,density\n");
    for (x, p) in table.grid().iter().zip(table.values()) {
        s.push_str(&num(*x));
        s.push(',');
        s.push_str(&num(*p));
        s.push('\n');
    }
    s
}

pub fn discrepancy_csv(rows: &[(usize, f64)]) -> String {
    let mut s = String::from("n,discrepancy\n");
    for (n, d) in rows {
        s.push_str(&format!("{n},{}\n", num(*d)));
    }
    s
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|source| CliError::Write {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            fs::write(p, text).map_err(|source| CliError::Write {
                path: p.to_path_buf(),
                source,
            })
        }
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            }),
    }
}
