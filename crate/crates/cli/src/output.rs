use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use tpa_core::fmt_sig;

use crate::args::Format;
use crate::error::CliResult;

/// A record that can be written as a CSV line or a JSON object.
pub trait Row: Serialize {
    const HEADER: &'static str;
    fn csv(&self) -> String;
}

/// Quotes a text field if it would break the CSV line.
pub fn text_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn num(x: f64) -> String {
    fmt_sig(x)
}

pub fn render<R: Row>(rows: &[R], format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Csv => {
            let mut s = String::with_capacity(64 * (rows.len() + 1));
            s.push_str(R::HEADER);
            s.push('\n');
            for r in rows {
                s.push_str(&r.csv());
                s.push('\n');
            }
            s
        }
        Format::Json => json(rows)?,
    })
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
