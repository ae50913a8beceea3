//! Output files. Every file starts with the library version, seed and
//! configuration hash: CSV and text files as `#` comment lines, JSON as
//! top-level fields.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::Failure;
use crate::schottky::LIBRARY_VERSION;

pub const CSV_SCHEMA: u32 = 1;
pub const SUMMARY_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    pub fn new(seed: u64, config_hash: String) -> Self {
        Self { version: LIBRARY_VERSION.to_string(), seed, config_hash }
    }

    fn comment(&self, kind: &str) -> String {
        format!(
            "# chdim {} kind={kind} schema={CSV_SCHEMA} seed={} config_hash={}\n",
            self.version, self.seed, self.config_hash
        )
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, Failure> {
    std::fs::write(&path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    meta: &Meta,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, Failure> {
    let kind = name.trim_end_matches(".csv");
    let mut text = meta.comment(kind);
    text.push_str(&header.join(","));
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    write(dir.join(name), &text)
}

/// Text or TOML file; `body` lines follow the metadata comment.
pub fn write_report(dir: &Path, name: &str, meta: &Meta, body: &str) -> Result<PathBuf, Failure> {
    let kind = name.split('.').next().unwrap_or(name);
    let mut text = meta.comment(kind);
    text.push_str(body);
    if !body.ends_with('\n') {
        text.push('\n');
    }
    write(dir.join(name), &text)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format: &'static str,
    schema: u32,
    kind: &'a str,
    #[serde(flatten)]
    meta: &'a Meta,
    result: &'a T,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, meta: &Meta, value: &T) -> Result<PathBuf, Failure> {
    let env = Envelope {
        format: "chdim-summary",
        schema: SUMMARY_SCHEMA,
        kind: name.trim_end_matches(".json"),
        meta,
        result: value,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Failure::usage(format!("summary: {e}")))?;
    text.push('\n');
    write(dir.join(name), &text)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn lines<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().fold(String::new(), |mut s, l| {
        let _ = writeln!(s, "{l}");
        s
    })
}
