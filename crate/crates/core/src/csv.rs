//! Minimal RFC 4180 writer with byte-stable float formatting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a real with 17 significant digits in scientific notation.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    columns: usize,
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Table { columns: header.len(), text: String::new() };
        t.push_fields(header.iter().map(|h| h.as_ref().to_string()));
        t
    }

    fn push_fields(&mut self, fields: impl Iterator<Item = String>) {
        let mut n = 0;
        for (i, f) in fields.enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(&quote(&f));
            n += 1;
        }
        assert_eq!(n, self.columns, "row width does not match header");
        self.text.push_str("\r\n");
    }

    pub fn row(&mut self, fields: Vec<String>) {
        self.push_fields(fields.into_iter());
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, &self.text).map_err(|e| Error::io(path, e))
    }
}

/// Splits RFC 4180 text into records; used by tests and config-free readers.
pub fn parse(text: &str) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut row = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match (quoted, c) {
            (true, '"') if chars.peek() == Some(&'"') => {
                chars.next();
                field.push('"');
            }
            (true, '"') => quoted = false,
            (true, c) => field.push(c),
            (false, '"') => quoted = true,
            (false, ',') => row.push(std::mem::take(&mut field)),
            (false, '\r') => {}
            (false, '\n') => {
                row.push(std::mem::take(&mut field));
                rows.push(std::mem::take(&mut row));
            }
            (false, c) => field.push(c),
        }
    }
    if !field.is_empty() || !row.is_empty() {
        row.push(field);
        rows.push(row);
    }
    rows
}

/// Renders `key=value` metadata lines as a comment-free sidecar text.
pub fn metadata(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}
