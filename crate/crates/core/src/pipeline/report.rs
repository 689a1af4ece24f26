use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::fsutil;

/// Command output: a human-readable block plus `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub text: String,
    pub values: Vec<(String, String)>,
}

impl Report {
    pub fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    pub fn value(&mut self, key: &str, value: impl ToString) {
        self.values.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, self.to_key_values().as_bytes())
    }
}
