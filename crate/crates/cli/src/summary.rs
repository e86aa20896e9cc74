//! Machine-readable `key=value` run summaries.

use std::fmt::Write as _;

/// Ordered key/value pairs; floats use 17 significant digits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn number(&mut self, key: impl Into<String>, value: f64) {
        self.text(key, format!("{value:.16e}"));
    }

    pub fn count(&mut self, key: impl Into<String>, value: usize) {
        self.text(key, value.to_string());
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.text(key, if value { "pass" } else { "fail" });
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}
