use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;

/// Frame-level phone ids per utterance, stored as
/// `utterance_id<TAB>space-separated phone ids` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhoneLabels {
    entries: Vec<(String, Vec<u32>)>,
    index: HashMap<String, usize>,
}

impl PhoneLabels {
    pub fn from_entries(entries: Vec<(String, Vec<u32>)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (id, _)) in entries.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate label entry {id:?}")));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn get(&self, utterance_id: &str) -> Option<&[u32]> {
        self.index.get(utterance_id).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn entries(&self) -> &[(String, Vec<u32>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let loc = || format!("{source}:{}", i + 1);
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(loc(), "expected utterance_id<TAB>labels"))?;
            let labels = rest
                .split_whitespace()
                .map(str::parse::<u32>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(loc(), format!("label: {e}")))?;
            entries.push((id.to_string(), labels));
        }
        Self::from_entries(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, labels) in &self.entries {
            let l: Vec<String> = labels.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{id}\t{}", l.join(" "));
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, self.to_text().as_bytes())
    }
}
