use std::fmt::Write as _;

use super::contingency::ContingencyTable;
use super::scores::{phone_purity, pnmi, token_purity};
use crate::error::Result;

/// Clustering quality of one token inventory against phone labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub num_tokens: usize,
    pub num_phones: usize,
    pub num_frames: u64,
    pub phone_purity: f64,
    pub token_purity: f64,
    pub pnmi: f64,
}

impl MetricReport {
    pub fn from_table(table: &ContingencyTable) -> Result<Self> {
        Ok(Self {
            num_tokens: table.num_tokens(),
            num_phones: table.num_phones(),
            num_frames: table.total(),
            phone_purity: phone_purity(table)?,
            token_purity: token_purity(table)?,
            pnmi: pnmi(table)?,
        })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>8} {:>8} {:>8} {:>8}", "k", "phn_pur", "dsc_pur", "PNMI");
        let _ = writeln!(
            out,
            "{:>8} {:>8.3} {:>8.3} {:>8.3}",
            self.num_tokens, self.phone_purity, self.token_purity, self.pnmi
        );
        out
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "num_tokens={}\nnum_phones={}\nnum_frames={}\nphone_purity={}\ntoken_purity={}\npnmi={}\n",
            self.num_tokens, self.num_phones, self.num_frames, self.phone_purity, self.token_purity, self.pnmi
        )
    }
}
