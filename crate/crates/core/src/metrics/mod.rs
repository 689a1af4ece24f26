//! Token quality against frame-level phone labels, and length statistics.

mod contingency;
mod labels;
mod length;
mod report;
mod scores;

pub use contingency::{joint_counts, joint_counts_from_pairs, ContingencyTable};
pub use labels::PhoneLabels;
pub use length::{length_stats, LengthStats, SplitLengthStats};
pub use report::MetricReport;
pub use scores::{phone_purity, pnmi, token_purity};
