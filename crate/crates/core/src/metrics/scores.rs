use super::contingency::ContingencyTable;
use crate::error::{Error, Result};

fn nonempty(table: &ContingencyTable) -> Result<f64> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    Ok(table.total() as f64)
}

/// Phone purity: Σ_t max_y p(t, y).
pub fn phone_purity(table: &ContingencyTable) -> Result<f64> {
    let n = nonempty(table)?;
    let hits: u64 = (0..table.num_tokens())
        .map(|t| table.row(t).iter().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / n)
}

/// Discrete token purity: Σ_y max_t p(t, y).
pub fn token_purity(table: &ContingencyTable) -> Result<f64> {
    let n = nonempty(table)?;
    let mut best = vec![0u64; table.num_phones()];
    for t in 0..table.num_tokens() {
        for (b, &c) in best.iter_mut().zip(table.row(t)) {
            *b = (*b).max(c);
        }
    }
    Ok(best.iter().sum::<u64>() as f64 / n)
}

/// Phone-normalized mutual information I(token; phone) / H(phone), in nats.
pub fn pnmi(table: &ContingencyTable) -> Result<f64> {
    let n = nonempty(table)?;
    let rows = table.token_marginals();
    let cols = table.phone_marginals();

    // I and H(phone) are accumulated over the same cells in the same order,
    // so when every token maps to a single phone (r == c) the terms agree
    // bit for bit and the ratio is exactly 1.
    let total = table.total() as u128;
    let mut mi = 0.0;
    let mut h_phone = 0.0;
    for (t, &r) in rows.iter().enumerate() {
        if r == 0 {
            continue;
        }
        for (y, &s) in cols.iter().enumerate() {
            let c = table.get(t, y);
            if c == 0 {
                continue;
            }
            let w = c as f64 / n;
            let ratio = (c as u128 * total) as f64 / (r as u128 * s as u128) as f64;
            mi += w * ratio.ln();
            h_phone += w * (n / s as f64).ln();
        }
    }
    if h_phone <= 0.0 {
        return Err(Error::DegeneratePhoneDistribution);
    }
    Ok((mi / h_phone).clamp(0.0, 1.0))
}
