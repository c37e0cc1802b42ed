//! LZ78 dictionary size of discretized sequences.
//!
//! Parsing rule: starting from the empty phrase, extend the current phrase
//! by one symbol while the extension is already in the dictionary; when it
//! is not, insert it and restart from the empty phrase. A trailing phrase
//! that is already in the dictionary adds nothing. The score is the number
//! of inserted phrases.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const DEFAULT_LEVELS: usize = 10;

/// Number of LZ78 phrases in `symbols`.
pub fn lz78_phrases<T: Copy + Eq + std::hash::Hash>(symbols: &[T]) -> usize {
    let mut trie: HashMap<(usize, T), usize> = HashMap::with_capacity(symbols.len() / 2 + 1);
    let mut node = 0;
    for &s in symbols {
        match trie.get(&(node, s)) {
            Some(&next) => node = next,
            None => {
                let id = trie.len() + 1;
                trie.insert((node, s), id);
                node = 0;
            }
        }
    }
    trie.len()
}

/// Bin index in `0..levels` over `[lo, hi]`; bins are half-open except the last.
pub fn discretize(values: &[f64], levels: usize) -> Vec<u32> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    values
        .iter()
        .map(|&v| {
            if range <= 0.0 {
                0
            } else {
                (((v - lo) / range * levels as f64).floor() as usize).min(levels - 1) as u32
            }
        })
        .collect()
}

/// Successive differences of a symbol sequence, e.g. `10 12 15 18 → 2 3 3`.
pub fn differences(symbols: &[u32]) -> Vec<i64> {
    symbols.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect()
}

/// LZ78 complexity of a real-valued sequence. A constant sequence scores 1.
pub fn lz_complexity(values: &[f64], levels: usize, traversal_mode: bool) -> Result<usize> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!("LZ needs at least 2 values (got {})", values.len())));
    }
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("LZ needs at least 2 levels (got {levels})")));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!("non-finite value at position {i}")));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Ok(1);
    }
    let symbols = discretize(values, levels);
    Ok(if traversal_mode { lz78_phrases(&differences(&symbols)) } else { lz78_phrases(&symbols) })
}
