//! Shared text primitives: tokenization, sentence splitting, overlap
//! scores, and a stable 64-bit hash.
//!
//! Everything here is pure and platform-independent; the offline providers
//! and the judge depend on that.

use std::collections::{BTreeMap, BTreeSet};

/// Unique lowercased tokens, split on every non-alphanumeric character.
pub(crate) fn tokens(text: &str) -> BTreeSet<String> {
    split_tokens(text).collect()
}

/// Lowercased tokens with multiplicity.
pub(crate) fn token_counts(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in split_tokens(text) {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

fn split_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Size of the intersection of the two unique token sets.
pub(crate) fn token_overlap(a: &str, b: &str) -> usize {
    let ta = tokens(a);
    let tb = tokens(b);
    ta.intersection(&tb).count()
}

/// Multiset token F1 between a candidate and a reference; empty-vs-empty is
/// 1, empty-vs-nonempty is 0.
pub(crate) fn token_f1(candidate: &str, reference: &str) -> f64 {
    let ca = token_counts(candidate);
    let cb = token_counts(reference);
    let total_a: usize = ca.values().sum();
    let total_b: usize = cb.values().sum();
    if total_a == 0 && total_b == 0 {
        return 1.0;
    }
    if total_a == 0 || total_b == 0 {
        return 0.0;
    }
    let shared: usize = ca
        .iter()
        .map(|(t, &n)| n.min(cb.get(t).copied().unwrap_or(0)))
        .sum();
    if shared == 0 {
        return 0.0;
    }
    let precision = shared as f64 / total_a as f64;
    let recall = shared as f64 / total_b as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Naive sentence split on `.`, `?`, and `!`, delimiters dropped,
/// whitespace trimmed, empties skipped.
pub(crate) fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if matches!(c, '.' | '?' | '!') {
            let trimmed = current.trim();
            if !trimmed.is_empty() {
                out.push(trimmed.to_string());
            }
            current.clear();
        } else {
            current.push(c);
        }
    }
    let trimmed = current.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
    out
}

/// FNV-1a, 64-bit. Stable everywhere, unlike the std hasher.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
