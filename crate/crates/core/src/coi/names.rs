//! Author-name normalization and matching.

use deunicode::deunicode;
use serde::{Deserialize, Serialize};

/// Lowercased, ASCII-folded, `given surname` form of a person name.
///
/// A `Surname, Given` comma form is reordered. Periods become spaces, DBLP
/// homonym suffixes (`0001`) are dropped and whitespace is collapsed.
pub fn normalize_name(name: &str) -> String {
    let folded = deunicode(name).to_lowercase().replace('.', " ");
    let reordered = match folded.split_once(',') {
        Some((surname, given)) if !given.trim().is_empty() => format!("{given} {surname}"),
        Some((surname, _)) => surname.to_string(),
        None => folded,
    };
    reordered
        .split_whitespace()
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Surname plus given-name initial; two names match iff their keys are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NameKey {
    pub surname: String,
    pub initial: Option<char>,
}

impl NameKey {
    pub fn of(name: &str) -> Option<NameKey> {
        let norm = normalize_name(name);
        let mut tokens: Vec<&str> = norm.split(' ').filter(|t| !t.is_empty()).collect();
        let surname = tokens.pop()?.to_string();
        let initial = tokens.first().and_then(|t| t.chars().next());
        Some(NameKey { surname, initial })
    }
}

pub fn names_match(a: &str, b: &str) -> bool {
    match (NameKey::of(a), NameKey::of(b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}
