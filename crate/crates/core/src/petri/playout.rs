use std::collections::{BTreeSet, HashSet};

use super::{Marking, PetriNet};
use crate::error::{Error, Result};
use crate::log::Variant;

/// Per-place token bound used when simulating ground-truth systems.
pub const DEFAULT_TOKEN_CAP: u32 = 3;
/// Default limit on search-state expansions.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlayoutOptions {
    /// Maximum number of visible labels per variant.
    pub max_len: usize,
    /// States with more tokens than this in any place are pruned.
    /// `u32::MAX` disables the bound.
    pub token_cap: u32,
    /// Maximum number of expanded search states.
    pub budget: u64,
}

impl PlayoutOptions {
    pub fn new(max_len: usize) -> Self {
        PlayoutOptions {
            max_len,
            token_cap: DEFAULT_TOKEN_CAP,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn token_cap(mut self, cap: u32) -> Self {
        self.token_cap = cap;
        self
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

/// All variants the net can play out within `max_len` visible steps while
/// no place exceeds `token_cap` tokens. Uses the default expansion budget.
pub fn playout_enumerate(net: &PetriNet, max_len: usize, token_cap: u32) -> Result<BTreeSet<Variant>> {
    playout_with(net, &PlayoutOptions::new(max_len).token_cap(token_cap))
}

/// Exhaustive depth-first search over (marking, emitted prefix) states.
///
/// A variant is recorded whenever a final marking is reached with a
/// non-empty prefix. Nets without final markings record a variant at every
/// deadlock instead (permissive playout). Silent transitions move tokens
/// without extending the prefix; revisiting a state is skipped, which also
/// cuts silent cycles.
pub fn playout_with(net: &PetriNet, opts: &PlayoutOptions) -> Result<BTreeSet<Variant>> {
    if opts.max_len == 0 {
        return Err(Error::invalid("playout max_len must be positive"));
    }
    let permissive = net.final_markings().is_empty();
    let mut found: HashSet<Vec<u32>> = HashSet::new();
    let mut visited: HashSet<(Marking, Vec<u32>)> = HashSet::new();
    let mut stack: Vec<(Marking, Vec<u32>)> = Vec::new();
    let mut expansions: u64 = 0;

    let start = (net.initial_marking().clone(), Vec::new());
    if net.initial_marking().max_tokens() <= opts.token_cap {
        visited.insert(start.clone());
        stack.push(start);
    }

    while let Some((marking, prefix)) = stack.pop() {
        expansions += 1;
        if expansions > opts.budget {
            return Err(Error::Budget {
                limit: opts.budget,
                found: found.len(),
            });
        }
        let enabled = net.enabled(&marking);
        if !prefix.is_empty() && (net.is_final(&marking) || (permissive && enabled.is_empty())) {
            found.insert(prefix.clone());
        }
        // reverse so that lower-indexed transitions are explored first
        for &t in enabled.iter().rev() {
            let label = net.label_index(t);
            if label.is_some() && prefix.len() >= opts.max_len {
                continue;
            }
            let next = net.fire_unchecked(&marking, t);
            if next.max_tokens() > opts.token_cap {
                continue;
            }
            let mut next_prefix = prefix.clone();
            if let Some(l) = label {
                next_prefix.push(l as u32);
            }
            let state = (next, next_prefix);
            if visited.contains(&state) {
                continue;
            }
            visited.insert(state.clone());
            stack.push(state);
        }
    }

    let alphabet = net.alphabet();
    Ok(found
        .into_iter()
        .map(|p| {
            Variant::new(p.into_iter().map(|l| alphabet[l as usize].clone()).collect())
                .expect("recorded prefixes are non-empty")
        })
        .collect())
}
