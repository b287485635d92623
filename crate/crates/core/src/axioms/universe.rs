//! Every explanation family over a small feature set.

use crate::enumerate::ExplanationSet;
use crate::error::{Error, Result};
use crate::subset::FeatureSubset;

pub const DEFAULT_UNIVERSE_N: usize = 4;
pub const MAX_UNIVERSE_N: usize = 6;

/// Streams all antichains of nonempty subsets of `{0..n-1}` with at most
/// `max_axps` members, as complete explanation sets over `n` features.
///
/// The first item is the constant-model family `{∅}`. The rest are in
/// depth-first order over ascending bitmasks.
pub fn universe(n: usize, max_axps: Option<usize>) -> Result<Universe> {
    if n > MAX_UNIVERSE_N {
        return Err(Error::validation(format!(
            "universe over {n} features exceeds the cap of {MAX_UNIVERSE_N}"
        )));
    }
    Ok(Universe {
        n,
        max_axps: max_axps.unwrap_or(usize::MAX),
        chosen: Vec::new(),
        next: vec![1],
        started: false,
    })
}

/// Number of families [`universe`] yields.
pub fn universe_count(n: usize, max_axps: Option<usize>) -> Result<usize> {
    Ok(universe(n, max_axps)?.count())
}

pub struct Universe {
    n: usize,
    max_axps: usize,
    chosen: Vec<u64>,
    /// `next[d]` is the next candidate mask to try at depth `d`.
    next: Vec<u64>,
    started: bool,
}

impl Iterator for Universe {
    type Item = ExplanationSet;

    fn next(&mut self) -> Option<ExplanationSet> {
        if !self.started {
            self.started = true;
            return Some(ExplanationSet::from_axps(self.n, vec![FeatureSubset::EMPTY]));
        }
        let end = 1u64 << self.n;
        loop {
            let depth = self.chosen.len();
            let cand = self.next[depth];
            if cand >= end {
                if depth == 0 {
                    return None;
                }
                self.chosen.pop();
                self.next.pop();
                continue;
            }
            self.next[depth] += 1;
            let incomparable = self.chosen.iter().all(|&c| c & cand != c && c & cand != cand);
            if depth < self.max_axps && incomparable {
                self.chosen.push(cand);
                self.next.push(cand + 1);
                let axps = self.chosen.iter().map(|&b| FeatureSubset::from_bits(b)).collect();
                return Some(ExplanationSet::from_axps(self.n, axps));
            }
        }
    }
}
