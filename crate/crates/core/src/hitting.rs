//! Minimal hitting sets (minimal transversals) of set families.

use crate::subset::{minimal_elements, FeatureSubset};

/// All subset-minimal sets meeting every member of `family`, sorted.
///
/// Berge's incremental algorithm: fold the members in one at a time, keeping
/// only minimal transversals after each step. The empty family has the single
/// transversal ∅; a family containing ∅ has none.
pub fn minimal_hitting_sets(family: &[FeatureSubset]) -> Vec<FeatureSubset> {
    let mut current = vec![FeatureSubset::EMPTY];
    for &edge in family {
        let mut next = Vec::new();
        for &t in &current {
            if t.intersects(edge) {
                next.push(t);
            } else {
                next.extend(edge.iter().map(|i| t.with(i)));
            }
        }
        current = minimal_elements(&next);
        if current.is_empty() {
            break;
        }
    }
    current.sort();
    current
}

/// Exhaustive reference over all subsets of `{0..n-1}`.
pub fn minimal_hitting_sets_bruteforce(family: &[FeatureSubset], n: usize) -> Vec<FeatureSubset> {
    assert!(n <= 20, "exhaustive transversal search is for small n");
    let hits: Vec<FeatureSubset> = (0..1u64 << n)
        .map(FeatureSubset::from_bits)
        .filter(|t| family.iter().all(|e| t.intersects(*e)))
        .collect();
    minimal_elements(&hits)
}
