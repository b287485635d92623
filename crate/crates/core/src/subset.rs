//! Sets of feature indices.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest feature count a [`FeatureSubset`] can address.
pub const MAX_FEATURES: usize = 64;

/// A set of feature indices in `0..64`, stored as a bitmask.
///
/// Ordering is lexicographic over the ascending index lists, so sorted
/// collections of subsets print the way they read (`[0,1] < [1] < [2]`).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FeatureSubset(u64);

impl FeatureSubset {
    pub const EMPTY: FeatureSubset = FeatureSubset(0);

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_FEATURES, "at most {MAX_FEATURES} features");
        if n == MAX_FEATURES {
            FeatureSubset(u64::MAX)
        } else {
            FeatureSubset((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        FeatureSubset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_FEATURES);
        FeatureSubset(1u64 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(FeatureSubset::EMPTY, |s, i| s.with(i))
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_FEATURES && self.0 & (1u64 << i) != 0
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        assert!(i < MAX_FEATURES);
        FeatureSubset(self.0 | (1u64 << i))
    }

    #[must_use]
    pub fn without(self, i: usize) -> Self {
        if i >= MAX_FEATURES {
            return self;
        }
        FeatureSubset(self.0 & !(1u64 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: FeatureSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset(self, other: FeatureSubset) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn intersects(self, other: FeatureSubset) -> bool {
        self.0 & other.0 != 0
    }

    #[must_use]
    pub fn union(self, other: FeatureSubset) -> Self {
        FeatureSubset(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: FeatureSubset) -> Self {
        FeatureSubset(self.0 & other.0)
    }

    #[must_use]
    pub fn difference(self, other: FeatureSubset) -> Self {
        FeatureSubset(self.0 & !other.0)
    }

    /// Complement relative to `{0..n-1}`.
    #[must_use]
    pub fn complement(self, n: usize) -> Self {
        FeatureSubset::full(n).difference(self)
    }

    /// Largest index plus one, or 0 for the empty set.
    pub fn span(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Relabels every member `i` as `map(i)`.
    #[must_use]
    pub fn map(self, map: impl Fn(usize) -> usize) -> Self {
        FeatureSubset::from_indices(self.iter().map(map))
    }
}

impl Ord for FeatureSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for FeatureSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for FeatureSubset {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        FeatureSubset::from_indices(iter)
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        if let Some(bad) = indices.iter().find(|&&i| i >= MAX_FEATURES) {
            return Err(serde::de::Error::custom(format!("feature index {bad} out of range")));
        }
        Ok(FeatureSubset::from_indices(indices))
    }
}

/// Keeps only the members that have no proper subset in the family, then sorts.
pub fn minimal_elements(family: &[FeatureSubset]) -> Vec<FeatureSubset> {
    let mut out: Vec<FeatureSubset> = family
        .iter()
        .copied()
        .filter(|s| !family.iter().any(|t| t.is_proper_subset(*s)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// True when no member of the family contains another.
pub fn is_antichain(family: &[FeatureSubset]) -> bool {
    family
        .iter()
        .enumerate()
        .all(|(a, s)| family.iter().enumerate().all(|(b, t)| a == b || !s.is_subset(*t)))
}
