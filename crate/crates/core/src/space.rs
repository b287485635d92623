//! Finite-domain feature spaces and instances.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::MAX_FEATURES;

/// A discrete domain value: an integer, a symbol, or a tuple (the values of a
/// contracted feature).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Sym(String),
    Tuple(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (k, v) in vs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Sym(v.to_string())
    }
}

/// One named feature with its ordered list of admissible values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFeatureDef")]
pub struct FeatureDef {
    pub domain: Vec<Value>,
    pub name: String,
    /// Whether LT/LE/GT/GE may be used on this feature.
    pub ordered: bool,
}

#[derive(Deserialize)]
struct RawFeatureDef {
    name: String,
    domain: Vec<Value>,
    ordered: Option<bool>,
}

impl TryFrom<RawFeatureDef> for FeatureDef {
    type Error = Error;

    fn try_from(raw: RawFeatureDef) -> Result<Self> {
        match raw.ordered {
            Some(ordered) => FeatureDef::with_order(raw.name, raw.domain, ordered),
            None => FeatureDef::new(raw.name, raw.domain),
        }
    }
}

impl FeatureDef {
    /// Integer-only domains are ordered by default; anything else is not.
    pub fn new(name: impl Into<String>, domain: Vec<Value>) -> Result<Self> {
        let ordered = domain.iter().all(|v| matches!(v, Value::Int(_)));
        Self::with_order(name, domain, ordered)
    }

    pub fn with_order(name: impl Into<String>, domain: Vec<Value>, ordered: bool) -> Result<Self> {
        let name = name.into();
        if domain.is_empty() {
            return Err(Error::validation(format!("feature '{name}' has an empty domain")));
        }
        let mut seen = HashSet::new();
        for v in &domain {
            if !seen.insert(v) {
                return Err(Error::validation(format!("feature '{name}' repeats domain value {v}")));
            }
        }
        Ok(FeatureDef { domain, name, ordered })
    }

    pub fn cardinality(&self) -> usize {
        self.domain.len()
    }

    pub fn position(&self, v: &Value) -> Option<usize> {
        self.domain.iter().position(|d| d == v)
    }

    /// Compares two values under this feature's ordering: numerically when
    /// both are integers, otherwise by declared domain position.
    pub fn compare(&self, a: &Value, b: &Value) -> Option<Ordering> {
        match (a, b) {
            (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
            _ => Some(self.position(a)?.cmp(&self.position(b)?)),
        }
    }
}

/// Ordered features; a feature's index is its position in the list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDef>", into = "Vec<FeatureDef>")]
pub struct FeatureSpace {
    features: Vec<FeatureDef>,
}

impl TryFrom<Vec<FeatureDef>> for FeatureSpace {
    type Error = Error;

    fn try_from(features: Vec<FeatureDef>) -> Result<Self> {
        FeatureSpace::new(features)
    }
}

impl From<FeatureSpace> for Vec<FeatureDef> {
    fn from(space: FeatureSpace) -> Self {
        space.features
    }
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        if features.len() > MAX_FEATURES {
            return Err(Error::validation(format!(
                "{} features exceed the supported maximum of {MAX_FEATURES}",
                features.len()
            )));
        }
        let mut names = HashSet::new();
        for f in &features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::validation(format!("duplicate feature name '{}'", f.name)));
            }
        }
        Ok(FeatureSpace { features })
    }

    /// Convenience constructor: `n` binary features named `f0..f{n-1}` with domain {0,1}.
    pub fn binary(n: usize) -> Self {
        let features = (0..n)
            .map(|i| FeatureDef::new(format!("f{i}"), vec![Value::Int(0), Value::Int(1)]).unwrap())
            .collect();
        FeatureSpace::new(features).expect("binary space is well formed")
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureDef {
        &self.features[i]
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.features.iter().map(FeatureDef::cardinality).collect()
    }

    /// Total number of points in the input space (saturating).
    pub fn size(&self) -> u128 {
        self.features
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.cardinality() as u128))
    }

    pub fn instance(&self, values: &[Value]) -> Result<Instance> {
        if values.len() != self.len() {
            return Err(Error::validation(format!(
                "instance has {} values but the feature space has {} features",
                values.len(),
                self.len()
            )));
        }
        values
            .iter()
            .zip(&self.features)
            .map(|(v, f)| {
                f.position(v)
                    .ok_or_else(|| Error::validation(format!("value {v} is not in the domain of feature '{}'", f.name)))
            })
            .collect::<Result<Vec<_>>>()
            .map(Instance)
    }

    /// Checks that an index-level instance fits this space.
    pub fn check(&self, x: &Instance) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::validation(format!(
                "instance has {} values but the feature space has {} features",
                x.len(),
                self.len()
            )));
        }
        for (i, (&v, f)) in x.0.iter().zip(&self.features).enumerate() {
            if v >= f.cardinality() {
                return Err(Error::validation(format!(
                    "feature '{}' (index {i}) has domain index {v} outside its {} values",
                    f.name,
                    f.cardinality()
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self, x: &Instance) -> Vec<Value> {
        x.0.iter()
            .zip(&self.features)
            .map(|(&v, f)| f.domain[v].clone())
            .collect()
    }

    /// Iterates over every point of the space in lexicographic index order.
    pub fn points(&self) -> impl Iterator<Item = Instance> + '_ {
        let cards = self.cardinalities();
        let mut current = if cards.contains(&0) {
            None
        } else {
            Some(vec![0usize; cards.len()])
        };
        std::iter::from_fn(move || {
            let out = current.clone()?;
            let next = current.as_mut().unwrap();
            let mut k = cards.len();
            loop {
                if k == 0 {
                    current = None;
                    break;
                }
                k -= 1;
                next[k] += 1;
                if next[k] < cards[k] {
                    break;
                }
                next[k] = 0;
            }
            Some(Instance(out))
        })
    }

    pub fn name_map(&self) -> HashMap<&str, usize> {
        self.features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.as_str(), i))
            .collect()
    }
}

/// A full assignment, stored as one domain index per feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Instance(pub Vec<usize>);

impl Instance {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// The on-disk form of an instance: values in feature order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub values: Vec<Value>,
}

/// A set of domain indices of one feature.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DomainSet {
    words: Vec<u64>,
    len: usize,
}

impl DomainSet {
    pub fn empty(len: usize) -> Self {
        DomainSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = DomainSet::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn singleton(len: usize, i: usize) -> Self {
        let mut s = DomainSet::empty(len);
        s.insert(i);
        s
    }

    pub fn from_predicate(len: usize, pred: impl Fn(usize) -> bool) -> Self {
        let mut s = DomainSet::empty(len);
        for i in (0..len).filter(|&i| pred(i)) {
            s.insert(i);
        }
        s
    }

    pub fn universe_len(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    #[must_use]
    pub fn intersection(&self, other: &DomainSet) -> DomainSet {
        debug_assert_eq!(self.len, other.len);
        DomainSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn intersects(&self, other: &DomainSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// True when every member of `self` is in `other`.
    pub fn is_subset(&self, other: &DomainSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    #[must_use]
    pub fn complement(&self) -> DomainSet {
        let mut out = DomainSet::empty(self.len);
        for i in 0..self.len {
            if !self.contains(i) {
                out.insert(i);
            }
        }
        out
    }
}

impl fmt::Debug for DomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age() -> FeatureDef {
        FeatureDef::new("Age", vec![18.into(), 22.into(), 30.into()]).unwrap()
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(FeatureDef::new("a", vec![]).is_err());
        assert!(FeatureDef::new("a", vec![1.into(), 1.into()]).is_err());
        assert!(FeatureSpace::new(vec![age(), age()]).is_err());
    }

    #[test]
    fn integer_domains_default_to_ordered() {
        assert!(age().ordered);
        let purpose = FeatureDef::new("Purpose", vec!["Car".into(), "Education".into()]).unwrap();
        assert!(!purpose.ordered);
        assert_eq!(age().compare(&Value::Int(22), &Value::Int(20)), Some(Ordering::Greater));
    }

    #[test]
    fn instance_round_trip_and_errors() {
        let space = FeatureSpace::new(vec![age()]).unwrap();
        let x = space.instance(&[Value::Int(22)]).unwrap();
        assert_eq!(x.0, vec![1]);
        assert_eq!(space.values(&x), vec![Value::Int(22)]);
        let err = space.instance(&[Value::Int(21)]).unwrap_err().to_string();
        assert!(err.contains("Age"), "{err}");
        assert!(space.instance(&[]).is_err());
    }

    #[test]
    fn points_enumerates_product() {
        let space = FeatureSpace::new(vec![age(), FeatureDef::new("b", vec![0.into(), 1.into()]).unwrap()]).unwrap();
        let pts: Vec<_> = space.points().collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].0, vec![0, 0]);
        assert_eq!(pts[5].0, vec![2, 1]);
        assert_eq!(space.size(), 6);
    }

    #[test]
    fn feature_json_is_alphabetical() {
        let json = serde_json::to_string(&age()).unwrap();
        assert_eq!(json, r#"{"domain":[18,22,30],"name":"Age","ordered":true}"#);
        let back: FeatureDef = serde_json::from_str(r#"{"name":"Age","domain":[18,22,30]}"#).unwrap();
        assert_eq!(back, age());
    }

    #[test]
    fn domain_set_ops() {
        let a = DomainSet::from_predicate(70, |i| i % 2 == 0);
        let b = DomainSet::from_predicate(70, |i| i >= 60);
        assert_eq!(a.intersection(&b).count(), 5);
        assert_eq!(a.complement().count(), 35);
        assert!(DomainSet::singleton(70, 64).is_subset(&DomainSet::full(70)));
        assert_eq!(b.first(), Some(60));
    }
}
