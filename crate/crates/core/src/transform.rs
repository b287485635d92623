//! Feature relabeling and feature contraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Condition, Model, Predicate};
use crate::space::{FeatureDef, FeatureSpace, Instance, Value};
use crate::subset::FeatureSubset;

/// Upper bound on the domain size of a contracted feature.
pub const MAX_CONTRACTED_DOMAIN: usize = 1 << 16;

/// A bijection on `0..n`; feature `i` moves to position `mapping[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(mapping: Vec<usize>) -> Result<Self> {
        Permutation::new(mapping)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.mapping
    }
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::validation(format!(
                    "mapping {mapping:?} is not a bijection on 0..{n}"
                )));
            }
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.swap(a, b);
        Permutation { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    /// Moves each entry `v[i]` to position `π(i)`.
    pub fn permute_vec<T: Clone>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.mapping.len());
        let mut out: Vec<Option<T>> = vec![None; v.len()];
        for (i, item) in v.iter().enumerate() {
            out[self.mapping[i]] = Some(item.clone());
        }
        out.into_iter().map(Option::unwrap).collect()
    }

    pub fn permute_subset(&self, s: FeatureSubset) -> FeatureSubset {
        s.map(|i| self.mapping[i])
    }

    /// Every permutation of `0..n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation { mapping: cur.clone() });
            // next lexicographic permutation
            let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| cur[k] < cur[k + 1]) else {
                break;
            };
            let l = (k + 1..n).rev().find(|&l| cur[k] < cur[l]).unwrap();
            cur.swap(k, l);
            cur[k + 1..].reverse();
        }
        out
    }
}

/// A relabeled problem: the model reads feature `π(i)` wherever the
/// original read feature `i`.
#[derive(Clone, Debug)]
pub struct Permuted {
    pub space: FeatureSpace,
    pub model: Model,
    pub instance: Instance,
}

/// Relabels features by `pi`, returning `(π⁻¹f, πx)` together with the
/// permuted space, so that the new model at `πx` predicts what `f` did at `x`.
pub fn permute(model: &Model, space: &FeatureSpace, x: &Instance, pi: &Permutation) -> Result<Permuted> {
    if pi.len() != space.len() {
        return Err(Error::validation(format!(
            "permutation over {} indices applied to {} features",
            pi.len(),
            space.len()
        )));
    }
    space.check(x)?;
    let space = FeatureSpace::new(pi.permute_vec(space.features()))?;
    let model = model.map_conditions(&|c| Condition::new(pi.apply(c.feature), c.predicate.clone()));
    let instance = Instance(pi.permute_vec(x.as_slice()));
    Ok(Permuted { space, model, instance })
}

/// A problem in which the features of `members` were merged into one
/// product-domain feature.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub space: FeatureSpace,
    pub model: Model,
    pub instance: Instance,
    /// The merged features, ascending.
    pub members: FeatureSubset,
    /// Index of the merged feature in the contracted space.
    pub merged: usize,
    /// `old_to_new[i]` is the contracted index holding old feature `i`.
    pub old_to_new: Vec<usize>,
    old_cards: Vec<usize>,
}

impl Contraction {
    fn tuple_index(&self, x: &[usize]) -> usize {
        self.members.iter().fold(0, |acc, m| acc * self.old_cards[m] + x[m])
    }

    /// Maps an instance of the original space to the contracted space.
    pub fn contract_instance(&self, x: &Instance) -> Instance {
        let n_new = self.space.len();
        let mut out = vec![0; n_new];
        for (i, &v) in x.as_slice().iter().enumerate() {
            if !self.members.contains(i) {
                out[self.old_to_new[i]] = v;
            }
        }
        out[self.merged] = self.tuple_index(x.as_slice());
        Instance(out)
    }

    /// Inverse of [`Contraction::contract_instance`].
    pub fn expand_instance(&self, y: &Instance) -> Instance {
        let n_old = self.old_cards.len();
        let mut out = vec![0; n_old];
        for (i, o) in out.iter_mut().enumerate() {
            if !self.members.contains(i) {
                *o = y.get(self.old_to_new[i]);
            }
        }
        let mut t = y.get(self.merged);
        let members: Vec<usize> = self.members.to_vec();
        for &m in members.iter().rev() {
            out[m] = t % self.old_cards[m];
            t /= self.old_cards[m];
        }
        Instance(out)
    }

    /// Maps a set of contracted features back to the original features.
    pub fn expand_subset(&self, s: FeatureSubset) -> FeatureSubset {
        let mut out = FeatureSubset::EMPTY;
        for (old, &new) in self.old_to_new.iter().enumerate() {
            if s.contains(new) {
                out = out.with(old);
            }
        }
        out
    }
}

/// Index layout after merging `members` (non-empty, within `0..n`): returns
/// `old_to_new` and the index of the merged feature, which sits where the
/// smallest member was.
pub fn contraction_index_map(n: usize, members: FeatureSubset) -> (Vec<usize>, usize) {
    let first = members.iter().next().expect("non-empty contraction set");
    let mut old_to_new = vec![0; n];
    let mut next = 0;
    for (i, slot) in old_to_new.iter_mut().enumerate() {
        if members.contains(i) && i != first {
            continue;
        }
        *slot = next;
        next += 1;
    }
    let merged = old_to_new[first];
    for m in members.iter() {
        old_to_new[m] = merged;
    }
    (old_to_new, merged)
}

/// Replaces the features in `members` (at least two) by a single feature
/// `[T]` whose domain is the product of theirs. The merged feature takes
/// the position of the smallest member; conditions on members become
/// `in`-set conditions on `[T]`.
pub fn contract(model: &Model, space: &FeatureSpace, x: &Instance, members: FeatureSubset) -> Result<Contraction> {
    let n = space.len();
    if members.len() < 2 {
        return Err(Error::validation(format!(
            "contraction needs at least two features, got {}",
            members.len()
        )));
    }
    if members.span() > n {
        return Err(Error::validation(format!(
            "contraction set {members} out of range for {n} features"
        )));
    }
    space.check(x)?;
    let member_list = members.to_vec();
    let size = member_list
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(space.feature(m).cardinality()))
        .filter(|&s| s <= MAX_CONTRACTED_DOMAIN)
        .ok_or_else(|| Error::validation(format!("contracted domain exceeds {MAX_CONTRACTED_DOMAIN} values")))?;
    let merged = member_list[0];
    let (old_to_new, merged_new) = contraction_index_map(n, members);
    let old_cards = space.cardinalities();

    // Product domain, first member most significant.
    let tuples: Vec<Vec<usize>> = (0..size)
        .map(|mut t| {
            let mut idx = vec![0; member_list.len()];
            for (k, &m) in member_list.iter().enumerate().rev() {
                idx[k] = t % old_cards[m];
                t /= old_cards[m];
            }
            idx
        })
        .collect();
    let domain: Vec<Value> = tuples
        .iter()
        .map(|idx| {
            Value::Tuple(
                idx.iter()
                    .zip(&member_list)
                    .map(|(&v, &m)| space.feature(m).domain[v].clone())
                    .collect(),
            )
        })
        .collect();
    let name = format!(
        "[{}]",
        member_list
            .iter()
            .map(|&m| space.feature(m).name.as_str())
            .collect::<Vec<_>>()
            .join(",")
    );
    let mut features = Vec::with_capacity(n - member_list.len() + 1);
    for i in 0..n {
        if i == merged {
            features.push(FeatureDef::with_order(name.clone(), domain.clone(), false)?);
        } else if !members.contains(i) {
            features.push(space.feature(i).clone());
        }
    }
    let new_space = FeatureSpace::new(features)?;

    let new_model = model.map_conditions(&|c| {
        if let Some(k) = member_list.iter().position(|&m| m == c.feature) {
            let def = space.feature(c.feature);
            let allowed = tuples
                .iter()
                .zip(&domain)
                .filter(|(idx, _)| c.holds(def, idx[k]))
                .map(|(_, v)| v.clone())
                .collect();
            Condition::new(merged_new, Predicate::In(allowed))
        } else {
            Condition::new(old_to_new[c.feature], c.predicate.clone())
        }
    });

    let mut c = Contraction {
        space: new_space,
        model: new_model,
        instance: Instance(vec![]),
        members,
        merged: merged_new,
        old_to_new,
        old_cards,
    };
    c.instance = c.contract_instance(x);
    Ok(c)
}
