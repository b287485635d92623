//! Propagating axioms as equations over unknown scores.
//!
//! Every score β_i(M) over a list of families is an unknown. Null Feature,
//! Symmetry and the equality clause of Minimal Monotonicity identify
//! unknowns with each other (or with 0); C-Efficiency gives one linear
//! equation per family. Equations with a single unknown class left are
//! solved until nothing changes. A fully determined equation that does not
//! balance is a contradiction: no aggregator satisfies the axioms.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::{show_family, EfficiencyTarget};
use crate::enumerate::ExplanationSet;
use crate::indices::rational;
use crate::subset::FeatureSubset;
use crate::transform::Permutation;

/// The derivation log of a consistency run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub lines: Vec<String>,
}

impl Transcript {
    fn log(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    pub fn last(&self) -> Option<&str> {
        self.lines.last().map(String::as_str)
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Consistency {
    pub target: EfficiencyTarget,
    pub families: usize,
    pub variables: usize,
    /// Unknowns whose value the axioms pin down.
    pub determined: usize,
    pub contradiction: Option<String>,
    pub transcript: Transcript,
    #[serde(skip)]
    values: Vec<Option<BigRational>>,
    #[serde(skip)]
    n: usize,
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        self.contradiction.is_none()
    }

    /// The value forced on β_i of the `family`-th family, if any.
    pub fn forced(&self, family: usize, i: usize) -> Option<&BigRational> {
        self.values.get(family * self.n + i)?.as_ref()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Merges the classes; the smaller root survives. False if already merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
        true
    }
}

fn beta(i: usize, f: &ExplanationSet) -> String {
    format!("β_{i}({})", show_family(f))
}

/// Runs the engine with Minimal Monotonicity, Symmetry, Null Feature and
/// `target`-Efficiency over `families` (all over the same feature count).
pub fn check_consistency(families: &[ExplanationSet], target: EfficiencyTarget) -> Consistency {
    let n = families.first().map_or(0, |f| f.n);
    assert!(families.iter().all(|f| f.n == n), "families must share a feature count");
    let vars = families.len() * n;
    // The last slot is the constant 0.
    let zero = vars;
    let var = |k: usize, i: usize| k * n + i;
    let mut uf = UnionFind::new(vars + 1);
    let mut t = Transcript::default();
    t.log(format!(
        "axioms: minimal monotonicity, symmetry, null feature, {}-efficiency over {} families on {n} features",
        target.name(),
        families.len()
    ));

    for (k, f) in families.iter().enumerate() {
        let null: Vec<usize> = (0..n).filter(|&i| f.containing(i).next().is_none()).collect();
        for &i in &null {
            uf.union(var(k, i), zero);
        }
        if !null.is_empty() && null.len() < n {
            t.log(format!("null feature: on {} features {null:?} score 0", show_family(f)));
        }
    }

    let index: HashMap<&[FeatureSubset], usize> = families
        .iter()
        .enumerate()
        .map(|(k, f)| (f.axps.as_slice(), k))
        .collect();
    let perms = Permutation::all(n);
    for (k, f) in families.iter().enumerate() {
        for pi in &perms {
            let mut image: Vec<FeatureSubset> = f.axps.iter().map(|s| pi.permute_subset(*s)).collect();
            image.sort();
            let Some(&g) = index.get(image.as_slice()) else {
                continue;
            };
            for i in 0..n {
                if uf.union(var(k, i), var(g, pi.apply(i))) {
                    t.log(format!(
                        "symmetry under π={:?}: {} = {}",
                        pi.as_slice(),
                        beta(i, f),
                        beta(pi.apply(i), &families[g])
                    ));
                }
            }
        }
    }

    let mut by_members: BTreeMap<(usize, Vec<FeatureSubset>), Vec<usize>> = BTreeMap::new();
    for (k, f) in families.iter().enumerate() {
        for i in 0..n {
            by_members.entry((i, f.containing(i).collect())).or_default().push(k);
        }
    }
    for ((i, members), ks) in &by_members {
        if members.is_empty() {
            continue;
        }
        for &k in &ks[1..] {
            if uf.union(var(ks[0], *i), var(k, *i)) {
                t.log(format!(
                    "minimal monotonicity (equal M_{i} = {members:?}): {} = {}",
                    beta(*i, &families[ks[0]]),
                    beta(*i, &families[k])
                ));
            }
        }
    }

    let mut value: HashMap<usize, BigRational> = HashMap::new();
    let zero_root = uf.find(zero);
    value.insert(zero_root, BigRational::zero());
    let mut contradiction = None;
    let mut changed = true;
    'outer: while changed {
        changed = false;
        for (k, f) in families.iter().enumerate() {
            let required = target.value(f);
            let mut known = BigRational::zero();
            let mut unknown: BTreeMap<usize, i64> = BTreeMap::new();
            for i in 0..n {
                let r = uf.find(var(k, i));
                match value.get(&r) {
                    Some(v) => known += v,
                    None => *unknown.entry(r).or_default() += 1,
                }
            }
            match unknown.len() {
                0 if known != required => {
                    let msg = format!(
                        "efficiency on {}: forced sum = {known}, required = {required}, contradiction",
                        show_family(f)
                    );
                    t.log(msg.clone());
                    contradiction = Some(msg);
                    break 'outer;
                }
                1 => {
                    let (&root, &coef) = unknown.iter().next().expect("one unknown");
                    let v = (&required - &known) / rational(coef, 1);
                    let members: Vec<String> = (0..n)
                        .filter(|&i| uf.find(var(k, i)) == root)
                        .map(|i| format!("β_{i}"))
                        .collect();
                    t.log(format!(
                        "efficiency on {}: {} = ({required} - {known}) / {coef} = {v}",
                        show_family(f),
                        members.join(" = ")
                    ));
                    value.insert(root, v);
                    changed = true;
                }
                _ => {}
            }
        }
    }

    let values: Vec<Option<BigRational>> = (0..vars).map(|v| value.get(&uf.find(v)).cloned()).collect();
    let determined = values.iter().filter(|v| v.is_some()).count();
    if contradiction.is_none() {
        t.log(format!("no contradiction; {determined} of {vars} scores determined"));
    }
    Consistency {
        target,
        families: families.len(),
        variables: vars,
        determined,
        contradiction,
        transcript: t,
        values,
        n,
    }
}

/// No aggregator satisfies Minimal Monotonicity, Symmetry, Null Feature and
/// 1-Efficiency: the engine run on the two families {{0,1}} and
/// {{0,1},{2,3}} over four features.
pub fn demonstrate_impossibility() -> Transcript {
    let pair = |a: usize, b: usize| FeatureSubset::from_indices([a, b]);
    let families = [
        ExplanationSet::from_axps(4, vec![pair(0, 1)]),
        ExplanationSet::from_axps(4, vec![pair(0, 1), pair(2, 3)]),
    ];
    check_consistency(&families, EfficiencyTarget::One).transcript
}
