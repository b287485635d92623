//! Deciding whether fixing a feature subset to its values at `x` forces the
//! model's prediction.
//!
//! Two independent procedures live here. The structural one walks rules,
//! tree paths and gate branches over per-feature value sets ("regions") and
//! looks for a reachable region with the opposite class. The exhaustive one
//! enumerates every completion of the free features and evaluates the model
//! point by point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Classifier, Model, TreeNode};
use crate::space::{DomainSet, FeatureSpace, Instance, InstanceFile};
use crate::subset::FeatureSubset;

/// Default bound on completions enumerated by the exhaustive oracle.
pub const DEFAULT_ORACLE_CAP: u128 = 1 << 22;

/// Per-feature sets of still-possible values.
pub type Region = Vec<DomainSet>;

/// A model with every condition pre-resolved to a domain mask.
#[derive(Clone, Debug)]
pub(crate) enum Compiled {
    Rules(Vec<Vec<(usize, DomainSet)>>),
    Tree(Vec<CompiledNode>),
    Gated(Box<Compiled>, Box<Compiled>, Box<Compiled>),
}

#[derive(Clone, Debug)]
pub(crate) enum CompiledNode {
    Split {
        feature: usize,
        mask: DomainSet,
        if_true: usize,
        if_false: usize,
    },
    Leaf(bool),
}

impl Compiled {
    /// Assumes a validated model.
    pub(crate) fn new(model: &Model, space: &FeatureSpace) -> Compiled {
        match model {
            Model::RuleSet { rules } => Compiled::Rules(
                rules
                    .iter()
                    .map(|rule| {
                        let mut merged: Vec<(usize, DomainSet)> = Vec::new();
                        for c in rule {
                            let m = c.mask(space.feature(c.feature));
                            match merged.iter_mut().find(|(f, _)| *f == c.feature) {
                                Some((_, prev)) => *prev = prev.intersection(&m),
                                None => merged.push((c.feature, m)),
                            }
                        }
                        merged.sort_by_key(|(f, _)| *f);
                        merged
                    })
                    .collect(),
            ),
            Model::DecisionTree { nodes } => Compiled::Tree(
                nodes
                    .iter()
                    .map(|n| match n {
                        TreeNode::Leaf { class } => CompiledNode::Leaf(*class == 1),
                        TreeNode::Split {
                            condition,
                            if_true,
                            if_false,
                        } => CompiledNode::Split {
                            feature: condition.feature,
                            mask: condition.mask(space.feature(condition.feature)),
                            if_true: *if_true,
                            if_false: *if_false,
                        },
                    })
                    .collect(),
            ),
            Model::Gated {
                gate,
                on_true,
                on_false,
            } => Compiled::Gated(
                Box::new(Compiled::new(gate, space)),
                Box::new(Compiled::new(on_true, space)),
                Box::new(Compiled::new(on_false, space)),
            ),
        }
    }

    /// Calls `found` on sub-regions of `region` on which the model outputs
    /// `target` everywhere, until `found` returns true. Together the visited
    /// regions cover every such point. Returns whether `found` stopped the walk.
    pub(crate) fn visit(&self, target: bool, region: &Region, found: &mut dyn FnMut(&Region) -> bool) -> bool {
        match self {
            Compiled::Rules(rules) if target => rules.iter().any(|rule| {
                let mut next = region.clone();
                for (f, m) in rule {
                    next[*f] = next[*f].intersection(m);
                    if next[*f].is_empty() {
                        return false;
                    }
                }
                found(&next)
            }),
            Compiled::Rules(rules) => falsify_rules(rules, 0, region, found),
            Compiled::Tree(nodes) => visit_tree(nodes, 0, target, region, found),
            Compiled::Gated(gate, on_true, on_false) => {
                gate.visit(true, region, &mut |r| on_true.visit(target, r, found))
                    || gate.visit(false, region, &mut |r| on_false.visit(target, r, found))
            }
        }
    }
}

/// Enumerates regions where no rule from `at` onward can fire by picking, for
/// each still-satisfiable rule, one conjunct to falsify.
fn falsify_rules(
    rules: &[Vec<(usize, DomainSet)>],
    at: usize,
    region: &Region,
    found: &mut dyn FnMut(&Region) -> bool,
) -> bool {
    let Some(rule) = rules.get(at) else {
        return found(region);
    };
    let can_fire = rule.iter().all(|(f, m)| region[*f].intersects(m));
    if !can_fire {
        return falsify_rules(rules, at + 1, region, found);
    }
    for (f, m) in rule {
        let narrowed = region[*f].intersection(&m.complement());
        if narrowed.is_empty() {
            continue;
        }
        let mut next = region.clone();
        next[*f] = narrowed;
        if falsify_rules(rules, at + 1, &next, found) {
            return true;
        }
    }
    false
}

fn visit_tree(
    nodes: &[CompiledNode],
    at: usize,
    target: bool,
    region: &Region,
    found: &mut dyn FnMut(&Region) -> bool,
) -> bool {
    match &nodes[at] {
        CompiledNode::Leaf(class) => *class == target && found(region),
        CompiledNode::Split {
            feature,
            mask,
            if_true,
            if_false,
        } => {
            for (child, branch) in [(*if_true, mask.clone()), (*if_false, mask.complement())] {
                let narrowed = region[*feature].intersection(&branch);
                if narrowed.is_empty() {
                    continue;
                }
                let mut next = region.clone();
                next[*feature] = narrowed;
                if visit_tree(nodes, child, target, &next, found) {
                    return true;
                }
            }
            false
        }
    }
}

/// Which sufficiency procedure to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    #[default]
    Structural,
    Brute,
    /// Run both and fail loudly if they disagree.
    Cross,
}

impl std::str::FromStr for OracleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "structural" => Ok(OracleMode::Structural),
            "brute" => Ok(OracleMode::Brute),
            "cross" => Ok(OracleMode::Cross),
            other => Err(format!("unknown oracle mode '{other}'")),
        }
    }
}

/// A completion that agrees with `x` on `agrees_on` yet flips the prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipWitness {
    pub instance: Instance,
    pub agrees_on: FeatureSubset,
}

impl FlipWitness {
    pub fn to_file(&self, space: &FeatureSpace) -> InstanceFile {
        InstanceFile {
            values: space.values(&self.instance),
        }
    }
}

/// A point of interest for a classifier: the question "which feature sets
/// pin down the prediction at `x`?".
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    clf: &'a Classifier,
    x: Instance,
    prediction: bool,
    cap: u128,
    mode: OracleMode,
}

impl<'a> Problem<'a> {
    pub fn new(clf: &'a Classifier, x: Instance) -> Result<Self> {
        let prediction = clf.predict(&x)?;
        Ok(Problem {
            clf,
            x,
            prediction,
            cap: DEFAULT_ORACLE_CAP,
            mode: OracleMode::Structural,
        })
    }

    /// Bound on completions the exhaustive oracle may enumerate.
    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    /// Procedure used by [`Problem::sufficient`] (and hence by enumeration).
    pub fn with_mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn classifier(&self) -> &'a Classifier {
        self.clf
    }

    pub fn instance(&self) -> &Instance {
        &self.x
    }

    pub fn prediction(&self) -> bool {
        self.prediction
    }

    pub fn n(&self) -> usize {
        self.clf.n()
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    fn check_subset(&self, s: FeatureSubset) -> Result<()> {
        if s.span() > self.n() {
            return Err(Error::validation(format!(
                "subset {s} out of range for {} features",
                self.n()
            )));
        }
        Ok(())
    }

    fn region_fixing(&self, s: FeatureSubset) -> Region {
        self.clf
            .space()
            .features()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if s.contains(i) {
                    DomainSet::singleton(f.cardinality(), self.x.get(i))
                } else {
                    DomainSet::full(f.cardinality())
                }
            })
            .collect()
    }

    /// Structural search for a completion of `x_S` that flips the prediction.
    pub fn find_flip_witness(&self, s: FeatureSubset) -> Result<Option<FlipWitness>> {
        self.check_subset(s)?;
        let region = self.region_fixing(s);
        let mut witness = None;
        let x = &self.x;
        self.clf.compiled().visit(!self.prediction, &region, &mut |r| {
            let point = r
                .iter()
                .enumerate()
                .map(|(i, set)| {
                    if set.contains(x.get(i)) {
                        x.get(i)
                    } else {
                        set.first().expect("visited regions are non-empty")
                    }
                })
                .collect();
            witness = Some(Instance(point));
            true
        });
        match witness {
            Some(w) if self.clf.eval(w.as_slice()) == self.prediction => Err(Error::OracleMismatch(format!(
                "structural witness {w:?} for {s} does not flip the prediction"
            ))),
            Some(instance) => Ok(Some(FlipWitness { instance, agrees_on: s })),
            None => Ok(None),
        }
    }

    /// Structural sufficiency: true iff no completion of `x_S` flips the prediction.
    pub fn is_sufficient(&self, s: FeatureSubset) -> Result<bool> {
        Ok(self.find_flip_witness(s)?.is_none())
    }

    /// Exhaustive sufficiency over every completion of the free features.
    pub fn is_sufficient_bruteforce(&self, s: FeatureSubset) -> Result<bool> {
        self.check_subset(s)?;
        let n = self.n();
        let free: Vec<usize> = s.complement(n).to_vec();
        if free.is_empty() {
            return Ok(true);
        }
        let cards = self.clf.space().cardinalities();
        let required = free.iter().fold(1u128, |acc, &i| acc.saturating_mul(cards[i] as u128));
        if required > self.cap {
            return Err(Error::OracleTooLarge {
                required,
                cap: self.cap,
            });
        }
        let holds_from = |first_value: usize| -> bool {
            let mut y = self.x.as_slice().to_vec();
            y[free[0]] = first_value;
            let rest = &free[1..];
            for &i in rest {
                y[i] = 0;
            }
            loop {
                if self.clf.eval(&y) != self.prediction {
                    return false;
                }
                let mut k = rest.len();
                loop {
                    if k == 0 {
                        return true;
                    }
                    k -= 1;
                    let i = rest[k];
                    y[i] += 1;
                    if y[i] < cards[i] {
                        break;
                    }
                    y[i] = 0;
                }
            }
        };
        let first = 0..cards[free[0]];
        Ok(if required > 1 << 14 {
            first.into_par_iter().all(holds_from)
        } else {
            first.into_iter().all(holds_from)
        })
    }

    /// Sufficiency under the configured [`OracleMode`].
    pub fn sufficient(&self, s: FeatureSubset) -> Result<bool> {
        match self.mode {
            OracleMode::Structural => self.is_sufficient(s),
            OracleMode::Brute => self.is_sufficient_bruteforce(s),
            OracleMode::Cross => {
                let a = self.is_sufficient(s)?;
                let b = self.is_sufficient_bruteforce(s)?;
                if a != b {
                    return Err(Error::OracleMismatch(format!(
                        "structural says {a}, exhaustive says {b} for subset {s}"
                    )));
                }
                Ok(a)
            }
        }
    }
}
