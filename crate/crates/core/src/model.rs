//! Interpretable binary classifiers over a [`FeatureSpace`].
//!
//! Three shapes are supported: a rule set (output 1 iff some rule's
//! conjuncts all hold), a decision tree stored as a node array rooted at
//! index 0, and a gated composite that dispatches on a gate model's output.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{DomainSet, FeatureDef, FeatureSpace, Instance, Value};
use crate::sufficiency::Compiled;

/// A test applied to one feature's value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    Eq(Value),
    Neq(Value),
    Lt(Value),
    Le(Value),
    Gt(Value),
    Ge(Value),
    In(Vec<Value>),
}

impl Predicate {
    pub fn op_name(&self) -> &'static str {
        match self {
            Predicate::Eq(_) => "eq",
            Predicate::Neq(_) => "neq",
            Predicate::Lt(_) => "lt",
            Predicate::Le(_) => "le",
            Predicate::Gt(_) => "gt",
            Predicate::Ge(_) => "ge",
            Predicate::In(_) => "in",
        }
    }

    pub fn is_ordered(&self) -> bool {
        matches!(
            self,
            Predicate::Lt(_) | Predicate::Le(_) | Predicate::Gt(_) | Predicate::Ge(_)
        )
    }
}

/// `feature <op> value`, e.g. `Age > 20`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCondition", into = "RawCondition")]
pub struct Condition {
    pub feature: usize,
    pub predicate: Predicate,
}

#[derive(Serialize, Deserialize)]
struct RawCondition {
    feature: usize,
    op: String,
    value: serde_json::Value,
}

impl TryFrom<RawCondition> for Condition {
    type Error = String;

    fn try_from(raw: RawCondition) -> std::result::Result<Self, String> {
        let one = |v: serde_json::Value| -> std::result::Result<Value, String> {
            serde_json::from_value(v).map_err(|e| format!("bad condition operand: {e}"))
        };
        let predicate = match raw.op.as_str() {
            "eq" => Predicate::Eq(one(raw.value)?),
            "neq" => Predicate::Neq(one(raw.value)?),
            "lt" => Predicate::Lt(one(raw.value)?),
            "le" => Predicate::Le(one(raw.value)?),
            "gt" => Predicate::Gt(one(raw.value)?),
            "ge" => Predicate::Ge(one(raw.value)?),
            "in" => Predicate::In(
                serde_json::from_value(raw.value).map_err(|e| format!("'in' needs an array of values: {e}"))?,
            ),
            other => return Err(format!("unknown condition op '{other}'")),
        };
        Ok(Condition {
            feature: raw.feature,
            predicate,
        })
    }
}

impl From<Condition> for RawCondition {
    fn from(c: Condition) -> Self {
        let op = c.predicate.op_name().to_string();
        let value = match c.predicate {
            Predicate::Eq(v)
            | Predicate::Neq(v)
            | Predicate::Lt(v)
            | Predicate::Le(v)
            | Predicate::Gt(v)
            | Predicate::Ge(v) => serde_json::to_value(v),
            Predicate::In(vs) => serde_json::to_value(vs),
        }
        .expect("values always serialize");
        RawCondition {
            feature: c.feature,
            op,
            value,
        }
    }
}

impl Condition {
    pub fn new(feature: usize, predicate: Predicate) -> Self {
        Condition { feature, predicate }
    }

    pub fn eq(feature: usize, v: impl Into<Value>) -> Self {
        Condition::new(feature, Predicate::Eq(v.into()))
    }

    pub fn neq(feature: usize, v: impl Into<Value>) -> Self {
        Condition::new(feature, Predicate::Neq(v.into()))
    }

    pub fn lt(feature: usize, v: impl Into<Value>) -> Self {
        Condition::new(feature, Predicate::Lt(v.into()))
    }

    pub fn le(feature: usize, v: impl Into<Value>) -> Self {
        Condition::new(feature, Predicate::Le(v.into()))
    }

    pub fn gt(feature: usize, v: impl Into<Value>) -> Self {
        Condition::new(feature, Predicate::Gt(v.into()))
    }

    pub fn ge(feature: usize, v: impl Into<Value>) -> Self {
        Condition::new(feature, Predicate::Ge(v.into()))
    }

    pub fn is_in(feature: usize, vs: Vec<Value>) -> Self {
        Condition::new(feature, Predicate::In(vs))
    }

    /// Evaluates the condition on the value at `domain_index` of `def`.
    pub fn holds(&self, def: &FeatureDef, domain_index: usize) -> bool {
        let v = &def.domain[domain_index];
        let cmp = |a: &Value| def.compare(v, a);
        match &self.predicate {
            Predicate::Eq(a) => v == a,
            Predicate::Neq(a) => v != a,
            Predicate::Lt(a) => cmp(a) == Some(Ordering::Less),
            Predicate::Le(a) => matches!(cmp(a), Some(Ordering::Less | Ordering::Equal)),
            Predicate::Gt(a) => cmp(a) == Some(Ordering::Greater),
            Predicate::Ge(a) => matches!(cmp(a), Some(Ordering::Greater | Ordering::Equal)),
            Predicate::In(set) => set.contains(v),
        }
    }

    /// The domain indices on which the condition holds.
    pub fn mask(&self, def: &FeatureDef) -> DomainSet {
        DomainSet::from_predicate(def.cardinality(), |i| self.holds(def, i))
    }

    pub fn display<'a>(&'a self, space: &'a FeatureSpace) -> impl fmt::Display + 'a {
        DisplayCondition { c: self, space }
    }
}

struct DisplayCondition<'a> {
    c: &'a Condition,
    space: &'a FeatureSpace,
}

impl fmt::Display for DisplayCondition<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self
            .space
            .features()
            .get(self.c.feature)
            .map(|d| d.name.clone())
            .unwrap_or_else(|| format!("#{}", self.c.feature));
        let (sym, v) = match &self.c.predicate {
            Predicate::Eq(v) => ("=", v.to_string()),
            Predicate::Neq(v) => ("!=", v.to_string()),
            Predicate::Lt(v) => ("<", v.to_string()),
            Predicate::Le(v) => ("<=", v.to_string()),
            Predicate::Gt(v) => (">", v.to_string()),
            Predicate::Ge(v) => (">=", v.to_string()),
            Predicate::In(vs) => (
                "in",
                format!("{{{}}}", vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
            ),
        };
        write!(f, "{name} {sym} {v}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        condition: Condition,
        if_true: usize,
        if_false: usize,
    },
    Leaf {
        class: u8,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Outputs 1 iff some rule has all its conjuncts satisfied.
    RuleSet { rules: Vec<Vec<Condition>> },
    /// Node 0 is the root.
    DecisionTree { nodes: Vec<TreeNode> },
    /// `gate(x) = 1` selects `on_true`, otherwise `on_false`.
    Gated {
        gate: Box<Model>,
        on_true: Box<Model>,
        on_false: Box<Model>,
    },
}

impl Model {
    pub fn rules(rules: Vec<Vec<Condition>>) -> Self {
        Model::RuleSet { rules }
    }

    /// A rule set that never fires.
    pub fn constant_zero() -> Self {
        Model::RuleSet { rules: vec![] }
    }

    /// A rule set whose single empty rule always fires.
    pub fn constant_one() -> Self {
        Model::RuleSet { rules: vec![vec![]] }
    }

    pub fn gated(gate: Model, on_true: Model, on_false: Model) -> Self {
        Model::Gated {
            gate: Box::new(gate),
            on_true: Box::new(on_true),
            on_false: Box::new(on_false),
        }
    }

    /// Evaluates without validation. Panics on malformed models; use
    /// [`predict`] or [`Classifier`] for checked evaluation.
    pub fn eval(&self, space: &FeatureSpace, x: &[usize]) -> bool {
        match self {
            Model::RuleSet { rules } => rules
                .iter()
                .any(|rule| rule.iter().all(|c| c.holds(space.feature(c.feature), x[c.feature]))),
            Model::DecisionTree { nodes } => {
                let mut at = 0;
                for _ in 0..=nodes.len() {
                    match &nodes[at] {
                        TreeNode::Leaf { class } => return *class == 1,
                        TreeNode::Split {
                            condition,
                            if_true,
                            if_false,
                        } => {
                            at = if condition.holds(space.feature(condition.feature), x[condition.feature]) {
                                *if_true
                            } else {
                                *if_false
                            };
                        }
                    }
                }
                panic!("decision tree contains a cycle");
            }
            Model::Gated {
                gate,
                on_true,
                on_false,
            } => {
                if gate.eval(space, x) {
                    on_true.eval(space, x)
                } else {
                    on_false.eval(space, x)
                }
            }
        }
    }

    /// Calls `f` on every condition in the model.
    pub fn for_each_condition(&self, f: &mut impl FnMut(&Condition)) {
        match self {
            Model::RuleSet { rules } => rules.iter().flatten().for_each(f),
            Model::DecisionTree { nodes } => {
                for n in nodes {
                    if let TreeNode::Split { condition, .. } = n {
                        f(condition);
                    }
                }
            }
            Model::Gated {
                gate,
                on_true,
                on_false,
            } => {
                gate.for_each_condition(f);
                on_true.for_each_condition(f);
                on_false.for_each_condition(f);
            }
        }
    }

    /// Rewrites every condition in place.
    pub fn map_conditions(&self, f: &impl Fn(&Condition) -> Condition) -> Model {
        match self {
            Model::RuleSet { rules } => Model::RuleSet {
                rules: rules.iter().map(|r| r.iter().map(f).collect()).collect(),
            },
            Model::DecisionTree { nodes } => Model::DecisionTree {
                nodes: nodes
                    .iter()
                    .map(|n| match n {
                        TreeNode::Split {
                            condition,
                            if_true,
                            if_false,
                        } => TreeNode::Split {
                            condition: f(condition),
                            if_true: *if_true,
                            if_false: *if_false,
                        },
                        leaf => leaf.clone(),
                    })
                    .collect(),
            },
            Model::Gated {
                gate,
                on_true,
                on_false,
            } => Model::gated(
                gate.map_conditions(f),
                on_true.map_conditions(f),
                on_false.map_conditions(f),
            ),
        }
    }

    /// Indices of features that some condition reads.
    pub fn referenced_features(&self) -> crate::FeatureSubset {
        let mut s = crate::FeatureSubset::EMPTY;
        self.for_each_condition(&mut |c| {
            if c.feature < crate::subset::MAX_FEATURES {
                s = s.with(c.feature)
            }
        });
        s
    }
}

/// A problem found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Where in the model, e.g. `gate/rule[2]/cond[0]` or `node[3]`.
    pub location: String,
    pub message: String,
    /// Fatal diagnostics make the model unusable for prediction.
    pub fatal: bool,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn check_condition(c: &Condition, space: &FeatureSpace, loc: &str, out: &mut Vec<Diagnostic>) {
    let Some(def) = space.features().get(c.feature) else {
        out.push(Diagnostic {
            location: loc.to_string(),
            message: format!(
                "feature index {} out of range (space has {} features)",
                c.feature,
                space.len()
            ),
            fatal: true,
        });
        return;
    };
    if c.predicate.is_ordered() && !def.ordered {
        out.push(Diagnostic {
            location: loc.to_string(),
            message: format!(
                "ordered comparator '{}' on unordered feature '{}'",
                c.predicate.op_name(),
                def.name
            ),
            fatal: true,
        });
    }
    let missing: Vec<&Value> = match &c.predicate {
        Predicate::Eq(v) | Predicate::Neq(v) => vec![v],
        Predicate::In(vs) => vs.iter().collect(),
        Predicate::Lt(v) | Predicate::Le(v) | Predicate::Gt(v) | Predicate::Ge(v) => {
            if matches!(v, Value::Int(_)) && def.domain.iter().all(|d| matches!(d, Value::Int(_))) {
                vec![]
            } else {
                vec![v]
            }
        }
    }
    .into_iter()
    .filter(|v| def.position(v).is_none())
    .collect();
    for v in missing {
        out.push(Diagnostic {
            location: loc.to_string(),
            message: format!("operand {v} is not in the domain of feature '{}'", def.name),
            fatal: c.predicate.is_ordered(),
        });
    }
}

fn validate_into(model: &Model, space: &FeatureSpace, prefix: &str, out: &mut Vec<Diagnostic>) {
    match model {
        Model::RuleSet { rules } => {
            for (r, rule) in rules.iter().enumerate() {
                let before = out.iter().filter(|d| d.fatal).count();
                for (k, c) in rule.iter().enumerate() {
                    check_condition(c, space, &format!("{prefix}rule[{r}]/cond[{k}]"), out);
                }
                if out.iter().filter(|d| d.fatal).count() == before {
                    let mut masks: Vec<Option<DomainSet>> = vec![None; space.len()];
                    for c in rule {
                        let m = c.mask(space.feature(c.feature));
                        let slot = &mut masks[c.feature];
                        *slot = Some(match slot.take() {
                            Some(prev) => prev.intersection(&m),
                            None => m,
                        });
                    }
                    if let Some(f) = masks.iter().position(|m| m.as_ref().is_some_and(|m| m.is_empty())) {
                        out.push(Diagnostic {
                            location: format!("{prefix}rule[{r}]"),
                            message: format!(
                                "rule can never fire: conditions on '{}' are contradictory",
                                space.feature(f).name
                            ),
                            fatal: false,
                        });
                    }
                }
            }
        }
        Model::DecisionTree { nodes } => validate_tree(nodes, space, prefix, out),
        Model::Gated {
            gate,
            on_true,
            on_false,
        } => {
            validate_into(gate, space, &format!("{prefix}gate/"), out);
            validate_into(on_true, space, &format!("{prefix}on_true/"), out);
            validate_into(on_false, space, &format!("{prefix}on_false/"), out);
        }
    }
}

fn validate_tree(nodes: &[TreeNode], space: &FeatureSpace, prefix: &str, out: &mut Vec<Diagnostic>) {
    if nodes.is_empty() {
        out.push(Diagnostic {
            location: format!("{prefix}nodes"),
            message: "decision tree has no nodes".into(),
            fatal: true,
        });
        return;
    }
    let fatal_before = out.iter().filter(|d| d.fatal).count();
    for (i, n) in nodes.iter().enumerate() {
        let loc = format!("{prefix}node[{i}]");
        match n {
            TreeNode::Leaf { class } if *class > 1 => out.push(Diagnostic {
                location: loc,
                message: format!("leaf class {class} is not binary"),
                fatal: true,
            }),
            TreeNode::Leaf { .. } => {}
            TreeNode::Split {
                condition,
                if_true,
                if_false,
            } => {
                check_condition(condition, space, &loc, out);
                for child in [if_true, if_false] {
                    if *child >= nodes.len() {
                        out.push(Diagnostic {
                            location: loc.clone(),
                            message: format!("child index {child} out of range"),
                            fatal: true,
                        });
                    }
                }
            }
        }
    }
    if out.iter().filter(|d| d.fatal).count() != fatal_before {
        return;
    }
    // Each node must be reached exactly once from the root.
    let mut parents = vec![0usize; nodes.len()];
    for n in nodes {
        if let TreeNode::Split { if_true, if_false, .. } = n {
            parents[*if_true] += 1;
            parents[*if_false] += 1;
        }
    }
    if parents[0] != 0 {
        out.push(Diagnostic {
            location: format!("{prefix}node[0]"),
            message: "root is referenced as a child (cycle)".into(),
            fatal: true,
        });
        return;
    }
    for (i, &p) in parents.iter().enumerate().skip(1) {
        if p > 1 {
            out.push(Diagnostic {
                location: format!("{prefix}node[{i}]"),
                message: format!("node has {p} parents; trees need exactly one"),
                fatal: true,
            });
        }
    }
    if out.iter().filter(|d| d.fatal).count() != fatal_before {
        return;
    }
    let mut reached = vec![false; nodes.len()];
    let full: Vec<DomainSet> = space
        .features()
        .iter()
        .map(|f| DomainSet::full(f.cardinality()))
        .collect();
    let mut stack = vec![(0usize, full, false)];
    while let Some((at, masks, dead)) = stack.pop() {
        if reached[at] {
            out.push(Diagnostic {
                location: format!("{prefix}node[{at}]"),
                message: "cycle detected".into(),
                fatal: true,
            });
            return;
        }
        reached[at] = true;
        if let TreeNode::Split {
            condition,
            if_true,
            if_false,
        } = &nodes[at]
        {
            let f = condition.feature;
            let m = condition.mask(space.feature(f));
            for (child, branch) in [(*if_true, m.clone()), (*if_false, m.complement())] {
                let mut next = masks.clone();
                next[f] = next[f].intersection(&branch);
                let now_dead = !dead && next[f].is_empty();
                if now_dead {
                    out.push(Diagnostic {
                        location: format!("{prefix}node[{child}]"),
                        message: format!(
                            "dead path: conditions on '{}' along the path to this node are contradictory",
                            space.feature(f).name
                        ),
                        fatal: false,
                    });
                }
                stack.push((child, next, dead || now_dead));
            }
        }
    }
    for (i, r) in reached.iter().enumerate() {
        if !r {
            out.push(Diagnostic {
                location: format!("{prefix}node[{i}]"),
                message: "node is unreachable from the root".into(),
                fatal: false,
            });
        }
    }
}

/// Checks a model against a feature space. Returns an empty list iff the
/// model is well formed with no dead rules or paths.
pub fn validate(model: &Model, space: &FeatureSpace) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    validate_into(model, space, "", &mut out);
    out
}

/// Checked prediction.
pub fn predict(model: &Model, space: &FeatureSpace, x: &Instance) -> Result<bool> {
    space.check(x)?;
    if let Some(d) = validate(model, space).into_iter().find(|d| d.fatal) {
        return Err(Error::validation(d.to_string()));
    }
    Ok(model.eval(space, x.as_slice()))
}

/// A model bound to a feature space, validated once up front.
#[derive(Clone, Debug)]
pub struct Classifier {
    space: FeatureSpace,
    model: Model,
    diagnostics: Vec<Diagnostic>,
    compiled: Compiled,
}

impl Classifier {
    /// Fails on fatal diagnostics; non-fatal ones are kept for inspection.
    pub fn new(space: FeatureSpace, model: Model) -> Result<Self> {
        let diagnostics = validate(&model, &space);
        if let Some(d) = diagnostics.iter().find(|d| d.fatal) {
            return Err(Error::validation(d.to_string()));
        }
        let compiled = Compiled::new(&model, &space);
        Ok(Classifier {
            space,
            model,
            diagnostics,
            compiled,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn predict(&self, x: &Instance) -> Result<bool> {
        self.space.check(x)?;
        Ok(self.model.eval(&self.space, x.as_slice()))
    }

    /// Unchecked prediction on raw domain indices.
    pub fn eval(&self, x: &[usize]) -> bool {
        self.model.eval(&self.space, x)
    }

    pub(crate) fn compiled(&self) -> &Compiled {
        &self.compiled
    }
}

/// The on-disk form of a model: its feature space plus the model itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub features: FeatureSpace,
    pub model: Model,
}
