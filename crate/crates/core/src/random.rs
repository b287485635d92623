//! Seeded random models for fuzzing the oracles against each other.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Classifier, Condition, Model, Predicate, TreeNode};
use crate::space::{FeatureDef, FeatureSpace, Instance, Value};
use crate::subset::FeatureSubset;

/// Bounds for generated problems.
#[derive(Clone, Copy, Debug)]
pub struct RandomConfig {
    pub min_features: usize,
    pub max_features: usize,
    pub max_domain: usize,
    pub max_rules: usize,
    pub max_conjuncts: usize,
    pub max_depth: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            min_features: 1,
            max_features: 10,
            max_domain: 3,
            max_rules: 8,
            max_conjuncts: 3,
            max_depth: 5,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Features `a0, a1, ...`; about a third have symbolic (unordered) domains.
pub fn random_space<R: Rng>(rng: &mut R, cfg: &RandomConfig) -> FeatureSpace {
    let n = rng.gen_range(cfg.min_features..=cfg.max_features);
    let features = (0..n)
        .map(|i| {
            let card = if cfg.max_domain < 2 || rng.gen_bool(0.1) {
                1
            } else {
                rng.gen_range(2..=cfg.max_domain)
            };
            let domain: Vec<Value> = if rng.gen_bool(1.0 / 3.0) {
                (0..card).map(|k| Value::Sym(format!("s{k}"))).collect()
            } else {
                (0..card as i64).map(|k| Value::Int(k * 10)).collect()
            };
            FeatureDef::new(format!("a{i}"), domain).expect("distinct generated domain")
        })
        .collect();
    FeatureSpace::new(features).expect("distinct generated names")
}

pub fn random_condition<R: Rng>(rng: &mut R, space: &FeatureSpace) -> Condition {
    let feature = rng.gen_range(0..space.len());
    let def = space.feature(feature);
    let pick = |rng: &mut R| def.domain[rng.gen_range(0..def.cardinality())].clone();
    let predicate = if def.ordered {
        match rng.gen_range(0..7) {
            0 => Predicate::Eq(pick(rng)),
            1 => Predicate::Neq(pick(rng)),
            2 => Predicate::Lt(pick(rng)),
            3 => Predicate::Le(pick(rng)),
            4 => Predicate::Gt(pick(rng)),
            5 => Predicate::Ge(pick(rng)),
            _ => Predicate::In(random_values(rng, def)),
        }
    } else {
        match rng.gen_range(0..3) {
            0 => Predicate::Eq(pick(rng)),
            1 => Predicate::Neq(pick(rng)),
            _ => Predicate::In(random_values(rng, def)),
        }
    };
    Condition::new(feature, predicate)
}

/// A proper subset when the domain allows one.
fn random_values<R: Rng>(rng: &mut R, def: &FeatureDef) -> Vec<Value> {
    let k = rng.gen_range(1..=def.cardinality().saturating_sub(1).max(1));
    def.domain.choose_multiple(rng, k).cloned().collect()
}

pub fn random_rule_set<R: Rng>(rng: &mut R, space: &FeatureSpace, cfg: &RandomConfig) -> Model {
    let rules = (0..rng.gen_range(1..=cfg.max_rules))
        .map(|_| {
            (0..rng.gen_range(1..=cfg.max_conjuncts))
                .map(|_| random_condition(rng, space))
                .collect()
        })
        .collect();
    Model::rules(rules)
}

pub fn random_tree<R: Rng>(rng: &mut R, space: &FeatureSpace, cfg: &RandomConfig) -> Model {
    fn grow<R: Rng>(rng: &mut R, space: &FeatureSpace, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let at = nodes.len();
        if depth == 0 || rng.gen_bool(0.15) {
            nodes.push(TreeNode::Leaf {
                class: rng.gen_range(0..=1),
            });
            return at;
        }
        nodes.push(TreeNode::Leaf { class: 0 });
        let condition = random_condition(rng, space);
        let if_true = grow(rng, space, depth - 1, nodes);
        let if_false = grow(rng, space, depth - 1, nodes);
        nodes[at] = TreeNode::Split {
            condition,
            if_true,
            if_false,
        };
        at
    }
    let mut nodes = Vec::new();
    grow(rng, space, cfg.max_depth, &mut nodes);
    Model::DecisionTree { nodes }
}

/// A rule set, tree or gated composite of those, with equal odds.
pub fn random_model<R: Rng>(rng: &mut R, space: &FeatureSpace, cfg: &RandomConfig) -> Model {
    let small = RandomConfig {
        max_rules: cfg.max_rules.min(3),
        max_depth: cfg.max_depth.min(3),
        ..*cfg
    };
    match rng.gen_range(0..3) {
        0 => random_rule_set(rng, space, cfg),
        1 => random_tree(rng, space, cfg),
        _ => {
            let part = |rng: &mut R| {
                if rng.gen_bool(0.5) {
                    random_rule_set(rng, space, &small)
                } else {
                    random_tree(rng, space, &small)
                }
            };
            let gate = part(rng);
            let on_true = part(rng);
            let on_false = part(rng);
            Model::gated(gate, on_true, on_false)
        }
    }
}

pub fn random_instance<R: Rng>(rng: &mut R, space: &FeatureSpace) -> Instance {
    Instance(space.cardinalities().iter().map(|&c| rng.gen_range(0..c)).collect())
}

pub fn random_subset<R: Rng>(rng: &mut R, n: usize) -> FeatureSubset {
    FeatureSubset::from_indices((0..n).filter(|_| rng.gen_bool(0.5)))
}

/// A rule set whose conditions mostly hold at `x`, so that several rules
/// fire there and the point has many AXps.
pub fn anchored_rule_set<R: Rng>(rng: &mut R, space: &FeatureSpace, x: &Instance, cfg: &RandomConfig) -> Model {
    let rules = (0..rng.gen_range(1..=cfg.max_rules))
        .map(|_| {
            (0..rng.gen_range(1..=cfg.max_conjuncts))
                .map(|_| loop {
                    let c = random_condition(rng, space);
                    let holds = c.holds(space.feature(c.feature), x.get(c.feature));
                    if holds || rng.gen_bool(0.2) {
                        break c;
                    }
                })
                .collect()
        })
        .collect();
    Model::rules(rules)
}

/// A random classifier and point, fully determined by `seed`. One in four
/// models is anchored at the point (see [`anchored_rule_set`]).
pub fn random_problem(seed: u64, cfg: &RandomConfig) -> (Classifier, Instance) {
    let mut rng = rng(seed);
    let space = random_space(&mut rng, cfg);
    let x = random_instance(&mut rng, &space);
    let model = if rng.gen_bool(0.25) {
        anchored_rule_set(&mut rng, &space, &x, cfg)
    } else {
        random_model(&mut rng, &space, cfg)
    };
    let clf = Classifier::new(space, model).expect("generated models are valid");
    (clf, x)
}
