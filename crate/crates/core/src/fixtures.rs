//! The worked loan-approval models used throughout the docs and tests.

use crate::attack::{AttackConfig, DatasetConfig};
use crate::model::{Condition, Model};
use crate::space::{FeatureDef, FeatureSpace, Instance, Value};

fn ints(vs: &[i64]) -> Vec<Value> {
    vs.iter().map(|&v| Value::Int(v)).collect()
}

fn syms(vs: &[&str]) -> Vec<Value> {
    vs.iter().map(|&v| Value::from(v)).collect()
}

/// Feature indices shared by both loan spaces.
pub const AGE: usize = 0;
pub const PURPOSE: usize = 1;
pub const CREDIT: usize = 2;
pub const BANK: usize = 3;

/// `(Age > 20 ∧ Purpose = Education) ∨ Credit > 700 ∨ Bank > 50000`
/// at `x = (30, Education, 750, 60000)`, which the model accepts.
pub fn example1() -> (FeatureSpace, Model, Instance) {
    let space = FeatureSpace::new(vec![
        FeatureDef::new("Age", ints(&[18, 22, 30])).unwrap(),
        FeatureDef::new("Purpose", syms(&["Education", "Car", "RealEstate"])).unwrap(),
        FeatureDef::new("Credit", ints(&[650, 750])).unwrap(),
        FeatureDef::new("Bank", ints(&[40000, 60000])).unwrap(),
    ])
    .unwrap();
    let model = Model::rules(vec![
        vec![Condition::gt(AGE, 20), Condition::eq(PURPOSE, "Education")],
        vec![Condition::gt(CREDIT, 700)],
        vec![Condition::gt(BANK, 50000)],
    ]);
    let x = space
        .instance(&[30.into(), "Education".into(), 750.into(), 60000.into()])
        .unwrap();
    (space, model, x)
}

/// The rejection example: returns `(space, f, g, x)` with
/// `x = (22, RealEstate, 0, 50000)`, rejected by both models.
pub fn loan() -> (FeatureSpace, Model, Model, Instance) {
    let space = FeatureSpace::new(vec![
        FeatureDef::new("Age", ints(&[18, 22, 28, 35])).unwrap(),
        FeatureDef::new("Purpose", syms(&["Education", "RealEstate", "Car"])).unwrap(),
        FeatureDef::new("Credit", ints(&[0, 750])).unwrap(),
        FeatureDef::new("Bank", ints(&[10000, 50000, 200000, 500000, 2000000])).unwrap(),
    ])
    .unwrap();
    let f = Model::rules(vec![
        vec![Condition::lt(AGE, 20), Condition::eq(PURPOSE, "Education")],
        vec![
            Condition::gt(AGE, 30),
            Condition::eq(PURPOSE, "RealEstate"),
            Condition::gt(CREDIT, 700),
        ],
        vec![Condition::gt(CREDIT, 700), Condition::gt(BANK, 300000)],
        vec![Condition::gt(AGE, 25), Condition::gt(BANK, 1000000)],
    ]);
    let g = Model::rules(vec![
        vec![Condition::lt(AGE, 20), Condition::gt(BANK, 25000)],
        vec![Condition::gt(BANK, 100000), Condition::gt(CREDIT, 700)],
    ]);
    let x = space
        .instance(&[22.into(), "RealEstate".into(), 0.into(), 50000.into()])
        .unwrap();
    (space, f, g, x)
}

/// A synthetic stand-in for a recidivism dataset, attacked through `race`.
///
/// The gate accepts points with no rare value on `priors`, `stay` or
/// `juvenile` (each rare value has weight 2 of 100, so about 94% of draws
/// are in distribution). Inside, the prediction is `race = african_american`;
/// outside it is `uc1 XOR uc2`.
pub fn compas_like() -> AttackConfig {
    let space = FeatureSpace::new(vec![
        FeatureDef::new("race", syms(&["caucasian", "african_american"])).unwrap(),
        FeatureDef::new("uc1", ints(&[0, 1])).unwrap(),
        FeatureDef::new("uc2", ints(&[0, 1])).unwrap(),
        FeatureDef::new("age", syms(&["lt25", "25to45", "gt45"])).unwrap(),
        FeatureDef::new("sex", syms(&["female", "male"])).unwrap(),
        FeatureDef::new("priors", ints(&[0, 1, 5])).unwrap(),
        FeatureDef::new("charge", syms(&["felony", "misdemeanor"])).unwrap(),
        FeatureDef::new("stay", ints(&[0, 7, 90])).unwrap(),
        FeatureDef::new("juvenile", ints(&[0, 1, 3])).unwrap(),
    ])
    .unwrap();
    let at = |name: &str| space.index_of(name).unwrap();
    let ood_gate = Model::rules(vec![vec![
        Condition::lt(at("priors"), 5),
        Condition::lt(at("stay"), 90),
        Condition::lt(at("juvenile"), 3),
    ]]);
    let biased = Model::rules(vec![vec![Condition::eq(at("race"), "african_american")]]);
    let unbiased = Model::rules(vec![
        vec![Condition::eq(at("uc1"), 1), Condition::eq(at("uc2"), 0)],
        vec![Condition::eq(at("uc1"), 0), Condition::eq(at("uc2"), 1)],
    ]);
    let weights = vec![
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![1.0, 2.0, 1.0],
        vec![1.0, 1.0],
        vec![60.0, 38.0, 2.0],
        vec![1.0, 1.0],
        vec![70.0, 28.0, 2.0],
        vec![80.0, 18.0, 2.0],
    ];
    AttackConfig {
        features: space,
        sensitive: "race".into(),
        uncorrelated: vec!["uc1".into(), "uc2".into()],
        ood_gate,
        biased,
        unbiased,
        dataset: DatasetConfig {
            seed: 1,
            samples: 500,
            weights: Some(weights),
            in_distribution_fraction: None,
        },
    }
}
