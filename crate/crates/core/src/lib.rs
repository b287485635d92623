//! Abductive explanations for interpretable classifiers, and the feature
//! importance indices built on them.
//!
//! The pipeline is: bind a [`Model`] to a [`FeatureSpace`] as a
//! [`Classifier`], pick a point of interest to form a [`Problem`], enumerate
//! its [`ExplanationSet`], then score features with [`indices`].

pub mod attack;
pub mod axioms;
pub mod cli;
pub mod enumerate;
pub mod error;
pub mod fixtures;
pub mod hitting;
pub mod indices;
pub mod json;
pub mod mapsolver;
pub mod model;
pub mod random;
pub mod space;
pub mod subset;
pub mod sufficiency;
pub mod transform;
pub mod verify;

pub use enumerate::{check_duality, enumerate, enumerate_bruteforce, grow, shrink, ExplanationSet};
pub use error::{Error, Result};
pub use indices::{IndexKind, Normalization, Ranking, ScoreVector};
pub use model::{predict, validate, Classifier, Condition, Diagnostic, Model, ModelFile, Predicate, TreeNode};
pub use space::{FeatureDef, FeatureSpace, Instance, InstanceFile, Value};
pub use subset::FeatureSubset;
pub use sufficiency::{FlipWitness, OracleMode, Problem};
pub use transform::{contract, permute, Contraction, Permutation};
