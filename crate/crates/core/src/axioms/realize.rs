//! Building a model whose AXp set is a given family.

use crate::model::{Classifier, Condition, Model};
use crate::space::{FeatureSpace, Instance};
use crate::subset::FeatureSubset;

/// A rule set over `n` binary features with one rule "every member is 1"
/// per family member. At the all-ones point its AXps are exactly the family;
/// the family `{∅}` (or no family at all) becomes the constant-0 model.
pub fn realize(n: usize, family: &[FeatureSubset]) -> Classifier {
    let rules: Vec<Vec<Condition>> = family
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.iter().map(|i| Condition::eq(i, 1)).collect())
        .collect();
    Classifier::new(FeatureSpace::binary(n), Model::rules(rules))
        .expect("binary rule sets over in-range features are valid")
}

/// The point at which [`realize`] reproduces the family.
pub fn realization_point(n: usize) -> Instance {
    Instance(vec![1; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::universe;
    use crate::enumerate::enumerate_bruteforce;
    use crate::sufficiency::Problem;

    #[test]
    fn every_family_up_to_four_features_is_realized() {
        for es in universe(4, None).unwrap() {
            let clf = realize(4, &es.axps);
            let p = Problem::new(&clf, realization_point(4)).unwrap();
            assert_eq!(enumerate_bruteforce(&p).unwrap(), es);
        }
    }
}
