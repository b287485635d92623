//! Cross-checks of the fast procedures against their exhaustive references.

use rayon::prelude::*;
use serde::Serialize;

use crate::enumerate::{check_duality, enumerate, enumerate_bruteforce, ExplanationSet};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::random::{random_problem, random_subset, rng, RandomConfig};
use crate::space::Instance;
use crate::subset::FeatureSubset;
use crate::sufficiency::Problem;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossCheck {
    pub subsets: usize,
    /// Subsets where structural and exhaustive sufficiency disagree.
    pub sufficiency_mismatches: Vec<FeatureSubset>,
    pub marco: ExplanationSet,
    pub lattice: ExplanationSet,
    pub duality: bool,
}

impl CrossCheck {
    pub fn agrees(&self) -> bool {
        self.sufficiency_mismatches.is_empty() && self.marco == self.lattice && self.duality
    }
}

/// Compares the oracles on every subset of features, and MARCO against the
/// lattice enumerator. Fails with a cap error when the space is too large
/// for the exhaustive side.
pub fn crosscheck(clf: &Classifier, x: Instance, cap: u128) -> Result<CrossCheck> {
    let problem = Problem::new(clf, x)?.with_cap(cap);
    let size = clf.space().size();
    if size > cap {
        return Err(Error::OracleTooLarge { required: size, cap });
    }
    let lattice = enumerate_bruteforce(&problem)?;
    let n = problem.n();
    let sufficiency_mismatches = (0..1u64 << n)
        .into_par_iter()
        .map(FeatureSubset::from_bits)
        .map(|s| Ok((s, problem.is_sufficient(s)? != problem.is_sufficient_bruteforce(s)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|(s, bad)| bad.then_some(s))
        .collect();
    let marco = enumerate(&problem)?;
    let duality = check_duality(&marco)?;
    Ok(CrossCheck {
        subsets: 1 << n,
        sufficiency_mismatches,
        marco,
        lattice,
        duality,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: u64,
    pub subsets_checked: u64,
    pub sufficiency_mismatches: u64,
    pub enumeration_mismatches: u64,
    pub duality_failures: u64,
    /// Seeds of the trials that failed, in order.
    pub failing_seeds: Vec<u64>,
}

impl FuzzReport {
    pub fn agrees(&self) -> bool {
        self.failing_seeds.is_empty()
    }
}

struct Trial {
    subsets: u64,
    sufficiency: u64,
    enumeration: bool,
    duality: bool,
}

fn trial(seed: u64, subsets: usize, cfg: &RandomConfig) -> Result<Trial> {
    let (clf, x) = random_problem(seed, cfg);
    let problem = Problem::new(&clf, x)?;
    let mut r = rng(seed ^ 0x5eed);
    let mut sufficiency = 0;
    for _ in 0..subsets {
        let s = random_subset(&mut r, problem.n());
        sufficiency += u64::from(problem.is_sufficient(s)? != problem.is_sufficient_bruteforce(s)?);
    }
    let marco = enumerate(&problem)?;
    Ok(Trial {
        subsets: subsets as u64,
        sufficiency,
        enumeration: marco == enumerate_bruteforce(&problem)?,
        duality: check_duality(&marco)?,
    })
}

/// Runs `trials` random problems with seeds `seed, seed + 1, ...`, checking
/// `subsets` random subsets each plus the full enumeration.
pub fn fuzz(seed: u64, trials: u64, subsets: usize, cfg: &RandomConfig) -> Result<FuzzReport> {
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = seed.wrapping_add(t);
            trial(s, subsets, cfg).map(|r| (s, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = FuzzReport {
        seed,
        trials,
        subsets_checked: 0,
        sufficiency_mismatches: 0,
        enumeration_mismatches: 0,
        duality_failures: 0,
        failing_seeds: Vec::new(),
    };
    for (s, r) in results {
        report.subsets_checked += r.subsets;
        report.sufficiency_mismatches += r.sufficiency;
        report.enumeration_mismatches += u64::from(!r.enumeration);
        report.duality_failures += u64::from(!r.duality);
        if r.sufficiency > 0 || !r.enumeration || !r.duality {
            report.failing_seeds.push(s);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sufficiency::DEFAULT_ORACLE_CAP;

    #[test]
    fn loan_fixtures_agree() {
        let (space, f, g, x) = fixtures::loan();
        for m in [f, g] {
            let clf = Classifier::new(space.clone(), m).unwrap();
            let c = crosscheck(&clf, x.clone(), DEFAULT_ORACLE_CAP).unwrap();
            assert!(c.agrees());
            assert_eq!(c.subsets, 16);
        }
    }

    #[test]
    fn small_cap_is_an_error() {
        let (space, model, x) = fixtures::example1();
        let clf = Classifier::new(space, model).unwrap();
        let err = crosscheck(&clf, x, 10).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { required: 36, cap: 10 }));
    }

    #[test]
    fn fuzz_is_deterministic() {
        let cfg = RandomConfig::default();
        let a = fuzz(7, 30, 5, &cfg).unwrap();
        assert!(a.agrees(), "{a:?}");
        assert_eq!(a, fuzz(7, 30, 5, &cfg).unwrap());
        assert_eq!(a.subsets_checked, 150);
    }
}
