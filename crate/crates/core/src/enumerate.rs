//! Enumeration of all abductive explanations (AXps) and their dual
//! contrastive explanations (CXps).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hitting::minimal_hitting_sets;
use crate::mapsolver::{MapSolver, SeedPolicy};
use crate::subset::{minimal_elements, FeatureSubset};
use crate::sufficiency::Problem;

/// Largest feature count the lattice enumerator accepts.
pub const DEFAULT_LATTICE_CAP: usize = 16;

/// AXps and CXps of one prediction.
///
/// `complete` is false when enumeration stopped early; such a set is a
/// correct but partial view and the aggregation functions refuse it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExplanationSet {
    pub axps: Vec<FeatureSubset>,
    pub cxps: Vec<FeatureSubset>,
    pub n: usize,
    pub complete: bool,
}

impl ExplanationSet {
    /// Builds a set, sorting and deduplicating both lists.
    pub fn new(n: usize, mut axps: Vec<FeatureSubset>, mut cxps: Vec<FeatureSubset>, complete: bool) -> Self {
        axps.sort();
        axps.dedup();
        cxps.sort();
        cxps.dedup();
        ExplanationSet {
            axps,
            cxps,
            n,
            complete,
        }
    }

    /// A complete set built from AXps alone; CXps are their minimal hitting sets.
    pub fn from_axps(n: usize, axps: Vec<FeatureSubset>) -> Self {
        let axps = minimal_elements(&axps);
        let cxps = minimal_hitting_sets(&axps);
        ExplanationSet::new(n, axps, cxps, true)
    }

    /// M_i: the AXps containing feature `i`.
    pub fn containing(&self, i: usize) -> impl Iterator<Item = FeatureSubset> + '_ {
        self.axps.iter().copied().filter(move |s| s.contains(i))
    }

    /// The prediction is constant, so the empty set is the only AXp.
    pub fn is_trivial(&self) -> bool {
        self.axps == [FeatureSubset::EMPTY]
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.complete {
            Ok(())
        } else {
            Err(Error::contract(
                "explanation set is incomplete (enumeration was truncated)",
            ))
        }
    }

    /// Renders subsets with feature names, e.g. `{Age,Purpose}`.
    pub fn display_with(&self, names: &[String]) -> (Vec<String>, Vec<String>) {
        let show = |s: &FeatureSubset| {
            let parts: Vec<&str> = s.iter().map(|i| names[i].as_str()).collect();
            format!("{{{}}}", parts.join(","))
        };
        (
            self.axps.iter().map(show).collect(),
            self.cxps.iter().map(show).collect(),
        )
    }
}

/// Deletion-based minimisation of a sufficient set, in ascending index order.
pub fn shrink(problem: &Problem, seed: FeatureSubset) -> Result<FeatureSubset> {
    if !problem.sufficient(seed)? {
        return Err(Error::contract(format!("shrink seed {seed} is not sufficient")));
    }
    let mut s = seed;
    for i in seed.iter() {
        let candidate = s.without(i);
        if problem.sufficient(candidate)? {
            s = candidate;
        }
    }
    Ok(s)
}

/// Addition-based maximisation of an insufficient set, in ascending index order.
pub fn grow(problem: &Problem, seed: FeatureSubset) -> Result<FeatureSubset> {
    if problem.sufficient(seed)? {
        return Err(Error::contract(format!("grow seed {seed} is sufficient")));
    }
    let n = problem.n();
    let mut q = seed;
    for i in seed.complement(n).iter() {
        let candidate = q.with(i);
        if !problem.sufficient(candidate)? {
            q = candidate;
        }
    }
    Ok(q)
}

/// Knobs for [`enumerate_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct EnumerateOptions {
    /// Stop after this many reported explanations (AXps plus CXps).
    pub limit: Option<usize>,
    pub policy: SeedPolicy,
}

/// Counters from one MARCO run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MarcoStats {
    pub iterations: u64,
    pub solver_calls: u64,
}

/// MARCO with maximal seeds and no limit.
pub fn enumerate(problem: &Problem) -> Result<ExplanationSet> {
    enumerate_with(problem, EnumerateOptions::default()).map(|(es, _)| es)
}

pub fn enumerate_with(problem: &Problem, opts: EnumerateOptions) -> Result<(ExplanationSet, MarcoStats)> {
    let n = problem.n();
    let mut map = MapSolver::new(n, opts.policy);
    let mut axps = Vec::new();
    let mut cxps = Vec::new();
    let mut stats = MarcoStats::default();
    let mut complete = true;
    while let Some(seed) = map.next_seed() {
        if opts.limit.is_some_and(|l| axps.len() + cxps.len() >= l) {
            complete = false;
            break;
        }
        stats.iterations += 1;
        if problem.sufficient(seed)? {
            let axp = shrink(problem, seed)?;
            map.block_up(axp);
            axps.push(axp);
        } else {
            let cxp = grow(problem, seed)?.complement(n);
            map.block_down(cxp);
            cxps.push(cxp);
        }
    }
    stats.solver_calls = map.solves();
    Ok((ExplanationSet::new(n, axps, cxps, complete), stats))
}

/// Lattice reference: evaluates the whole input space once, then classifies
/// every subset of features by sufficiency.
///
/// A subset S is insufficient iff some mispredicted point agrees with `x` on
/// all of S, i.e. S lies inside that point's agreement set. Marking every
/// agreement set and closing downwards yields the insufficient subsets.
pub fn enumerate_bruteforce(problem: &Problem) -> Result<ExplanationSet> {
    enumerate_bruteforce_capped(problem, DEFAULT_LATTICE_CAP)
}

pub fn enumerate_bruteforce_capped(problem: &Problem, lattice_cap: usize) -> Result<ExplanationSet> {
    let n = problem.n();
    if n > lattice_cap {
        return Err(Error::OracleTooLarge {
            required: 1u128 << n,
            cap: 1u128 << lattice_cap,
        });
    }
    let clf = problem.classifier();
    let space = clf.space();
    let size = space.size();
    if size > problem.cap() {
        return Err(Error::OracleTooLarge {
            required: size,
            cap: problem.cap(),
        });
    }
    let x = problem.instance();
    let target = problem.prediction();
    let full = 1usize << n;
    let mut insufficient = vec![false; full];
    for y in space.points() {
        if clf.eval(y.as_slice()) != target {
            let agree = (0..n).filter(|&i| y.get(i) == x.get(i)).fold(0usize, |m, i| m | 1 << i);
            insufficient[agree] = true;
        }
    }
    // Downward closure: a subset of an insufficient set is insufficient.
    for bit in 0..n {
        for mask in 0..full {
            if mask & (1 << bit) != 0 && insufficient[mask] {
                insufficient[mask & !(1 << bit)] = true;
            }
        }
    }
    let all = full - 1;
    let mut axps = Vec::new();
    let mut cxps = Vec::new();
    for mask in 0..full {
        if !insufficient[mask] && (0..n).all(|i| mask & (1 << i) == 0 || insufficient[mask & !(1 << i)]) {
            axps.push(FeatureSubset::from_bits(mask as u64));
        }
        // C is a CXp iff N∖C is insufficient and N∖C ∪ {i} is sufficient for each i ∈ C.
        let rest = all & !mask;
        if insufficient[rest] && (0..n).all(|i| mask & (1 << i) == 0 || !insufficient[rest | 1 << i]) {
            cxps.push(FeatureSubset::from_bits(mask as u64));
        }
    }
    Ok(ExplanationSet::new(n, axps, cxps, true))
}

/// True iff AXps and CXps are exactly each other's minimal hitting sets.
pub fn check_duality(es: &ExplanationSet) -> Result<bool> {
    es.ensure_complete()?;
    Ok(minimal_hitting_sets(&es.cxps) == es.axps && minimal_hitting_sets(&es.axps) == es.cxps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, AGE, BANK, CREDIT, PURPOSE};
    use crate::model::{Classifier, Model};
    use crate::space::FeatureSpace;
    use crate::Condition;

    fn s(ix: &[usize]) -> FeatureSubset {
        FeatureSubset::from_indices(ix.iter().copied())
    }

    fn example1() -> Classifier {
        let (space, model, _) = fixtures::example1();
        Classifier::new(space, model).unwrap()
    }

    #[test]
    fn example1_axps() {
        let clf = example1();
        let p = Problem::new(&clf, fixtures::example1().2).unwrap();
        let es = enumerate(&p).unwrap();
        assert_eq!(es.axps, vec![s(&[AGE, PURPOSE]), s(&[CREDIT]), s(&[BANK])]);
        assert_eq!(es.cxps, vec![s(&[AGE, BANK, CREDIT]), s(&[BANK, CREDIT, PURPOSE])]);
        assert!(es.complete);
        assert!(check_duality(&es).unwrap());
        assert_eq!(enumerate_bruteforce(&p).unwrap(), es);
    }

    #[test]
    fn shrink_traces_in_ascending_order() {
        let clf = example1();
        let p = Problem::new(&clf, fixtures::example1().2).unwrap();
        // Age, Purpose and Credit each drop while Bank alone still suffices.
        assert_eq!(shrink(&p, FeatureSubset::full(4)).unwrap(), s(&[BANK]));
        assert_eq!(shrink(&p, s(&[CREDIT])).unwrap(), s(&[CREDIT]));
        assert!(matches!(shrink(&p, s(&[AGE])), Err(Error::Contract(_))));
    }

    #[test]
    fn grow_complement_is_a_cxp() {
        let clf = example1();
        let p = Problem::new(&clf, fixtures::example1().2).unwrap();
        let q = grow(&p, FeatureSubset::EMPTY).unwrap();
        let es = enumerate_bruteforce(&p).unwrap();
        assert!(es.cxps.contains(&q.complement(4)));
        assert!(matches!(grow(&p, s(&[CREDIT])), Err(Error::Contract(_))));
    }

    #[test]
    fn loan_axps() {
        let (space, f, g, x) = fixtures::loan();
        let clf_f = Classifier::new(space.clone(), f).unwrap();
        let es = enumerate(&Problem::new(&clf_f, x.clone()).unwrap()).unwrap();
        assert_eq!(
            es.axps,
            vec![s(&[AGE, CREDIT]), s(&[AGE, BANK]), s(&[PURPOSE, CREDIT, BANK])]
        );
        let clf_g = Classifier::new(space, g).unwrap();
        let es = enumerate(&Problem::new(&clf_g, x).unwrap()).unwrap();
        assert_eq!(es.axps, vec![s(&[AGE, CREDIT]), s(&[AGE, BANK])]);
    }

    #[test]
    fn constant_model() {
        let space = FeatureSpace::binary(3);
        let clf = Classifier::new(space.clone(), Model::constant_zero()).unwrap();
        let x = space.points().next().unwrap();
        let p = Problem::new(&clf, x).unwrap();
        let es = enumerate(&p).unwrap();
        assert_eq!(es.axps, vec![FeatureSubset::EMPTY]);
        assert!(es.cxps.is_empty());
        assert!(es.is_trivial());
        assert_eq!(enumerate_bruteforce(&p).unwrap(), es);
        assert_eq!(shrink(&p, FeatureSubset::full(3)).unwrap(), FeatureSubset::EMPTY);
    }

    #[test]
    fn single_relevant_feature() {
        let space = FeatureSpace::binary(3);
        let clf = Classifier::new(space.clone(), Model::rules(vec![vec![Condition::eq(1, 1)]])).unwrap();
        let x = space.instance(&[0.into(), 1.into(), 0.into()]).unwrap();
        let p = Problem::new(&clf, x).unwrap();
        let es = enumerate_bruteforce(&p).unwrap();
        assert_eq!(es.axps, vec![s(&[1])]);
        assert_eq!(es.cxps, vec![s(&[1])]);
        assert_eq!(grow(&p, FeatureSubset::EMPTY).unwrap(), s(&[0, 2]));
    }

    #[test]
    fn grow_adds_the_last_possible_feature() {
        let space = FeatureSpace::binary(2);
        let clf = Classifier::new(space.clone(), Model::rules(vec![vec![Condition::eq(0, 1)]])).unwrap();
        let x = space.instance(&[1.into(), 1.into()]).unwrap();
        let p = Problem::new(&clf, x).unwrap();
        assert_eq!(grow(&p, FeatureSubset::EMPTY).unwrap(), s(&[1]));
    }

    #[test]
    fn limit_truncates() {
        let clf = example1();
        let p = Problem::new(&clf, fixtures::example1().2).unwrap();
        let (es, _) = enumerate_with(
            &p,
            EnumerateOptions {
                limit: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!es.complete);
        assert_eq!(es.axps.len() + es.cxps.len(), 1);
        assert!(check_duality(&es).is_err());
    }

    #[test]
    fn duality_examples() {
        let yes = ExplanationSet::new(3, vec![s(&[1])], vec![s(&[1])], true);
        assert!(check_duality(&yes).unwrap());
        let no = ExplanationSet::new(3, vec![s(&[1, 2])], vec![s(&[1])], true);
        assert!(!check_duality(&no).unwrap());
    }

    #[test]
    fn json_shape() {
        let es = ExplanationSet::new(3, vec![s(&[2]), s(&[0, 1])], vec![s(&[0, 2]), s(&[1, 2])], true);
        assert_eq!(
            crate::json::to_canonical_string(&es),
            r#"{"axps":[[0,1],[2]],"complete":true,"cxps":[[0,2],[1,2]],"n":3}"#
        );
    }
}
