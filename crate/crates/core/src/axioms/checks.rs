use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    members_of, show, show_family, sum, universe, Aggregator, AxiomReport, Counterexample, EfficiencyTarget,
    NegMinSize, RankingFunction, SubsetOrder,
};
use crate::enumerate::{enumerate, ExplanationSet};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::space::Instance;
use crate::subset::{minimal_elements, FeatureSubset};
use crate::sufficiency::Problem;
use crate::transform::{contract, contraction_index_map, permute, Permutation};

/// α-monotonicity: for every feature i and families F, G with
/// α(M_i(F)) ≤ α(M_i(G)), score_i(F) ≤ score_i(G).
///
/// Families are grouped by M_i so only the extreme scores of each group
/// need comparing.
#[allow(clippy::needless_range_loop)]
pub fn check_monotonicity(
    agg: &dyn Aggregator,
    alpha: &dyn RankingFunction,
    families: &[ExplanationSet],
) -> AxiomReport {
    let axiom = format!("monotonicity[{}]", alpha.name());
    let scores: Vec<Vec<BigRational>> = families.iter().map(|f| agg.scores(f)).collect();
    let n = families.iter().map(|f| f.n).max().unwrap_or(0);
    let mut cases = 0u64;
    for i in 0..n {
        // key -> (index of family with max score, index with min score)
        let mut groups: BTreeMap<Vec<FeatureSubset>, (usize, usize)> = BTreeMap::new();
        for (k, f) in families.iter().enumerate().filter(|(_, f)| i < f.n) {
            let e = groups.entry(members_of(f, i)).or_insert((k, k));
            if scores[k][i] > scores[e.0][i] {
                e.0 = k;
            }
            if scores[k][i] < scores[e.1][i] {
                e.1 = k;
            }
        }
        for (a, &(hi, _)) in &groups {
            for (b, &(_, lo)) in &groups {
                cases += 1;
                if alpha.le(a, b) && scores[hi][i] > scores[lo][i] {
                    let detail = format!(
                        "feature {i}: M_i {a:?} ≤ {b:?} but scores {} on {} > {} on {}",
                        scores[hi][i],
                        show_family(&families[hi]),
                        scores[lo][i],
                        show_family(&families[lo]),
                    );
                    let cx = Counterexample::Monotonicity {
                        ranking: alpha.name().to_string(),
                        left: families[hi].clone(),
                        right: families[lo].clone(),
                        feature: i,
                    };
                    return AxiomReport::fail(axiom, agg, cases, cx, detail);
                }
            }
        }
    }
    AxiomReport::pass(axiom, agg, cases)
}

fn relabel(es: &ExplanationSet, pi: &Permutation) -> ExplanationSet {
    ExplanationSet::new(
        es.n,
        es.axps.iter().map(|s| pi.permute_subset(*s)).collect(),
        es.cxps.iter().map(|s| pi.permute_subset(*s)).collect(),
        es.complete,
    )
}

/// Symmetry on families: relabelling features by π relabels the scores.
pub fn check_symmetry_family(agg: &dyn Aggregator, families: &[ExplanationSet]) -> AxiomReport {
    let mut cases = 0u64;
    let mut perms: BTreeMap<usize, Vec<Permutation>> = BTreeMap::new();
    for f in families {
        let base = agg.scores(f);
        for pi in perms.entry(f.n).or_insert_with(|| Permutation::all(f.n)).iter() {
            cases += 1;
            let g = relabel(f, pi);
            let moved = agg.scores(&g);
            if let Some(i) = (0..f.n).find(|&i| base[i] != moved[pi.apply(i)]) {
                let detail = format!(
                    "π={:?}: scores {} on {} vs {} on {}",
                    pi.as_slice(),
                    show(&base),
                    show_family(f),
                    show(&moved),
                    show_family(&g)
                );
                let cx = Counterexample::Symmetry {
                    left: f.clone(),
                    right: g,
                    permutation: pi.as_slice().to_vec(),
                    feature: i,
                };
                return AxiomReport::fail("symmetry", agg, cases, cx, detail);
            }
        }
    }
    AxiomReport::pass("symmetry", agg, cases)
}

/// Symmetry end to end: permute the model and point, re-enumerate, compare.
pub fn check_symmetry(agg: &dyn Aggregator, clf: &Classifier, x: &Instance, pi: &Permutation) -> Result<AxiomReport> {
    let left = enumerate(&Problem::new(clf, x.clone())?)?;
    let moved = permute(clf.model(), clf.space(), x, pi)?;
    let clf2 = Classifier::new(moved.space, moved.model)?;
    let right = enumerate(&Problem::new(&clf2, moved.instance)?)?;
    let (a, b) = (agg.scores(&left), agg.scores(&right));
    match (0..clf.n()).find(|&i| a[i] != b[pi.apply(i)]) {
        None => Ok(AxiomReport::pass("symmetry", agg, 1)),
        Some(i) => {
            let detail = format!(
                "π={:?}: scores {} before, {} after relabelling",
                pi.as_slice(),
                show(&a),
                show(&b)
            );
            let cx = Counterexample::Symmetry {
                left,
                right,
                permutation: pi.as_slice().to_vec(),
                feature: i,
            };
            Ok(AxiomReport::fail("symmetry", agg, 1, cx, detail))
        }
    }
}

/// Features in no AXp score 0.
pub fn check_null_feature(agg: &dyn Aggregator, families: &[ExplanationSet]) -> AxiomReport {
    let mut cases = 0u64;
    for f in families {
        for (i, si) in agg.scores(f).iter().enumerate().take(f.n) {
            if f.containing(i).next().is_some() {
                continue;
            }
            cases += 1;
            if !si.is_zero() {
                let detail = format!("feature {i} is null in {} but scores {si}", show_family(f));
                let cx = Counterexample::NullFeature {
                    family: f.clone(),
                    feature: i,
                };
                return AxiomReport::fail("null_feature", agg, cases, cx, detail);
            }
        }
    }
    AxiomReport::pass("null_feature", agg, cases)
}

/// Scores add up to C(M).
pub fn check_efficiency(agg: &dyn Aggregator, target: EfficiencyTarget, families: &[ExplanationSet]) -> AxiomReport {
    let axiom = format!("efficiency[{}]", target.name());
    for (k, f) in families.iter().enumerate() {
        let s = agg.scores(f);
        let (total, want) = (sum(&s), target.value(f));
        if total != want {
            let detail = format!("on {} scores {} sum to {total}, C = {want}", show_family(f), show(&s));
            let cx = Counterexample::Efficiency {
                target,
                family: f.clone(),
            };
            return AxiomReport::fail(axiom, agg, k as u64 + 1, cx, detail);
        }
    }
    AxiomReport::pass(axiom, agg, families.len() as u64)
}

/// M_i = {{i}} implies score 1.
pub fn check_unit_efficiency(agg: &dyn Aggregator, families: &[ExplanationSet]) -> AxiomReport {
    let mut cases = 0u64;
    for f in families {
        for (i, si) in agg.scores(f).iter().enumerate().take(f.n) {
            if members_of(f, i) != [FeatureSubset::singleton(i)] {
                continue;
            }
            cases += 1;
            if !si.is_one() {
                let detail = format!("M_{i} = {{{{{i}}}}} in {} but score {si}", show_family(f));
                let cx = Counterexample::UnitEfficiency {
                    family: f.clone(),
                    feature: i,
                };
                return AxiomReport::fail("unit_efficiency", agg, cases, cx, detail);
            }
        }
    }
    AxiomReport::pass("unit_efficiency", agg, cases)
}

/// The AXp family after merging `members` into one feature.
///
/// A contracted set is sufficient iff its expansion is, and an expansion
/// either contains all of T or none of it. So the new AXps are the minimal
/// elements of {A : A∩T = ∅} ∪ {(A∖T) ∪ {[T]} : A∩T ≠ ∅}, relabelled.
/// Returns the family and the index of `[T]`.
pub fn contract_family(es: &ExplanationSet, members: FeatureSubset) -> Result<(ExplanationSet, usize)> {
    if members.len() < 2 || members.span() > es.n {
        return Err(Error::validation(format!(
            "cannot contract {members} in a family over {} features",
            es.n
        )));
    }
    let (old_to_new, merged) = contraction_index_map(es.n, members);
    let mapped: Vec<FeatureSubset> = es.axps.iter().map(|a| a.map(|i| old_to_new[i])).collect();
    let n_new = es.n - members.len() + 1;
    Ok((ExplanationSet::from_axps(n_new, minimal_elements(&mapped)), merged))
}

/// score([T]) ≤ Σ_{i∈T} score_i, with equality whenever T is an AXp and a
/// smallest one for each of its members.
pub(crate) fn contraction_holds(
    agg: &dyn Aggregator,
    family: &ExplanationSet,
    members: FeatureSubset,
    contracted: &ExplanationSet,
    merged: usize,
) -> bool {
    let before = agg.scores(family);
    let after = agg.scores(contracted);
    let parts = members.iter().fold(BigRational::zero(), |acc, i| acc + &before[i]);
    let merged_score = &after[merged];
    if *merged_score > parts {
        return false;
    }
    !equality_expected(family, members) || *merged_score == parts
}

pub(crate) fn equality_expected(family: &ExplanationSet, members: FeatureSubset) -> bool {
    family.axps.contains(&members)
        && members.iter().all(|i| {
            family
                .containing(i)
                .map(|s| s.len())
                .min()
                .is_some_and(|k| k == members.len())
        })
}

fn null_free(family: &ExplanationSet, members: FeatureSubset) -> bool {
    members.iter().all(|i| family.containing(i).next().is_some())
}

/// Contraction over families, for every T of size ≥ 2 free of null features.
pub fn check_contraction_family(agg: &dyn Aggregator, families: &[ExplanationSet]) -> AxiomReport {
    let mut cases = 0u64;
    for f in families {
        for bits in 0..1u64 << f.n {
            let t = FeatureSubset::from_bits(bits);
            if t.len() < 2 || !null_free(f, t) {
                continue;
            }
            cases += 1;
            let (c, merged) = contract_family(f, t).expect("T is in range");
            if !contraction_holds(agg, f, t, &c, merged) {
                let (cx, detail) = contraction_detail(agg, f, t, &c, merged);
                return AxiomReport::fail("contraction", agg, cases, cx, detail);
            }
        }
    }
    AxiomReport::pass("contraction", agg, cases)
}

fn contraction_detail(
    agg: &dyn Aggregator,
    f: &ExplanationSet,
    t: FeatureSubset,
    c: &ExplanationSet,
    merged: usize,
) -> (Counterexample, String) {
    let detail = format!(
        "T={t} on {}: score([T]) = {} on {}, parts {}{}",
        show_family(f),
        agg.scores(c)[merged],
        show_family(c),
        show(&t.iter().map(|i| agg.scores(f)[i].clone()).collect::<Vec<_>>()),
        if equality_expected(f, t) {
            ", equality expected"
        } else {
            ""
        }
    );
    let cx = Counterexample::Contraction {
        family: f.clone(),
        members: t,
        contracted: c.clone(),
        merged,
    };
    (cx, detail)
}

/// Contraction end to end: merge T in the model, re-enumerate, compare.
///
/// Also cross-checks the re-enumerated family against [`contract_family`].
pub fn check_contraction(
    agg: &dyn Aggregator,
    clf: &Classifier,
    x: &Instance,
    members: FeatureSubset,
) -> Result<AxiomReport> {
    let family = enumerate(&Problem::new(clf, x.clone())?)?;
    if !null_free(&family, members) {
        return Err(Error::contract(format!(
            "contraction set {members} contains a null feature"
        )));
    }
    let c = contract(clf.model(), clf.space(), x, members)?;
    let clf2 = Classifier::new(c.space.clone(), c.model.clone())?;
    let contracted = enumerate(&Problem::new(&clf2, c.instance.clone())?)?;
    let (expected, merged) = contract_family(&family, members)?;
    if expected.axps != contracted.axps || merged != c.merged {
        return Err(Error::OracleMismatch(format!(
            "contracted model has AXps {:?}, family contraction predicts {:?}",
            contracted.axps, expected.axps
        )));
    }
    if contraction_holds(agg, &family, members, &contracted, merged) {
        Ok(AxiomReport::pass("contraction", agg, 1))
    } else {
        let (cx, detail) = contraction_detail(agg, &family, members, &contracted, merged);
        Ok(AxiomReport::fail("contraction", agg, 1, cx, detail))
    }
}

/// Column order of [`matrix`].
pub const MATRIX_AXIOMS: [&str; 9] = [
    "monotonicity[subset_order]",
    "monotonicity[neg_min_size]",
    "symmetry",
    "null_feature",
    "efficiency[sum_memberships]",
    "efficiency[count_axps]",
    "efficiency[one]",
    "unit_efficiency",
    "contraction",
];

#[derive(Clone, Debug, Serialize)]
pub struct AxiomRow {
    pub aggregator: String,
    pub reports: Vec<AxiomReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomMatrix {
    pub universe_n: usize,
    pub families: usize,
    pub axioms: Vec<String>,
    pub rows: Vec<AxiomRow>,
}

impl AxiomMatrix {
    pub fn get(&self, aggregator: &str, axiom: &str) -> Option<&AxiomReport> {
        self.rows
            .iter()
            .find(|r| r.aggregator == aggregator)?
            .reports
            .iter()
            .find(|r| r.axiom == axiom)
    }

    /// A fixed-width pass/fail table.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.aggregator.len()).max().unwrap_or(0).max(10);
        let mut out = format!("{:width$}", "aggregator");
        for a in &self.axioms {
            out.push_str(&format!("  {a}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:width$}", row.aggregator));
            for (a, r) in self.axioms.iter().zip(&row.reports) {
                let mark = if r.satisfied() { "pass" } else { "FAIL" };
                out.push_str(&format!("  {mark:<w$}", w = a.len()));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every axiom against every aggregator on the universe over `n` features.
pub fn matrix(aggs: &[&dyn Aggregator], n: usize) -> Result<AxiomMatrix> {
    let families: Vec<ExplanationSet> = universe(n, None)?.collect();
    let rows = aggs
        .par_iter()
        .map(|agg| {
            let agg = *agg;
            AxiomRow {
                aggregator: agg.name(),
                reports: vec![
                    check_monotonicity(agg, &SubsetOrder, &families),
                    check_monotonicity(agg, &NegMinSize, &families),
                    check_symmetry_family(agg, &families),
                    check_null_feature(agg, &families),
                    check_efficiency(agg, EfficiencyTarget::SumMemberships, &families),
                    check_efficiency(agg, EfficiencyTarget::CountAxps, &families),
                    check_efficiency(agg, EfficiencyTarget::One, &families),
                    check_unit_efficiency(agg, &families),
                    check_contraction_family(agg, &families),
                ],
            }
        })
        .collect();
    Ok(AxiomMatrix {
        universe_n: n,
        families: families.len(),
        axioms: MATRIX_AXIOMS.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}
