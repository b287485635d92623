//! Executable axioms for explanation aggregators.
//!
//! Most checks quantify over a bounded universe of explanation families
//! (every antichain over a small feature set) rather than over models; any
//! antichain is the AXp set of some model (see [`realize`]). Symmetry and
//! contraction are also checked end to end through real model transforms.

mod checks;
mod consistency;
mod realize;
mod universe;

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::ExplanationSet;
use crate::indices::{rational, IndexKind};
use crate::subset::FeatureSubset;

pub use checks::{
    check_contraction, check_contraction_family, check_efficiency, check_monotonicity, check_null_feature,
    check_symmetry, check_symmetry_family, check_unit_efficiency, contract_family, matrix, AxiomMatrix, AxiomRow,
    MATRIX_AXIOMS,
};
pub use consistency::{check_consistency, demonstrate_impossibility, Consistency, Transcript};
pub use realize::{realization_point, realize};
pub use universe::{universe, universe_count, DEFAULT_UNIVERSE_N, MAX_UNIVERSE_N};

/// A map from an explanation family to per-feature scores.
pub trait Aggregator: Sync {
    fn name(&self) -> String;

    /// One score per feature, `es.n` long. `es` may be any antichain.
    fn scores(&self, es: &ExplanationSet) -> Vec<BigRational>;
}

impl Aggregator for IndexKind {
    fn name(&self) -> String {
        self.short_name().to_string()
    }

    fn scores(&self, es: &ExplanationSet) -> Vec<BigRational> {
        self.raw_scores(es)
    }
}

/// An aggregator built from a closure.
pub struct FnAggregator<F> {
    name: String,
    f: F,
}

pub fn aggregator_fn<F>(name: impl Into<String>, f: F) -> FnAggregator<F>
where
    F: Fn(&ExplanationSet) -> Vec<BigRational> + Sync,
{
    FnAggregator { name: name.into(), f }
}

impl<F> Aggregator for FnAggregator<F>
where
    F: Fn(&ExplanationSet) -> Vec<BigRational> + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn scores(&self, es: &ExplanationSet) -> Vec<BigRational> {
        (self.f)(es)
    }
}

/// Aggregators that each break something on purpose, for testing the checks.
pub mod controls {
    use super::*;

    /// Every feature scores 1.
    pub fn constant_one() -> impl Aggregator {
        aggregator_fn("constant_one", |es: &ExplanationSet| vec![BigRational::one(); es.n])
    }

    /// (i+1) times the Holler-Packel count of feature i.
    pub fn position_biased() -> impl Aggregator {
        aggregator_fn("position_biased", |es: &ExplanationSet| {
            IndexKind::HollerPackel
                .raw_scores(es)
                .into_iter()
                .enumerate()
                .map(|(i, q)| q * rational(i as i64 + 1, 1))
                .collect()
        })
    }

    /// Half the Holler-Packel count.
    pub fn half_holler_packel() -> impl Aggregator {
        aggregator_fn("half_hp", |es: &ExplanationSet| {
            IndexKind::HollerPackel
                .raw_scores(es)
                .into_iter()
                .map(|q| q / rational(2, 1))
                .collect()
        })
    }

    /// Σ 1/|S|² over M_i.
    pub fn squared_deegan_packel() -> impl Aggregator {
        aggregator_fn("dp_squared_weights", |es: &ExplanationSet| {
            (0..es.n)
                .map(|i| {
                    es.containing(i)
                        .map(|s| rational(1, (s.len() * s.len()) as i64))
                        .fold(BigRational::zero(), |a, b| a + b)
                })
                .collect()
        })
    }

    /// |M_i|².
    pub fn squared_holler_packel() -> impl Aggregator {
        aggregator_fn("hp_squared", |es: &ExplanationSet| {
            IndexKind::HollerPackel
                .raw_scores(es)
                .into_iter()
                .map(|q| &q * &q)
                .collect()
        })
    }

    /// 1/|S|² for the smallest S in M_i.
    pub fn squared_responsibility() -> impl Aggregator {
        aggregator_fn("resp_squared", |es: &ExplanationSet| {
            IndexKind::Responsibility
                .raw_scores(es)
                .into_iter()
                .map(|q| &q * &q)
                .collect()
        })
    }

    /// Everything that should fail at least one axiom of every characterizing set.
    pub fn all() -> Vec<Box<dyn Aggregator>> {
        vec![
            Box::new(constant_one()),
            Box::new(position_biased()),
            Box::new(half_holler_packel()),
            Box::new(squared_deegan_packel()),
            Box::new(squared_holler_packel()),
            Box::new(squared_responsibility()),
        ]
    }
}

/// A built-in index (`hp`, `dp`, `resp`) or a control, by name. Hyphens and
/// underscores are interchangeable.
pub fn aggregator_by_name(name: &str) -> Option<Box<dyn Aggregator>> {
    let name = name.replace('-', "_");
    if let Ok(k) = name.replace('_', "-").parse::<IndexKind>() {
        return Some(Box::new(k));
    }
    controls::all().into_iter().find(|a| a.name() == name)
}

/// An order on families M_i used by α-monotonicity.
pub trait RankingFunction: Sync {
    fn name(&self) -> &'static str;

    /// α(a) ≤ α(b).
    fn le(&self, a: &[FeatureSubset], b: &[FeatureSubset]) -> bool;
}

/// α(S) = S, ordered by inclusion.
#[derive(Clone, Copy, Debug, Default)]
pub struct SubsetOrder;

/// α(S) = −min |S|; the empty family sits below everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NegMinSize;

impl RankingFunction for SubsetOrder {
    fn name(&self) -> &'static str {
        "subset_order"
    }

    fn le(&self, a: &[FeatureSubset], b: &[FeatureSubset]) -> bool {
        a.iter().all(|s| b.contains(s))
    }
}

impl RankingFunction for NegMinSize {
    fn name(&self) -> &'static str {
        "neg_min_size"
    }

    fn le(&self, a: &[FeatureSubset], b: &[FeatureSubset]) -> bool {
        let min = |f: &[FeatureSubset]| f.iter().map(|s| s.len()).min();
        match (min(a), min(b)) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(x), Some(y)) => y <= x,
        }
    }
}

pub fn ranking_function(name: &str) -> Option<&'static dyn RankingFunction> {
    match name {
        "subset_order" => Some(&SubsetOrder),
        "neg_min_size" => Some(&NegMinSize),
        _ => None,
    }
}

/// The total C(M) that scores must add up to.
///
/// Families whose only AXp is ∅ (constant models) carry no nonempty
/// explanation; every target is 0 on them, since Null Feature forces all
/// scores to 0 there anyway.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyTarget {
    /// Σ_i |M_i|.
    SumMemberships,
    /// |M|, counting nonempty AXps.
    CountAxps,
    /// 1.
    One,
}

impl EfficiencyTarget {
    pub const ALL: [EfficiencyTarget; 3] = [
        EfficiencyTarget::SumMemberships,
        EfficiencyTarget::CountAxps,
        EfficiencyTarget::One,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EfficiencyTarget::SumMemberships => "sum_memberships",
            EfficiencyTarget::CountAxps => "count_axps",
            EfficiencyTarget::One => "one",
        }
    }

    pub fn value(self, es: &ExplanationSet) -> BigRational {
        let nonempty = es.axps.iter().filter(|s| !s.is_empty());
        match self {
            EfficiencyTarget::SumMemberships => rational(nonempty.map(|s| s.len() as i64).sum(), 1),
            EfficiencyTarget::CountAxps => rational(nonempty.count() as i64, 1),
            EfficiencyTarget::One if nonempty.count() == 0 => BigRational::zero(),
            EfficiencyTarget::One => BigRational::one(),
        }
    }
}

impl std::str::FromStr for EfficiencyTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EfficiencyTarget::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown efficiency target '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
}

/// The data needed to re-run a failed check on a single case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// α(M_i(left)) ≤ α(M_i(right)) but score_i(left) > score_i(right).
    Monotonicity {
        ranking: String,
        left: ExplanationSet,
        right: ExplanationSet,
        feature: usize,
    },
    /// `right` is `left` relabelled by `permutation`.
    Symmetry {
        left: ExplanationSet,
        right: ExplanationSet,
        permutation: Vec<usize>,
        feature: usize,
    },
    NullFeature {
        family: ExplanationSet,
        feature: usize,
    },
    Efficiency {
        target: EfficiencyTarget,
        family: ExplanationSet,
    },
    UnitEfficiency {
        family: ExplanationSet,
        feature: usize,
    },
    /// `members` merged into feature `merged` of `contracted`.
    Contraction {
        family: ExplanationSet,
        members: FeatureSubset,
        contracted: ExplanationSet,
        merged: usize,
    },
}

impl Counterexample {
    /// True iff `agg` still violates the axiom on this case.
    pub fn replays(&self, agg: &dyn Aggregator) -> bool {
        match self {
            Counterexample::Monotonicity {
                ranking,
                left,
                right,
                feature,
            } => {
                let alpha = ranking_function(ranking).expect("known ranking function");
                let (a, b) = (members_of(left, *feature), members_of(right, *feature));
                alpha.le(&a, &b) && agg.scores(left)[*feature] > agg.scores(right)[*feature]
            }
            Counterexample::Symmetry {
                left,
                right,
                permutation,
                feature,
            } => agg.scores(left)[*feature] != agg.scores(right)[permutation[*feature]],
            Counterexample::NullFeature { family, feature } => !agg.scores(family)[*feature].is_zero(),
            Counterexample::Efficiency { target, family } => sum(&agg.scores(family)) != target.value(family),
            Counterexample::UnitEfficiency { family, feature } => !agg.scores(family)[*feature].is_one(),
            Counterexample::Contraction {
                family,
                members,
                contracted,
                merged,
            } => !checks::contraction_holds(agg, family, *members, contracted, *merged),
        }
    }
}

/// Outcome of one axiom check for one aggregator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub aggregator: String,
    pub verdict: Verdict,
    /// Number of cases examined before stopping.
    pub cases: u64,
    pub counterexample: Option<Counterexample>,
    /// Human-readable account of the counterexample with scores.
    pub detail: Option<String>,
}

impl AxiomReport {
    pub fn satisfied(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }

    pub(crate) fn pass(axiom: impl Into<String>, agg: &dyn Aggregator, cases: u64) -> Self {
        AxiomReport {
            axiom: axiom.into(),
            aggregator: agg.name(),
            verdict: Verdict::Satisfied,
            cases,
            counterexample: None,
            detail: None,
        }
    }

    pub(crate) fn fail(
        axiom: impl Into<String>,
        agg: &dyn Aggregator,
        cases: u64,
        cx: Counterexample,
        detail: String,
    ) -> Self {
        AxiomReport {
            axiom: axiom.into(),
            aggregator: agg.name(),
            verdict: Verdict::Violated,
            cases,
            counterexample: Some(cx),
            detail: Some(detail),
        }
    }

    /// Re-runs the stored counterexample; true for satisfied reports.
    pub fn replays(&self, agg: &dyn Aggregator) -> bool {
        self.counterexample.as_ref().is_none_or(|c| c.replays(agg))
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "VIOLATED",
        };
        write!(
            f,
            "{} / {}: {verdict} ({} cases)",
            self.aggregator, self.axiom, self.cases
        )?;
        if let Some(d) = &self.detail {
            write!(f, "\n    {d}")?;
        }
        Ok(())
    }
}

pub(crate) fn members_of(es: &ExplanationSet, i: usize) -> Vec<FeatureSubset> {
    es.containing(i).collect()
}

pub(crate) fn sum(v: &[BigRational]) -> BigRational {
    v.iter().fold(BigRational::zero(), |a, b| a + b)
}

pub(crate) fn show(v: &[BigRational]) -> String {
    let parts: Vec<String> = v.iter().map(|q| q.to_string()).collect();
    format!("({})", parts.join(", "))
}

pub(crate) fn show_family(es: &ExplanationSet) -> String {
    let parts: Vec<String> = es.axps.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}
