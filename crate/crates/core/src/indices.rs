//! Feature importance from a complete set of abductive explanations.
//!
//! Scores are exact rationals. Decimals appear only when rendering.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::ExplanationSet;
use crate::error::Result;

/// The three built-in aggregators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndexKind {
    #[serde(rename = "hp")]
    HollerPackel,
    #[serde(rename = "dp")]
    DeeganPackel,
    #[serde(rename = "resp")]
    Responsibility,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [
        IndexKind::HollerPackel,
        IndexKind::DeeganPackel,
        IndexKind::Responsibility,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            IndexKind::HollerPackel => "hp",
            IndexKind::DeeganPackel => "dp",
            IndexKind::Responsibility => "resp",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            IndexKind::HollerPackel => "Holler-Packel",
            IndexKind::DeeganPackel => "Deegan-Packel",
            IndexKind::Responsibility => "Responsibility",
        }
    }

    /// Raw scores for a complete explanation set.
    pub fn score(self, es: &ExplanationSet) -> Result<ScoreVector> {
        match self {
            IndexKind::HollerPackel => holler_packel(es),
            IndexKind::DeeganPackel => deegan_packel(es),
            IndexKind::Responsibility => responsibility(es),
        }
    }

    /// Raw scores without the completeness check; used where the caller
    /// builds families directly.
    pub fn raw_scores(self, es: &ExplanationSet) -> Vec<BigRational> {
        (0..es.n)
            .map(|i| {
                let sizes = es.containing(i).map(|s| s.len() as i64);
                match self {
                    IndexKind::HollerPackel => rational(sizes.count() as i64, 1),
                    IndexKind::DeeganPackel => sizes.map(|k| rational(1, k)).fold(BigRational::zero(), |a, b| a + b),
                    IndexKind::Responsibility => sizes.min().map_or_else(BigRational::zero, |k| rational(1, k)),
                }
            })
            .collect()
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hp" | "holler-packel" => Ok(IndexKind::HollerPackel),
            "dp" | "deegan-packel" => Ok(IndexKind::DeeganPackel),
            "resp" | "responsibility" => Ok(IndexKind::Responsibility),
            other => Err(format!("unknown index '{other}' (expected hp, dp or resp)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Raw,
    /// Divide by 2^(n-1).
    #[serde(rename = "powerset")]
    PowerSet,
    /// Divide by the total; all-zero vectors stay all-zero.
    #[serde(rename = "sum")]
    SumToOne,
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "powerset" => Ok(Normalization::PowerSet),
            "sum" => Ok(Normalization::SumToOne),
            other => Err(format!(
                "unknown normalization '{other}' (expected raw, powerset or sum)"
            )),
        }
    }
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::PowerSet => "powerset",
            Normalization::SumToOne => "sum",
        }
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreVector {
    pub scores: Vec<BigRational>,
    pub index: IndexKind,
    pub normalization: Normalization,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn sum(&self) -> BigRational {
        self.scores.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.scores.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Scores rounded to `places` decimals, half to even.
    pub fn rounded(&self, places: u32) -> Vec<f64> {
        self.scores
            .iter()
            .map(|q| round_decimal(q, places).to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn rank(&self) -> Ranking {
        rank(&self.scores)
    }

    /// `{name: value}` with values rounded to three decimals.
    pub fn to_json(&self, names: &[String]) -> serde_json::Value {
        let map = names
            .iter()
            .zip(self.rounded(3))
            .map(|(n, v)| (n.clone(), serde_json::json!(v)))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }

    /// `{name: "p/q"}` exact values.
    pub fn to_exact_json(&self, names: &[String]) -> serde_json::Value {
        let map = names
            .iter()
            .zip(&self.scores)
            .map(|(n, q)| (n.clone(), serde_json::json!(q.to_string())))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}

/// Rounds to `places` decimals with ties going to the even neighbour.
pub fn round_decimal(q: &BigRational, places: u32) -> BigRational {
    let scale = BigRational::from_integer(BigInt::from(10u32).pow(places));
    let scaled = q * &scale;
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let half = rational(1, 2);
    let up = match frac.cmp(&half) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => floor.to_integer().is_odd(),
    };
    let whole = if up { floor + BigRational::one() } else { floor };
    whole / scale
}

trait IsOdd {
    fn is_odd(&self) -> bool;
}

impl IsOdd for BigInt {
    fn is_odd(&self) -> bool {
        (self % BigInt::from(2)).abs().is_one()
    }
}

fn raw(es: &ExplanationSet, kind: IndexKind) -> Result<ScoreVector> {
    es.ensure_complete()?;
    Ok(ScoreVector {
        scores: kind.raw_scores(es),
        index: kind,
        normalization: Normalization::Raw,
    })
}

/// η_i = |M_i|.
pub fn holler_packel(es: &ExplanationSet) -> Result<ScoreVector> {
    raw(es, IndexKind::HollerPackel)
}

/// φ_i = Σ_{S ∈ M_i} 1/|S|.
pub fn deegan_packel(es: &ExplanationSet) -> Result<ScoreVector> {
    raw(es, IndexKind::DeeganPackel)
}

/// ρ_i = max_{S ∈ M_i} 1/|S|, or 0 when M_i is empty.
pub fn responsibility(es: &ExplanationSet) -> Result<ScoreVector> {
    raw(es, IndexKind::Responsibility)
}

/// Rescales a raw vector.
pub fn normalize(sv: &ScoreVector, mode: Normalization) -> ScoreVector {
    let n = sv.len();
    let divisor = match mode {
        Normalization::Raw => BigRational::one(),
        Normalization::PowerSet => BigRational::from_integer(BigInt::one() << n.saturating_sub(1)),
        Normalization::SumToOne => {
            let total = sv.sum();
            if total.is_zero() {
                BigRational::one()
            } else {
                total
            }
        }
    };
    ScoreVector {
        scores: sv.scores.iter().map(|q| q / &divisor).collect(),
        index: sv.index,
        normalization: mode,
    }
}

/// Dense ranks: the highest score gets 1, equal scores share a rank and the
/// next distinct score takes the next integer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub rank: Vec<usize>,
}

impl Ranking {
    /// Features holding rank `r`.
    pub fn at(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.rank
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k == r)
            .map(|(i, _)| i)
    }

    pub fn to_json(&self, names: &[String]) -> serde_json::Value {
        let map = names
            .iter()
            .zip(&self.rank)
            .map(|(n, r)| (n.clone(), serde_json::json!(r)))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}

pub fn rank<T: Ord>(scores: &[T]) -> Ranking {
    let mut distinct: Vec<&T> = scores.iter().collect();
    distinct.sort_by(|a, b| b.cmp(a));
    distinct.dedup();
    Ranking {
        rank: scores
            .iter()
            .map(|s| distinct.iter().position(|d| *d == s).expect("score present") + 1)
            .collect(),
    }
}

/// One row per feature, one column per vector, three-decimal values.
pub fn scores_csv(names: &[String], vectors: &[ScoreVector]) -> String {
    let mut out = String::from("feature");
    for v in vectors {
        out.push(',');
        out.push_str(v.index.short_name());
    }
    out.push('\n');
    let rounded: Vec<Vec<f64>> = vectors.iter().map(|v| v.rounded(3)).collect();
    for (i, name) in names.iter().enumerate() {
        out.push_str(name);
        for r in &rounded {
            out.push_str(&format!(",{}", r[i]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subset::FeatureSubset;

    fn s(ix: &[usize]) -> FeatureSubset {
        FeatureSubset::from_indices(ix.iter().copied())
    }

    fn q(a: i64, b: i64) -> BigRational {
        rational(a, b)
    }

    #[test]
    fn single_axp_deegan_packel() {
        let es = ExplanationSet::from_axps(4, vec![s(&[1, 2])]);
        let dp = deegan_packel(&es).unwrap();
        assert_eq!(dp.scores, vec![q(0, 1), q(1, 2), q(1, 2), q(0, 1)]);
        assert_eq!(dp.sum(), q(1, 1));
    }

    #[test]
    fn constant_model_scores_zero() {
        let es = ExplanationSet::new(3, vec![FeatureSubset::EMPTY], vec![], true);
        for kind in IndexKind::ALL {
            assert!(kind.score(&es).unwrap().scores.iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn incomplete_sets_are_refused() {
        let es = ExplanationSet::new(2, vec![s(&[0])], vec![], false);
        for kind in IndexKind::ALL {
            assert!(kind.score(&es).is_err());
        }
    }

    #[test]
    fn normalization() {
        let sv = ScoreVector {
            scores: vec![q(1, 3), q(1, 1), q(5, 6), q(5, 6)],
            index: IndexKind::DeeganPackel,
            normalization: Normalization::Raw,
        };
        let sum = normalize(&sv, Normalization::SumToOne);
        assert_eq!(sum.scores, vec![q(1, 9), q(1, 3), q(5, 18), q(5, 18)]);
        let ps = normalize(&sv, Normalization::PowerSet);
        assert_eq!(ps.scores[0], q(1, 24));
        let zero = ScoreVector {
            scores: vec![q(0, 1); 3],
            ..sv
        };
        assert_eq!(normalize(&zero, Normalization::SumToOne).scores, vec![q(0, 1); 3]);
    }

    #[test]
    fn rounding_is_half_even() {
        assert_eq!(round_decimal(&q(1, 16), 3), q(62, 1000));
        assert_eq!(round_decimal(&q(3, 16), 3), q(188, 1000));
        assert_eq!(round_decimal(&q(1, 24), 3), q(42, 1000));
        assert_eq!(round_decimal(&q(5, 48), 3), q(104, 1000));
        assert_eq!(round_decimal(&q(1, 3), 3), q(333, 1000));
    }

    #[test]
    fn dense_ranking() {
        assert_eq!(rank(&[3, 1, 2]).rank, vec![1, 3, 2]);
        assert_eq!(rank(&[5, 5, 5]).rank, vec![1, 1, 1]);
        assert_eq!(rank(&[2, 7, 7, 0]).rank, vec![2, 1, 1, 3]);
    }

    #[test]
    fn csv_layout() {
        let es = ExplanationSet::from_axps(2, vec![s(&[0])]);
        let v: Vec<ScoreVector> = IndexKind::ALL.iter().map(|k| k.score(&es).unwrap()).collect();
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(scores_csv(&names, &v), "feature,hp,dp,resp\na,1,1,1\nb,0,0,0\n");
    }
}
