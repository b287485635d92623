//! The two-level attack model and the rank-frequency experiment run on it.
//!
//! An out-of-distribution gate routes in-distribution points to a biased
//! model that reads only a sensitive feature, and everything else to an
//! unbiased model that never reads it. The experiment explains the composite
//! at every sampled point and counts how often each feature of interest lands
//! at rank 1, 2 or 3.

use std::fmt;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{enumerate_with, EnumerateOptions, ExplanationSet};
use crate::error::{Error, Result};
use crate::indices::IndexKind;
use crate::model::{validate, Classifier, Model};
use crate::random::rng;
use crate::space::{FeatureSpace, Instance};
use crate::subset::FeatureSubset;
use crate::sufficiency::{Problem, DEFAULT_ORACLE_CAP};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    /// Outputs 1 on in-distribution points.
    pub ood_gate: Model,
    pub biased: Model,
    pub unbiased: Model,
    pub sensitive_index: usize,
    pub uncorrelated_indices: Vec<usize>,
}

/// A single-feature change that alters a model's output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DependenceWitness {
    pub model: String,
    pub feature: usize,
    pub x: Instance,
    pub flipped: Instance,
}

impl DependenceWitness {
    pub fn display<'a>(&'a self, space: &'a FeatureSpace) -> impl fmt::Display + 'a {
        struct D<'a>(&'a DependenceWitness, &'a FeatureSpace);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let (w, space) = (self.0, self.1);
                let show = |x: &Instance| {
                    space
                        .values(x)
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                write!(
                    f,
                    "{} model reads '{}': output changes between ({}) and ({})",
                    w.model,
                    space.feature(w.feature).name,
                    show(&w.x),
                    show(&w.flipped)
                )
            }
        }
        D(self, space)
    }
}

/// Exhaustively looks for a point and a feature outside `allowed` whose
/// change alone alters the output of `model`.
pub fn find_dependence(
    model: &Model,
    space: &FeatureSpace,
    allowed: FeatureSubset,
    cap: u128,
) -> Result<Option<(usize, Instance, Instance)>> {
    if space.size() > cap {
        return Err(Error::OracleTooLarge {
            required: space.size(),
            cap,
        });
    }
    let cards = space.cardinalities();
    for x in space.points() {
        let y = model.eval(space, x.as_slice());
        let mut z = x.clone();
        for j in (0..space.len()).filter(|&j| !allowed.contains(j)) {
            for v in (0..cards[j]).filter(|&v| v != x.get(j)) {
                z.0[j] = v;
                if model.eval(space, z.as_slice()) != y {
                    return Ok(Some((j, x, z)));
                }
            }
            z.0[j] = x.get(j);
        }
    }
    Ok(None)
}

impl AttackSpec {
    /// Flip-tests both sub-models over the whole space. Empty means the
    /// biased model reads only the sensitive feature and the unbiased model
    /// never reads it.
    pub fn verify(&self, space: &FeatureSpace) -> Result<Vec<DependenceWitness>> {
        let n = space.len();
        let s = self.sensitive_index;
        if s >= n {
            return Err(Error::validation(format!(
                "sensitive_index {s} out of range for {n} features"
            )));
        }
        if let Some(&u) = self.uncorrelated_indices.iter().find(|&&u| u >= n || u == s) {
            return Err(Error::validation(format!(
                "uncorrelated_indices: {u} is out of range or the sensitive feature"
            )));
        }
        for (name, m) in [
            ("ood_gate", &self.ood_gate),
            ("biased", &self.biased),
            ("unbiased", &self.unbiased),
        ] {
            if let Some(d) = validate(m, space).into_iter().find(|d| d.fatal) {
                return Err(Error::validation(format!("{name}: {d}")));
            }
        }
        let mut out = Vec::new();
        let checks = [
            ("biased", &self.biased, FeatureSubset::singleton(s)),
            ("unbiased", &self.unbiased, FeatureSubset::full(n).without(s)),
        ];
        for (name, model, allowed) in checks {
            if let Some((feature, x, flipped)) = find_dependence(model, space, allowed, DEFAULT_ORACLE_CAP)? {
                out.push(DependenceWitness {
                    model: name.to_string(),
                    feature,
                    x,
                    flipped,
                });
            }
        }
        Ok(out)
    }
}

/// The gated composite: `ood_gate(x) = 1` (in distribution) uses the biased
/// model, otherwise the unbiased one. Refuses specs whose sub-models read
/// features they should not, naming the witness.
pub fn compose_attack(spec: &AttackSpec, space: &FeatureSpace) -> Result<Model> {
    if let Some(w) = spec.verify(space)?.first() {
        return Err(Error::validation(w.display(space).to_string()));
    }
    Ok(Model::gated(
        spec.ood_gate.clone(),
        spec.biased.clone(),
        spec.unbiased.clone(),
    ))
}

/// How test points are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub seed: u64,
    pub samples: usize,
    /// Per-feature value weights in domain order; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    /// Forces this share of points into the region by rejection sampling.
    /// Without it the share follows the weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_distribution_fraction: Option<f64>,
}

const MAX_REJECTIONS: usize = 1_000_000;

impl DatasetConfig {
    fn samplers(&self, space: &FeatureSpace) -> Result<Vec<WeightedIndex<f64>>> {
        let n = space.len();
        let weights = match &self.weights {
            Some(w) if w.len() != n => {
                return Err(Error::validation(format!(
                    "dataset.weights: {} entries for {n} features",
                    w.len()
                )))
            }
            Some(w) => w.clone(),
            None => space.cardinalities().iter().map(|&c| vec![1.0; c]).collect(),
        };
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let def = space.feature(i);
                if w.len() != def.cardinality() {
                    return Err(Error::validation(format!(
                        "dataset.weights[{i}] ({}): {} weights for {} values",
                        def.name,
                        w.len(),
                        def.cardinality()
                    )));
                }
                WeightedIndex::new(w)
                    .map_err(|e| Error::validation(format!("dataset.weights[{i}] ({}): {e}", def.name)))
            })
            .collect()
    }

    /// Probability that a point drawn from the weights lands where `region`
    /// outputs 1, by enumeration of the whole space.
    pub fn region_measure(&self, space: &FeatureSpace, region: &Model) -> Result<f64> {
        if space.size() > DEFAULT_ORACLE_CAP {
            return Err(Error::OracleTooLarge {
                required: space.size(),
                cap: DEFAULT_ORACLE_CAP,
            });
        }
        let probs: Vec<Vec<f64>> = match &self.weights {
            Some(ws) => {
                self.samplers(space)?;
                ws.iter()
                    .map(|w| {
                        let t: f64 = w.iter().sum();
                        w.iter().map(|v| v / t).collect()
                    })
                    .collect()
            }
            None => space.cardinalities().iter().map(|&c| vec![1.0 / c as f64; c]).collect(),
        };
        Ok(space
            .points()
            .filter(|x| region.eval(space, x.as_slice()))
            .map(|x| x.0.iter().enumerate().map(|(i, &v)| probs[i][v]).product::<f64>())
            .sum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dataset {
    pub points: Vec<Instance>,
    /// Number of points inside the region.
    pub in_distribution: usize,
}

impl Dataset {
    pub fn in_distribution_fraction(&self) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            self.in_distribution as f64 / self.points.len() as f64
        }
    }
}

/// Draws `cfg.samples` points; the result depends only on `cfg`, `space`
/// and `region`.
pub fn generate_dataset(cfg: &DatasetConfig, space: &FeatureSpace, region: &Model) -> Result<Dataset> {
    if let Some(d) = validate(region, space).into_iter().find(|d| d.fatal) {
        return Err(Error::validation(format!("region: {d}")));
    }
    if let Some(q) = cfg.in_distribution_fraction {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::validation(format!(
                "dataset.in_distribution_fraction: {q} not in [0, 1]"
            )));
        }
        if space.size() <= DEFAULT_ORACLE_CAP {
            let m = cfg.region_measure(space, region)?;
            if (q > 0.0 && m == 0.0) || (q < 1.0 && m >= 1.0 - 1e-12) {
                return Err(Error::validation(format!(
                    "dataset.in_distribution_fraction: {q} unreachable, the region has measure {m}"
                )));
            }
        }
    }
    let samplers = cfg.samplers(space)?;
    let mut rng = rng(cfg.seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| Instance(samplers.iter().map(|s| s.sample(rng)).collect());
    let mut points = Vec::with_capacity(cfg.samples);
    let mut inside = 0;
    for _ in 0..cfg.samples {
        let x = match cfg.in_distribution_fraction {
            None => draw(&mut rng),
            Some(q) => {
                let want = rng.gen_bool(q);
                let mut tries = 0;
                loop {
                    let x = draw(&mut rng);
                    if region.eval(space, x.as_slice()) == want {
                        break x;
                    }
                    tries += 1;
                    if tries == MAX_REJECTIONS {
                        return Err(Error::validation(format!(
                            "dataset.in_distribution_fraction: no {} point found in {MAX_REJECTIONS} draws",
                            if want { "in-distribution" } else { "out-of-distribution" }
                        )));
                    }
                }
            }
        };
        inside += usize::from(region.eval(space, x.as_slice()));
        points.push(x);
    }
    Ok(Dataset {
        points,
        in_distribution: inside,
    })
}

/// An attack as stored on disk: features, the three models referenced by
/// index, the features of interest by name, and the sampling setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub features: FeatureSpace,
    pub sensitive: String,
    pub uncorrelated: Vec<String>,
    pub ood_gate: Model,
    pub biased: Model,
    pub unbiased: Model,
    pub dataset: DatasetConfig,
}

impl AttackConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn spec(&self) -> Result<AttackSpec> {
        let find = |field: &str, name: &str| {
            self.features
                .index_of(name)
                .ok_or_else(|| Error::validation(format!("{field}: unknown feature '{name}'")))
        };
        Ok(AttackSpec {
            ood_gate: self.ood_gate.clone(),
            biased: self.biased.clone(),
            unbiased: self.unbiased.clone(),
            sensitive_index: find("sensitive", &self.sensitive)?,
            uncorrelated_indices: self
                .uncorrelated
                .iter()
                .map(|u| find("uncorrelated", u))
                .collect::<Result<_>>()?,
        })
    }

    /// Verifies the spec and binds the composite to the feature space.
    pub fn build(&self) -> Result<(AttackSpec, Classifier)> {
        let spec = self.spec()?;
        let model = compose_attack(&spec, &self.features)?;
        Ok((spec, Classifier::new(self.features.clone(), model)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyRow {
    pub feature: String,
    pub method: String,
    /// Points at which the feature holds rank 1, 2 and 3.
    pub counts: [usize; 3],
}

impl FrequencyRow {
    pub fn fraction(&self, rank: usize, samples: usize) -> f64 {
        if samples == 0 {
            0.0
        } else {
            self.counts[rank - 1] as f64 / samples as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    /// Test-set size; the denominator of every fraction.
    pub samples: usize,
    pub in_distribution: usize,
    /// Points whose enumeration hit the limit; they count towards no rank.
    pub truncated: usize,
    /// Points where changing only the sensitive feature flips the composite.
    pub flip_sensitive: usize,
    /// Points breaking singleton-CXp dominance. Always 0 unless the
    /// enumeration is wrong.
    pub duality_exceptions: usize,
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn row(&self, feature: &str, method: &str) -> Option<&FrequencyRow> {
        self.rows.iter().find(|r| r.feature == feature && r.method == method)
    }

    pub fn top1(&self, feature: &str, kind: IndexKind) -> Option<f64> {
        self.row(feature, kind.short_name())
            .map(|r| r.fraction(1, self.samples))
    }

    /// `feature,method,1st,2nd,3rd` with three-decimal fractions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,method,1st,2nd,3rd\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.3},{:.3},{:.3}\n",
                r.feature,
                r.method,
                r.fraction(1, self.samples),
                r.fraction(2, self.samples),
                r.fraction(3, self.samples)
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "feature": r.feature,
                    "method": r.method,
                    "counts": r.counts,
                    "fractions": (1..=3).map(|k| r.fraction(k, self.samples)).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "samples": self.samples,
            "in_distribution": self.in_distribution,
            "truncated": self.truncated,
            "flip_sensitive": self.flip_sensitive,
            "duality_exceptions": self.duality_exceptions,
            "rows": rows,
        })
    }
}

struct PointOutcome {
    inside: bool,
    flip_sensitive: bool,
    exceptions: usize,
    /// Per kind, the rank of each feature of interest; `None` if truncated.
    ranks: Option<Vec<Vec<usize>>>,
}

/// Singleton CXps whose feature misses some AXp, plus one if flipping the
/// sensitive feature changes the prediction but `{s}` is not a CXp.
fn dominance_exceptions(es: &ExplanationSet, s: usize, flip_sensitive: bool) -> usize {
    let mut bad = es
        .cxps
        .iter()
        .filter(|c| c.len() == 1)
        .filter(|c| es.axps.iter().any(|a| !c.is_subset(*a)))
        .count();
    if flip_sensitive && !es.cxps.contains(&FeatureSubset::singleton(s)) {
        bad += 1;
    }
    bad
}

/// Explains the composite at every point (in parallel, merged in input
/// order) and tabulates dense-rank frequencies of the sensitive and
/// uncorrelated features under each of `kinds`.
pub fn run_experiment(
    spec: &AttackSpec,
    composite: &Classifier,
    points: &[Instance],
    kinds: &[IndexKind],
    limit: Option<usize>,
) -> Result<FrequencyTable> {
    let space = composite.space();
    let gate = &spec.ood_gate;
    let s = spec.sensitive_index;
    let mut interest = vec![s];
    interest.extend(&spec.uncorrelated_indices);
    let opts = EnumerateOptions {
        limit,
        ..Default::default()
    };
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .map(|x| {
            let problem = Problem::new(composite, x.clone())?;
            let y = problem.prediction();
            let cards = space.cardinalities();
            let mut z = x.clone();
            let flip_sensitive = (0..cards[s]).filter(|&v| v != x.get(s)).any(|v| {
                z.0[s] = v;
                composite.eval(z.as_slice()) != y
            });
            let inside = gate.eval(space, x.as_slice());
            let (es, _) = enumerate_with(&problem, opts)?;
            if !es.complete {
                return Ok(PointOutcome {
                    inside,
                    flip_sensitive,
                    exceptions: 0,
                    ranks: None,
                });
            }
            let exceptions = dominance_exceptions(&es, s, flip_sensitive);
            let ranks = kinds
                .iter()
                .map(|k| {
                    let r = k.score(&es)?.rank();
                    Ok(interest.iter().map(|&i| r.rank[i]).collect())
                })
                .collect::<Result<_>>()?;
            Ok(PointOutcome {
                inside,
                flip_sensitive,
                exceptions,
                ranks: Some(ranks),
            })
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<FrequencyRow> = interest
        .iter()
        .flat_map(|&i| {
            kinds.iter().map(move |k| FrequencyRow {
                feature: space.feature(i).name.clone(),
                method: k.short_name().to_string(),
                counts: [0; 3],
            })
        })
        .collect();
    let mut table = FrequencyTable {
        samples: points.len(),
        in_distribution: 0,
        truncated: 0,
        flip_sensitive: 0,
        duality_exceptions: 0,
        rows: Vec::new(),
    };
    for o in &outcomes {
        table.in_distribution += usize::from(o.inside);
        table.flip_sensitive += usize::from(o.flip_sensitive);
        table.duality_exceptions += o.exceptions;
        let Some(ranks) = &o.ranks else {
            table.truncated += 1;
            continue;
        };
        for (k, per_kind) in ranks.iter().enumerate() {
            for (f, &r) in per_kind.iter().enumerate() {
                if (1..=3).contains(&r) {
                    rows[f * kinds.len() + k].counts[r - 1] += 1;
                }
            }
        }
    }
    table.rows = rows;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::compas_like;
    use crate::model::Condition;

    #[test]
    fn compas_like_spec_verifies() {
        let cfg = compas_like();
        let (spec, clf) = cfg.build().unwrap();
        assert!(spec.verify(&cfg.features).unwrap().is_empty());
        assert_eq!(clf.n(), 9);
        assert!(cfg.features.cardinalities().iter().all(|&c| c == 2 || c == 3));
    }

    #[test]
    fn gate_dispatch() {
        let cfg = compas_like();
        let (spec, clf) = cfg.build().unwrap();
        let space = &cfg.features;
        for x in space.points().step_by(7) {
            let want = if spec.ood_gate.eval(space, x.as_slice()) {
                spec.biased.eval(space, x.as_slice())
            } else {
                spec.unbiased.eval(space, x.as_slice())
            };
            assert_eq!(clf.eval(x.as_slice()), want);
        }
    }

    #[test]
    fn biased_model_reading_another_feature_is_refused() {
        let mut cfg = compas_like();
        let uc1 = cfg.features.index_of("uc1").unwrap();
        let race = cfg.features.index_of("race").unwrap();
        cfg.biased = Model::rules(vec![vec![
            Condition::eq(race, "african_american"),
            Condition::eq(uc1, 1),
        ]]);
        let spec = cfg.spec().unwrap();
        let w = spec.verify(&cfg.features).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].model, "biased");
        assert_eq!(w[0].feature, uc1);
        assert_ne!(
            spec.biased.eval(&cfg.features, w[0].x.as_slice()),
            spec.biased.eval(&cfg.features, w[0].flipped.as_slice())
        );
        let err = cfg.build().unwrap_err().to_string();
        assert!(err.contains("biased model reads 'uc1'"), "{err}");
    }

    #[test]
    fn unbiased_model_reading_the_sensitive_feature_is_refused() {
        let mut cfg = compas_like();
        let race = cfg.features.index_of("race").unwrap();
        cfg.unbiased = Model::rules(vec![vec![Condition::eq(race, "caucasian")]]);
        let err = cfg.build().unwrap_err().to_string();
        assert!(err.contains("unbiased model reads 'race'"), "{err}");
    }

    #[test]
    fn dataset_is_deterministic() {
        let cfg = compas_like();
        let a = generate_dataset(&cfg.dataset, &cfg.features, &cfg.ood_gate).unwrap();
        let b = generate_dataset(&cfg.dataset, &cfg.features, &cfg.ood_gate).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), cfg.dataset.samples);
    }

    #[test]
    fn whole_space_region_is_all_in_distribution() {
        let cfg = compas_like();
        let d = generate_dataset(&cfg.dataset, &cfg.features, &Model::constant_one()).unwrap();
        assert_eq!(d.in_distribution, d.points.len());
        let m = cfg
            .dataset
            .region_measure(&cfg.features, &Model::constant_one())
            .unwrap();
        assert!((m - 1.0).abs() < 1e-12, "{m}");
    }

    #[test]
    fn forced_fraction_is_honoured() {
        let mut cfg = compas_like();
        cfg.dataset.in_distribution_fraction = Some(0.5);
        let d = generate_dataset(&cfg.dataset, &cfg.features, &cfg.ood_gate).unwrap();
        assert!(
            (d.in_distribution_fraction() - 0.5).abs() < 0.06,
            "{}",
            d.in_distribution_fraction()
        );
        cfg.dataset.in_distribution_fraction = Some(0.5);
        let err = generate_dataset(&cfg.dataset, &cfg.features, &Model::constant_one()).unwrap_err();
        assert!(err.to_string().contains("in_distribution_fraction"));
    }

    #[test]
    fn weight_count_mismatch_names_the_field() {
        let mut cfg = compas_like();
        cfg.dataset.weights.as_mut().unwrap().pop();
        let err = generate_dataset(&cfg.dataset, &cfg.features, &cfg.ood_gate).unwrap_err();
        assert!(
            err.to_string().contains("dataset.weights: 8 entries for 9 features"),
            "{err}"
        );
    }

    #[test]
    fn empty_region_never_ranks_the_sensitive_feature_first() {
        let mut cfg = compas_like();
        cfg.ood_gate = Model::constant_zero();
        cfg.dataset.samples = 60;
        let (spec, clf) = cfg.build().unwrap();
        let d = generate_dataset(&cfg.dataset, &cfg.features, &spec.ood_gate).unwrap();
        assert_eq!(d.in_distribution, 0);
        let t = run_experiment(&spec, &clf, &d.points, &IndexKind::ALL, None).unwrap();
        for k in IndexKind::ALL {
            assert_eq!(t.top1("race", k), Some(0.0), "{k:?}");
        }
        assert_eq!(t.flip_sensitive, 0);
        assert_eq!(t.duality_exceptions, 0);
    }

    #[test]
    fn truncation_is_counted_not_ranked() {
        let mut cfg = compas_like();
        cfg.dataset.samples = 20;
        let (spec, clf) = cfg.build().unwrap();
        let d = generate_dataset(&cfg.dataset, &cfg.features, &spec.ood_gate).unwrap();
        let t = run_experiment(&spec, &clf, &d.points, &[IndexKind::HollerPackel], Some(1)).unwrap();
        assert_eq!(t.truncated, 20);
        assert!(t.rows.iter().all(|r| r.counts == [0; 3]));
    }
}
