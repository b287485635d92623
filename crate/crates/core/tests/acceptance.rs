//! One line per acceptance criterion. Thresholds and tolerances are the
//! constants below; nothing is loosened at run time.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use abductive_index::attack::{generate_dataset, run_experiment, AttackConfig};
use abductive_index::axioms::{
    aggregator_fn, check_consistency, check_contraction_family, check_efficiency, check_monotonicity,
    check_null_feature, check_symmetry_family, check_unit_efficiency, controls, demonstrate_impossibility, matrix,
    universe, Aggregator, AxiomReport, EfficiencyTarget, NegMinSize, SubsetOrder,
};
use abductive_index::fixtures;
use abductive_index::indices::{normalize, rational};
use abductive_index::random::{random_problem, random_subset, rng, RandomConfig};
use abductive_index::{
    check_duality, enumerate, enumerate_bruteforce, Classifier, ExplanationSet, FeatureSubset, IndexKind,
    Normalization, Problem,
};
use num_rational::BigRational;

const EXAMPLE_MAX: Duration = Duration::from_secs(1);
const TABLE_MAX: Duration = Duration::from_secs(1);
const TABLE_DECIMALS: u32 = 3;
const ORACLE_MODELS: u64 = 500;
const ORACLE_TRIPLES: usize = 10_000;
const ORACLE_MAX_FEATURES: usize = 10;
const ORACLE_MAX_DOMAIN: usize = 3;
const ORACLE_MAX: Duration = Duration::from_secs(300);
const MATRIX_N: usize = 4;
const MATRIX_MAX: Duration = Duration::from_secs(120);
const UNIQUENESS_MAX_N: usize = 3;
const UNIQUENESS_MIN_PERTURBED: usize = 3;
const ATTACK_MIN_IN_DISTRIBUTION: f64 = 0.9;
const ATTACK_MIN_TOP1: f64 = 0.8;
const ATTACK_MIN_SAMPLES: usize = 500;
const ATTACK_MAX: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn axp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_axp"))
        .args(args)
        .env_remove("AXP_ORACLE_CAP")
        .output()
        .expect("axp runs")
}

fn s(ix: &[usize]) -> FeatureSubset {
    FeatureSubset::from_indices(ix.iter().copied())
}

fn c1_accepted_applicant() -> Outcome {
    let (m, i) = (fixture("example1.model.json"), fixture("example1.instance.json"));
    let t = Instant::now();
    let o = axp(&[
        "explain",
        "--model",
        m.to_str().unwrap(),
        "--instance",
        i.to_str().unwrap(),
    ]);
    let took = t.elapsed();
    let v: serde_json::Value = match serde_json::from_slice(&o.stdout) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("unparsable output: {e}")),
    };
    let want = serde_json::json!([["Age", "Purpose"], ["Credit"], ["Bank"]]);
    outcome(
        o.status.success() && v["axps"] == want && took < EXAMPLE_MAX,
        format!("AXps {} in {took:.2?}", v["axps"]),
    )
}

fn c2_tables() -> Outcome {
    let t = Instant::now();
    let (space, f, g, x) = fixtures::loan();
    let order = [fixtures::PURPOSE, fixtures::AGE, fixtures::BANK, fixtures::CREDIT];
    let r = rational;
    let expected_exact = [
        [
            [r(1, 3), r(1, 2), r(1, 2), r(1, 2)],
            [r(1, 8), r(1, 4), r(1, 4), r(1, 4)],
            [r(1, 24), r(1, 8), r(5, 48), r(5, 48)],
        ],
        [
            [r(0, 1), r(1, 2), r(1, 2), r(1, 2)],
            [r(0, 1), r(1, 4), r(1, 8), r(1, 8)],
            [r(0, 1), r(1, 8), r(1, 16), r(1, 16)],
        ],
    ];
    let printed = [
        [
            [0.333, 0.5, 0.5, 0.5],
            [0.125, 0.25, 0.25, 0.25],
            [0.042, 0.125, 0.104, 0.104],
        ],
        [
            [0.0, 0.5, 0.5, 0.5],
            [0.0, 0.25, 0.125, 0.125],
            [0.0, 0.125, 0.062, 0.062],
        ],
    ];
    let rows = [
        (IndexKind::Responsibility, Normalization::Raw),
        (IndexKind::HollerPackel, Normalization::PowerSet),
        (IndexKind::DeeganPackel, Normalization::PowerSet),
    ];
    let mut bad = Vec::new();
    for (t_ix, model) in [f, g].into_iter().enumerate() {
        let clf = Classifier::new(space.clone(), model).unwrap();
        let es = enumerate(&Problem::new(&clf, x.clone()).unwrap()).unwrap();
        for (row, &(kind, norm)) in rows.iter().enumerate() {
            let sv = normalize(&kind.score(&es).unwrap(), norm);
            let exact: Vec<BigRational> = order.iter().map(|&i| sv.scores[i].clone()).collect();
            let rounded = sv.rounded(TABLE_DECIMALS);
            let shown: Vec<f64> = order.iter().map(|&i| rounded[i]).collect();
            if exact != expected_exact[t_ix][row] || shown != printed[t_ix][row] {
                bad.push(format!("table {} {kind:?}: {shown:?}", ["f", "g"][t_ix]));
            }
        }
    }
    let took = t.elapsed();
    outcome(
        bad.is_empty() && took < TABLE_MAX,
        if bad.is_empty() {
            format!("both tables exact and at {TABLE_DECIMALS} decimals in {took:.2?}")
        } else {
            bad.join("; ")
        },
    )
}

struct OracleRun {
    models: u64,
    mismatched_models: Vec<u64>,
    triples: usize,
    mismatched_triples: usize,
    complete: Vec<ExplanationSet>,
    took: Duration,
}

fn oracle_run() -> OracleRun {
    let cfg = RandomConfig {
        max_features: ORACLE_MAX_FEATURES,
        max_domain: ORACLE_MAX_DOMAIN,
        ..Default::default()
    };
    let per_model = ORACLE_TRIPLES.div_ceil(ORACLE_MODELS as usize);
    let t = Instant::now();
    let mut run = OracleRun {
        models: 0,
        mismatched_models: Vec::new(),
        triples: 0,
        mismatched_triples: 0,
        complete: Vec::new(),
        took: Duration::ZERO,
    };
    let mut r = rng(0xacce);
    for seed in 0..ORACLE_MODELS {
        let (clf, x) = random_problem(seed, &cfg);
        let p = Problem::new(&clf, x).unwrap();
        let marco = enumerate(&p).unwrap();
        let lattice = enumerate_bruteforce(&p).unwrap();
        if marco != lattice {
            run.mismatched_models.push(seed);
        }
        for _ in 0..per_model {
            let sub = random_subset(&mut r, clf.n());
            run.triples += 1;
            if p.is_sufficient(sub).unwrap() != p.is_sufficient_bruteforce(sub).unwrap() {
                run.mismatched_triples += 1;
            }
        }
        run.models += 1;
        if marco.complete {
            run.complete.push(marco);
        }
    }
    run.took = t.elapsed();
    run
}

fn c3_oracles(run: &OracleRun) -> Outcome {
    outcome(
        run.models >= ORACLE_MODELS
            && run.triples >= ORACLE_TRIPLES
            && run.mismatched_models.is_empty()
            && run.mismatched_triples == 0
            && run.took < ORACLE_MAX,
        format!(
            "{} models, {} enumeration mismatches; {} triples, {} sufficiency mismatches; {:.1?}",
            run.models,
            run.mismatched_models.len(),
            run.triples,
            run.mismatched_triples,
            run.took
        ),
    )
}

fn c4_duality(run: &OracleRun) -> Outcome {
    let failures = run.complete.iter().filter(|es| !check_duality(es).unwrap()).count();
    outcome(
        failures == 0 && !run.complete.is_empty(),
        format!(
            "{} complete enumerations, {failures} duality failures",
            run.complete.len()
        ),
    )
}

fn c5_efficiency(run: &OracleRun) -> Outcome {
    let mut failures = 0;
    for es in &run.complete {
        let hp: BigRational = IndexKind::HollerPackel.score(es).unwrap().scores.iter().sum();
        let dp: BigRational = IndexKind::DeeganPackel.score(es).unwrap().scores.iter().sum();
        let sizes: i64 = es.axps.iter().map(|a| a.len() as i64).sum();
        // A constant model's only AXp is ∅, which contributes to neither side.
        let count = es.axps.iter().filter(|a| !a.is_empty()).count() as i64;
        if hp != rational(sizes, 1) || dp != rational(count, 1) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{} enumerations, {failures} exact-arithmetic failures",
            run.complete.len()
        ),
    )
}

fn c6_matrix() -> Outcome {
    let t = Instant::now();
    let ctl = controls::all();
    let mut aggs: Vec<&dyn Aggregator> = IndexKind::ALL.iter().map(|k| k as &dyn Aggregator).collect();
    aggs.extend(ctl.iter().map(|b| b.as_ref()));
    let smaller: Vec<_> = (1..MATRIX_N).map(|n| matrix(&aggs, n).unwrap()).collect();
    let m = matrix(&aggs, MATRIX_N).unwrap();
    let mut bad = Vec::new();
    let characterizations: [(&str, &[&str]); 3] = [
        (
            "hp",
            &[
                "monotonicity[subset_order]",
                "symmetry",
                "null_feature",
                "efficiency[sum_memberships]",
            ],
        ),
        (
            "dp",
            &[
                "monotonicity[subset_order]",
                "symmetry",
                "null_feature",
                "efficiency[count_axps]",
            ],
        ),
        (
            "resp",
            &[
                "monotonicity[neg_min_size]",
                "unit_efficiency",
                "contraction",
                "symmetry",
                "null_feature",
            ],
        ),
    ];
    for (agg, axioms) in characterizations {
        for ax in axioms {
            for mm in smaller.iter().chain([&m]) {
                if !mm.get(agg, ax).is_some_and(AxiomReport::satisfied) {
                    bad.push(format!("{agg} fails {ax} at n={}", mm.universe_n));
                }
            }
        }
    }
    let targets = [
        ("constant_one", "null_feature"),
        ("position_biased", "symmetry"),
        ("half_hp", "efficiency[sum_memberships]"),
        ("dp_squared_weights", "efficiency[count_axps]"),
        ("hp_squared", "efficiency[sum_memberships]"),
        ("resp_squared", "contraction"),
    ];
    for (name, ax) in targets {
        let agg = ctl.iter().find(|a| a.name() == name).unwrap();
        match m.get(name, ax) {
            Some(r) if !r.satisfied() && r.counterexample.is_some() && r.replays(agg.as_ref()) => {}
            _ => bad.push(format!(
                "control {name} not caught by {ax} with a replayable counterexample"
            )),
        }
    }
    let took = t.elapsed();
    outcome(
        bad.is_empty() && took < MATRIX_MAX,
        if bad.is_empty() {
            format!(
                "{} families at n={MATRIX_N} (plus n<{MATRIX_N}); characterizing columns pass; {} controls fail their target; resp under subset order: {}; {took:.1?}",
                m.families,
                targets.len(),
                m.get("resp", "monotonicity[subset_order]").map_or("missing", |r| if r.satisfied() { "satisfied" } else { "violated" })
            )
        } else {
            bad.join("; ")
        },
    )
}

fn c7_impossibility() -> Outcome {
    let t = demonstrate_impossibility();
    let last = t.last().unwrap_or_default().to_string();
    let families = [
        ExplanationSet::from_axps(4, vec![s(&[0, 1])]),
        ExplanationSet::from_axps(4, vec![s(&[0, 1]), s(&[2, 3])]),
    ];
    let c = check_consistency(&families, EfficiencyTarget::One);
    let half = rational(1, 2);
    let forced = (0..4).all(|i| c.forced(1, i) == Some(&half));
    outcome(
        last.ends_with("forced sum = 2, required = 1, contradiction") && forced && !c.is_consistent(),
        format!("\"{last}\"; forced 1/2 on all four features: {forced}"),
    )
}

type Characterization = (
    &'static str,
    IndexKind,
    fn(&dyn Aggregator, &[ExplanationSet]) -> Vec<AxiomReport>,
);

fn characterization_checks() -> [Characterization; 3] {
    [
        ("holler-packel", IndexKind::HollerPackel, |a, f| {
            vec![
                check_monotonicity(a, &SubsetOrder, f),
                check_symmetry_family(a, f),
                check_null_feature(a, f),
                check_efficiency(a, EfficiencyTarget::SumMemberships, f),
            ]
        }),
        ("deegan-packel", IndexKind::DeeganPackel, |a, f| {
            vec![
                check_monotonicity(a, &SubsetOrder, f),
                check_symmetry_family(a, f),
                check_null_feature(a, f),
                check_efficiency(a, EfficiencyTarget::CountAxps, f),
            ]
        }),
        ("responsibility", IndexKind::Responsibility, |a, f| {
            vec![
                check_monotonicity(a, &NegMinSize, f),
                check_unit_efficiency(a, f),
                check_contraction_family(a, f),
                check_symmetry_family(a, f),
                check_null_feature(a, f),
            ]
        }),
    ]
}

fn c8_uniqueness() -> Outcome {
    let universes: Vec<Vec<ExplanationSet>> = (1..=UNIQUENESS_MAX_N)
        .map(|n| universe(n, None).unwrap().collect())
        .collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, kind, checks) in characterization_checks() {
        // Perturbations that only act beyond the checked universe must pass
        // every axiom and agree pointwise; the controls must fail an axiom.
        let beyond = aggregator_fn(format!("{}_beyond_{UNIQUENESS_MAX_N}", kind.short_name()), move |es| {
            let mut v = kind.raw_scores(es);
            if es.n > UNIQUENESS_MAX_N {
                v[0] += rational(1, 1);
            }
            v
        });
        let mut perturbed = controls::all();
        perturbed.push(Box::new(beyond));
        let (mut by_axiom, mut by_agreement) = (0, 0);
        for agg in &perturbed {
            let passes = universes
                .iter()
                .all(|fams| checks(agg.as_ref(), fams).iter().all(AxiomReport::satisfied));
            if !passes {
                by_axiom += 1;
                continue;
            }
            let agrees = universes
                .iter()
                .flatten()
                .all(|es| agg.scores(es) == kind.raw_scores(es));
            if agrees {
                by_agreement += 1;
            } else {
                ok = false;
                lines.push(format!("{} passes the {label} axioms but differs from it", agg.name()));
            }
        }
        let builtin_passes = universes
            .iter()
            .all(|fams| checks(&kind, fams).iter().all(AxiomReport::satisfied));
        ok &= builtin_passes && by_axiom + by_agreement >= UNIQUENESS_MIN_PERTURBED;
        lines.push(format!(
            "{label}: {by_axiom} caught by an axiom, {by_agreement} agree pointwise"
        ));
    }
    outcome(ok, lines.join("; "))
}

fn c9_attack() -> Outcome {
    let t = Instant::now();
    let cfg = AttackConfig::load(&fixture("compas-like.json")).unwrap();
    let (spec, composite) = cfg.build().unwrap();
    let data = generate_dataset(&cfg.dataset, &cfg.features, &spec.ood_gate).unwrap();
    let table = run_experiment(&spec, &composite, &data.points, &IndexKind::ALL, None).unwrap();
    let took = t.elapsed();
    let frac = data.in_distribution_fraction();
    let top1: Vec<f64> = IndexKind::ALL
        .iter()
        .map(|&k| table.top1(&cfg.sensitive, k).unwrap())
        .collect();
    // Every in-distribution point must be flip-sensitive on the sensitive feature.
    let flip_ok = table.flip_sensitive >= table.in_distribution;
    outcome(
        data.points.len() >= ATTACK_MIN_SAMPLES
            && frac >= ATTACK_MIN_IN_DISTRIBUTION
            && flip_ok
            && top1.iter().all(|&f| f >= ATTACK_MIN_TOP1)
            && table.duality_exceptions == 0
            && table.truncated == 0
            && took < ATTACK_MAX,
        format!(
            "{} points, {frac:.3} in distribution, top-1 of {} (hp, dp, resp) = {top1:?}, {} duality exceptions, {took:.1?}",
            data.points.len(),
            cfg.sensitive,
            table.duality_exceptions
        ),
    )
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (m, i, c) = (
        fixture("loan_f.model.json"),
        fixture("loan.instance.json"),
        fixture("compas-like.json"),
    );
    let runs: Vec<Vec<String>> = vec![
        vec![
            "explain".into(),
            "--model".into(),
            m.to_str().unwrap().into(),
            "--instance".into(),
            i.to_str().unwrap().into(),
            "--out".into(),
            d("explain.json"),
        ],
        vec![
            "explain".into(),
            "--model".into(),
            m.to_str().unwrap().into(),
            "--instance".into(),
            i.to_str().unwrap().into(),
            "--format".into(),
            "csv".into(),
            "--out".into(),
            d("explain.csv"),
        ],
        vec![
            "attack".into(),
            "--config".into(),
            c.to_str().unwrap().into(),
            "--format".into(),
            "json".into(),
            "--out".into(),
            d("attack.json"),
        ],
        vec![
            "attack".into(),
            "--config".into(),
            c.to_str().unwrap().into(),
            "--out".into(),
            d("attack.csv"),
        ],
        vec![
            "axioms".into(),
            "--universe-n".into(),
            "3".into(),
            "--format".into(),
            "json".into(),
            "--out".into(),
            d("axioms.json"),
        ],
    ];
    let mut bad = Vec::new();
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = PathBuf::from(args.last().unwrap());
        let manifest = format!("{}.manifest.json", out.display());
        if !axp(&args).status.success() {
            bad.push(format!("{} failed", args[0]));
            continue;
        }
        let first = std::fs::read(&out).unwrap();
        let mut same = true;
        for _ in 0..2 {
            let o = axp(&["replay", &manifest]);
            same &= o.status.success() && std::fs::read(&out).unwrap() == first;
        }
        if !same {
            bad.push(format!("{} differs on replay", out.display()));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{} outputs byte-identical across two replays of their manifests",
                runs.len()
            )
        } else {
            bad.join("; ")
        },
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n: u32, name: &'static str, o: Outcome| {
        println!(
            "criterion {n:>2} {:<4} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };
    record(1, "accepted applicant AXps via explain", c1_accepted_applicant());
    record(2, "loan tables exact and printed", c2_tables());
    let run = oracle_run();
    record(3, "oracle equivalence", c3_oracles(&run));
    record(4, "duality", c4_duality(&run));
    record(5, "efficiency identities", c5_efficiency(&run));
    record(6, "axiom matrix", c6_matrix());
    record(7, "impossibility", c7_impossibility());
    record(8, "uniqueness spot-check", c8_uniqueness());
    record(9, "robustness experiment", c9_attack());
    record(10, "determinism", c10_determinism());
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
