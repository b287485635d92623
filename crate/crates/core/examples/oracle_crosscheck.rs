//! Structural sufficiency against exhaustive search, and MARCO against the
//! lattice enumerator, on the loan models and on a batch of random models.

use abductive_index::random::RandomConfig;
use abductive_index::sufficiency::DEFAULT_ORACLE_CAP;
use abductive_index::verify::{crosscheck, fuzz};
use abductive_index::{fixtures, Classifier};

fn main() -> abductive_index::Result<()> {
    let (space, f, g, x) = fixtures::loan();
    for (label, model) in [("loan f", f), ("loan g", g)] {
        let clf = Classifier::new(space.clone(), model)?;
        let c = crosscheck(&clf, x.clone(), DEFAULT_ORACLE_CAP)?;
        println!(
            "{label}: {} subsets, {} mismatches, enumerations equal: {}, duality: {}",
            c.subsets,
            c.sufficiency_mismatches.len(),
            c.marco == c.lattice,
            c.duality
        );
    }
    let trials = std::env::args().nth(1).map_or(500, |s| s.parse().expect("trial count"));
    let r = fuzz(0, trials, 20, &RandomConfig::default())?;
    println!(
        "{} random models: {} subsets checked, failing seeds {:?}",
        r.trials, r.subsets_checked, r.failing_seeds
    );
    Ok(())
}
