//! The accepted applicant: enumerate every abductive explanation of
//! `(Age > 20 ∧ Purpose = Education) ∨ Credit > 700 ∨ Bank > 50000` at
//! `(30, Education, 750, 60000)` and score the features with each index.

use abductive_index::{enumerate, fixtures, Classifier, IndexKind, Problem};

fn main() -> abductive_index::Result<()> {
    let (space, model, x) = fixtures::example1();
    let clf = Classifier::new(space, model)?;
    let names: Vec<String> = clf.space().names().into_iter().map(String::from).collect();
    let problem = Problem::new(&clf, x)?;
    let es = enumerate(&problem)?;
    let (axps, cxps) = es.display_with(&names);
    println!("prediction: {}", u8::from(problem.prediction()));
    println!("AXps: {}", axps.join(" "));
    println!("CXps: {}", cxps.join(" "));
    for kind in IndexKind::ALL {
        let sv = kind.score(&es)?;
        let cells: Vec<String> = names
            .iter()
            .zip(&sv.scores)
            .zip(&sv.rank().rank)
            .map(|((n, s), r)| format!("{n}={s} (#{r})"))
            .collect();
        println!("{:<15} {}", kind.display_name(), cells.join("  "));
    }
    Ok(())
}
