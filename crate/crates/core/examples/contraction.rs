//! Merging Age and Purpose of the accepted-applicant model into one feature
//! whose domain is their product. The merged feature's Responsibility never
//! drops below the larger part, and here it becomes a singleton explanation.

use abductive_index::axioms::check_contraction;
use abductive_index::{contract, enumerate, fixtures, Classifier, FeatureSubset, IndexKind, Problem};

fn main() -> abductive_index::Result<()> {
    let (space, model, x) = fixtures::example1();
    let clf = Classifier::new(space, model)?;
    let t = FeatureSubset::from_indices([fixtures::AGE, fixtures::PURPOSE]);
    let c = contract(clf.model(), clf.space(), &x, t)?;
    let merged = Classifier::new(c.space.clone(), c.model.clone())?;
    println!(
        "contracted features: {:?} (domain of [T] has {} values)",
        merged.space().names(),
        merged.space().feature(c.merged).cardinality()
    );
    let names = |clf: &Classifier| -> Vec<String> { clf.space().names().into_iter().map(String::from).collect() };
    let before = enumerate(&Problem::new(&clf, x.clone())?)?;
    let after = enumerate(&Problem::new(&merged, c.instance.clone())?)?;
    println!("AXps before: {}", before.display_with(&names(&clf)).0.join(" "));
    println!("AXps after:  {}", after.display_with(&names(&merged)).0.join(" "));
    for kind in IndexKind::ALL {
        let report = check_contraction(&kind, &clf, &x, t)?;
        println!("{report}");
    }
    Ok(())
}
