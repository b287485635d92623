//! Plugging a user-defined aggregator into the axiom checks. This one scores
//! a feature by the number of AXps it appears in, divided by the number of
//! AXps. Symmetry and Null Feature survive, but the score now depends on
//! AXps the feature is not in, which breaks monotonicity.

use abductive_index::axioms::{aggregator_fn, matrix, Aggregator};
use abductive_index::indices::rational;
use abductive_index::{ExplanationSet, IndexKind};
use num_rational::BigRational;
use num_traits::Zero;

fn share(es: &ExplanationSet) -> Vec<BigRational> {
    let nonempty = es.axps.iter().filter(|a| !a.is_empty()).count() as i64;
    (0..es.n)
        .map(|i| {
            let k = es.containing(i).count() as i64;
            if nonempty == 0 {
                BigRational::zero()
            } else {
                rational(k, nonempty)
            }
        })
        .collect()
}

fn main() -> abductive_index::Result<()> {
    let custom = aggregator_fn("share_of_axps", share);
    let aggs: Vec<&dyn Aggregator> = vec![&IndexKind::HollerPackel, &custom];
    let m = matrix(&aggs, 3)?;
    print!("{}", m.render());
    for r in m.rows.iter().flat_map(|r| &r.reports).filter(|r| !r.satisfied()) {
        println!("{r}");
    }
    Ok(())
}
