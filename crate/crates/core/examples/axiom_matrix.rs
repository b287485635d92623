//! Pass/fail matrix of every axiom against the three indices and a few
//! deliberately broken aggregators, on all families over four features.

use abductive_index::axioms::{self, controls, Aggregator};
use abductive_index::IndexKind;

fn main() -> abductive_index::Result<()> {
    let n = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("feature count"))
        .unwrap_or(axioms::DEFAULT_UNIVERSE_N);
    let extra = controls::all();
    let mut aggs: Vec<&dyn Aggregator> = IndexKind::ALL.iter().map(|k| k as &dyn Aggregator).collect();
    aggs.extend(extra.iter().map(|b| b.as_ref()));
    let m = axioms::matrix(&aggs, n)?;
    println!("{} families over {n} features\n", m.families);
    print!("{}", m.render());
    println!();
    for row in &m.rows {
        for r in row.reports.iter().filter(|r| !r.satisfied()) {
            println!("{r}");
        }
    }
    Ok(())
}
