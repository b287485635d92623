//! No aggregator satisfies Minimal Monotonicity, Symmetry, Null Feature and
//! Efficiency with a constant total of 1. The engine derives the
//! contradiction step by step, then shows the same axioms with the
//! Deegan-Packel total |M| are consistent on every family over three features.

use abductive_index::axioms::{check_consistency, demonstrate_impossibility, universe, EfficiencyTarget};

fn main() -> abductive_index::Result<()> {
    print!("{}", demonstrate_impossibility());
    let families: Vec<_> = universe(3, None)?.collect();
    let c = check_consistency(&families, EfficiencyTarget::CountAxps);
    println!(
        "\nwith |M|-efficiency on {} families: {} ({} of {} scores forced)",
        families.len(),
        if c.is_consistent() {
            "consistent"
        } else {
            "contradiction"
        },
        c.determined,
        c.variables
    );
    Ok(())
}
