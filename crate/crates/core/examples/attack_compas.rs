//! Explains the gated attack model on 500 synthetic recidivism-style points
//! and prints how often `race` and the two uncorrelated features rank first,
//! second and third under each index.

use abductive_index::attack::{generate_dataset, run_experiment};
use abductive_index::fixtures::compas_like;
use abductive_index::IndexKind;

fn main() -> abductive_index::Result<()> {
    let cfg = compas_like();
    let (spec, composite) = cfg.build()?;
    let data = generate_dataset(&cfg.dataset, &cfg.features, &spec.ood_gate)?;
    let measure = cfg.dataset.region_measure(&cfg.features, &spec.ood_gate)?;
    println!(
        "{} points, {:.3} in distribution (region measure {measure:.3})",
        data.points.len(),
        data.in_distribution_fraction()
    );
    let table = run_experiment(&spec, &composite, &data.points, &IndexKind::ALL, None)?;
    println!(
        "flip-sensitive on race: {}, duality exceptions: {}, truncated: {}\n",
        table.flip_sensitive, table.duality_exceptions, table.truncated
    );
    print!("{}", table.to_csv());
    Ok(())
}
