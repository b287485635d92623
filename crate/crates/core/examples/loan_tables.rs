//! The rejected applicant `(22, RealEstate, 0, 50000)` under two rule sets
//! f and g, with columns in the order Purpose, Age, Bank, Credit.
//! Responsibility is raw; Holler-Packel and Deegan-Packel are divided by 2^(n-1).

use abductive_index::indices::normalize;
use abductive_index::{enumerate, fixtures, Classifier, IndexKind, Normalization, Problem};

fn main() -> abductive_index::Result<()> {
    let (space, f, g, x) = fixtures::loan();
    let order = [fixtures::PURPOSE, fixtures::AGE, fixtures::BANK, fixtures::CREDIT];
    for (label, model) in [("f", f), ("g", g)] {
        let clf = Classifier::new(space.clone(), model)?;
        let es = enumerate(&Problem::new(&clf, x.clone())?)?;
        let names: Vec<String> = space.names().into_iter().map(String::from).collect();
        println!("{label}: AXps {}", es.display_with(&names).0.join(" "));
        println!("{:<15} Purpose  Age    Bank   Credit", "index");
        for (kind, norm) in [
            (IndexKind::Responsibility, Normalization::Raw),
            (IndexKind::HollerPackel, Normalization::PowerSet),
            (IndexKind::DeeganPackel, Normalization::PowerSet),
        ] {
            let sv = normalize(&kind.score(&es)?, norm).rounded(3);
            let cells: Vec<String> = order.iter().map(|&i| format!("{:<6}", sv[i])).collect();
            println!("{:<15} {}", kind.display_name(), cells.join(" "));
        }
        println!();
    }
    Ok(())
}
