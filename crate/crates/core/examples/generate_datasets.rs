//! Generates small BA, ER and RB datasets and prints a few statistics.
//! Datasets are fully determined by their spec, seed included.

use gfnco::generate::{gen_dataset, Family, GenSpec};
use gfnco::harness::{parse_dataset, to_jsonl};

fn main() -> gfnco::Result<()> {
    let families = [
        Family::Ba { m: 2 },
        Family::Er { p: 0.15 },
        Family::Rb { groups: (4, 6), group_size: (3, 5), rounds: 20 },
    ];
    for family in families {
        let spec = GenSpec { family, n_min: 20, n_max: 40, count: 5, seed: 11 };
        let graphs = gen_dataset(&spec)?;
        for g in &graphs {
            println!("{:>4} {:<12} n={:<3} m={}", family.name(), g.id(), g.num_vertices(), g.num_edges());
        }
        let text = to_jsonl(&graphs)?;
        assert_eq!(parse_dataset(&text)?, graphs);
        assert_eq!(gen_dataset(&spec)?, graphs);
    }
    println!("datasets round-trip through JSON lines and regenerate identically");
    Ok(())
}
