//! Runs every loss variant for the same number of updates on one dataset and
//! reports the training curve of each.

use gfnco::generate::{gen_dataset, Family, GenSpec};
use gfnco::gfn::{train, LossVariant, Objective, TrainConfig};
use gfnco::{GinConfig, Task};

fn main() -> gfnco::Result<()> {
    let data = gen_dataset(&GenSpec { family: Family::Ba { m: 2 }, n_min: 10, n_max: 14, count: 32, seed: 3 })?;
    let variants = [
        LossVariant::new(Objective::Fl, true),
        LossVariant::new(Objective::Fl, false),
        LossVariant::new(Objective::Db, true),
        LossVariant::new(Objective::Db, false),
        LossVariant::new(Objective::Tb, false),
    ];
    println!("{:<16} {:>10} {:>10} {:>12}", "variant", "first", "last", "mean |I| end");
    for variant in variants {
        let cfg = TrainConfig {
            variant,
            beta: 20.0,
            max_updates: Some(150),
            record_wall_time: false,
            gin: GinConfig { num_layers: 2, hidden_dim: 16, zero_init_heads: true },
            ..Default::default()
        };
        let out = train(&data, Task::Mis, &cfg)?;
        let first = out.log.first().expect("logged");
        let tail = &out.log[out.log.len().saturating_sub(10)..];
        let last_loss = tail.iter().map(|r| r.loss).sum::<f64>() / tail.len() as f64;
        let last_obj = tail.iter().map(|r| r.mean_objective).sum::<f64>() / tail.len() as f64;
        println!("{:<16} {:>10.4} {:>10.4} {:>12.3}", variant.name(), first.loss, last_loss, last_obj);
    }
    Ok(())
}
