//! Trains a MIS sampler on small ER graphs with an annealed inverse
//! temperature and compares best-of-k samples with greedy and the optimum.

use std::ops::ControlFlow;

use gfnco::generate::{gen_dataset, Family, GenSpec};
use gfnco::gfn::{Anneal, LossVariant, TrainConfig, Trainer};
use gfnco::harness::{evaluate, EvalOptions};
use gfnco::{GinConfig, Task};

fn main() -> gfnco::Result<()> {
    let train = gen_dataset(&GenSpec { family: Family::Er { p: 0.3 }, n_min: 12, n_max: 18, count: 64, seed: 0 })?;
    let test = gen_dataset(&GenSpec { family: Family::Er { p: 0.3 }, n_min: 12, n_max: 18, count: 16, seed: 1 })?;
    let cfg = TrainConfig {
        variant: LossVariant::FlTransition,
        beta: 100.0,
        anneal_frac: 0.5,
        anneal: Anneal::Temperature,
        max_updates: Some(2000),
        gin: GinConfig { num_layers: 3, hidden_dim: 32, zero_init_heads: true },
        ..Default::default()
    };
    let mut trainer = Trainer::new(Task::Mis, cfg)?;
    let mut next = 0;
    trainer.train(&train, |t| {
        let row = t.log().last().expect("logged");
        if row.update >= next {
            next += 200;
            println!("update {:>4}  beta {:>7.2}  loss {:>9.4}  mean |I| {:.2}", row.update, row.beta, row.loss, row.mean_objective);
        }
        ControlFlow::Continue(())
    })?;
    let opts = EvalOptions { k: 20, ..Default::default() };
    let report = evaluate(&test, Task::Mis, Some(trainer.model()), &opts)?;
    print!("\n{}", report.render());
    Ok(())
}
