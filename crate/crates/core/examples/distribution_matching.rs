//! Trains on a single small graph at beta = 1 and compares the exact
//! terminal distribution of the sampler with the Boltzmann target.

use gfnco::gfn::{LossVariant, TrainConfig, Trainer};
use gfnco::harness::distcheck;
use gfnco::{GinConfig, Graph, Task};

fn main() -> gfnco::Result<()> {
    let g = Graph::new("bull", 5, &[(0, 1), (1, 2), (2, 0), (1, 3), (2, 4)])?;
    let task = Task::Mis;
    let cfg = TrainConfig {
        variant: LossVariant::FlTransition,
        beta: 1.0,
        anneal_frac: 0.0,
        batch_size: 16,
        graphs_per_round: 8,
        max_updates: Some(1500),
        seed: 1,
        gin: GinConfig { num_layers: 3, hidden_dim: 32, zero_init_heads: true },
        ..Default::default()
    };
    let mut trainer = Trainer::new(task, cfg)?;
    let before = distcheck(&g, task, trainer.model(), 1.0)?;
    trainer.train(std::slice::from_ref(&g), |t| {
        if t.updates() % 500 == 0 {
            let row = t.log().last().expect("logged");
            println!("update {:>5}  loss {:.5}", row.update, row.loss);
        }
        std::ops::ControlFlow::Continue(())
    })?;
    let after = distcheck(&g, task, trainer.model(), 1.0)?;
    println!("TV before training {:.4}, after {:.4}\n", before.tv, after.tv);
    print!("{}", after.render());
    Ok(())
}
