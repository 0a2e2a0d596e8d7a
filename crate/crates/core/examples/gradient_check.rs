//! Compares tape gradients of the FL, DB and TB losses against central
//! differences on one sampled trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gfnco::gfn::{loss_and_grads, records_from_trajectory, rollout, Objective};
use gfnco::{GinConfig, Graph, PolicyModel, Task};

fn main() -> gfnco::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Random heads; zero heads would leave many gradients trivially zero.
    let cfg = GinConfig { num_layers: 2, hidden_dim: 8, zero_init_heads: false };
    let mut model = PolicyModel::new(cfg, &mut rng)?;
    let g = Graph::new("c5", 5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])?;
    let task = Task::Mis;
    let beta = 1.5;
    let traj = rollout(&g, task, &model, 0.2, &mut rng)?;
    let recs = records_from_trajectory(&g, task, &traj)?;
    let h = 1e-5;
    for objective in [Objective::Fl, Objective::Db, Objective::Tb] {
        let groups = [recs.as_slice()];
        let (loss, grads) = loss_and_grads(&model, &g, task, beta, objective, &groups)?;
        let mut worst: f64 = 0.0;
        let mut largest: f64 = 0.0;
        for p in 0..model.params().len() {
            for i in 0..model.params()[p].values.len() {
                let orig = model.params()[p].values[i];
                model.params_mut()[p].values[i] = orig + h;
                let up = loss_and_grads(&model, &g, task, beta, objective, &groups)?.0;
                model.params_mut()[p].values[i] = orig - h;
                let down = loss_and_grads(&model, &g, task, beta, objective, &groups)?.0;
                model.params_mut()[p].values[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                worst = worst.max((grads[p][i] - numeric).abs());
                largest = largest.max(grads[p][i].abs());
            }
        }
        println!("{objective:?}: loss {loss:.6}  largest |grad| {largest:.3e}  max |analytic - numeric| {worst:.3e}");
    }
    println!("{} parameters per check", model.num_scalars());
    Ok(())
}
