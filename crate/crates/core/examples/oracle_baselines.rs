//! Exact optima, optimizer counts and the greedy baseline on a few ER graphs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gfnco::generate::gen_er;
use gfnco::oracle::{brute_force_cap, brute_force_optimum, greedy};
use gfnco::Task;

fn main() -> gfnco::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let graphs: Vec<_> = (0..4).map(|i| gen_er(12 + 2 * i, 0.3, &mut rng)).collect::<gfnco::Result<_>>()?;
    for task in Task::ALL {
        println!("== {task} (exact up to n={})", brute_force_cap(task));
        for g in &graphs {
            let exact = brute_force_optimum(g, task)?;
            let (_, gv) = greedy(g, task)?;
            println!(
                "  n={:<3} m={:<3} optimum {:>4}  optimizers {:>4}  greedy {:>4}",
                g.num_vertices(),
                g.num_edges(),
                exact.optimum,
                exact.optimizer_count,
                gv
            );
        }
    }
    // Max clique on G and max independent set on its complement agree.
    let g = &graphs[0];
    let mc = brute_force_optimum(g, Task::Mc)?;
    let mis = brute_force_optimum(&g.complement(), Task::Mis)?;
    assert_eq!((mc.optimum, mc.optimizer_count), (mis.optimum, mis.optimizer_count));
    println!("clique on G matches independent set on the complement");
    Ok(())
}
