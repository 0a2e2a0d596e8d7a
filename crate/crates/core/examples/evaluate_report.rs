//! Evaluates a briefly trained model against greedy and the exact oracle,
//! saves the checkpoint and the per-instance CSV, and recomputes the summary
//! from the CSV alone.

use gfnco::checkpoint::Checkpoint;
use gfnco::generate::{gen_dataset, Family, GenSpec};
use gfnco::gfn::{train, TrainConfig};
use gfnco::harness::{evaluate, EvalOptions, EvalReport};
use gfnco::{GinConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let task = Task::Mds;
    let data = gen_dataset(&GenSpec { family: Family::Er { p: 0.25 }, n_min: 10, n_max: 16, count: 12, seed: 9 })?;
    let cfg = TrainConfig {
        beta: 10.0,
        max_updates: Some(200),
        gin: GinConfig { num_layers: 2, hidden_dim: 16, zero_init_heads: true },
        ..Default::default()
    };
    let out = train(&data, task, &cfg)?;

    let dir = std::env::temp_dir().join("gfnco-evaluate-report");
    std::fs::create_dir_all(&dir)?;
    let ck = Checkpoint::from_model(&out.model, Some(task), Some(cfg.beta), Some(&out.optimizer));
    ck.save(dir.join("mds.json"))?;
    let model = Checkpoint::load(dir.join("mds.json"))?.model()?;

    let report = evaluate(&data, task, Some(&model), &EvalOptions { k: 8, ..Default::default() })?;
    print!("{}", report.render());
    report.write_csv(dir.join("eval.csv"))?;

    let rows = EvalReport::rows_from_csv(&std::fs::read_to_string(dir.join("eval.csv"))?)?;
    let again = EvalReport { rows, ..report.clone() };
    for (a, b) in report.summaries.iter().zip(again.resummarize()) {
        assert_eq!(a.method, b.method);
        assert!((a.mean_objective - b.mean_objective).abs() < 1e-9);
    }
    println!("summary recomputed from {}", dir.join("eval.csv").display());
    Ok(())
}
