//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary so the report is always printed.

use std::ops::ControlFlow;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gfnco::checkpoint::Checkpoint;
use gfnco::generate::{gen_ba, gen_dataset, gen_er, Family, GenSpec};
use gfnco::gfn::{
    fl_loss, loss_and_grads, records_from_trajectory, rollout, rollout_many, sample_best_of_k, Anneal, LossVariant,
    Objective, TrainConfig, Trainer, TransitionRecord,
};
use gfnco::gin::masked_log_softmax;
use gfnco::harness::{to_jsonl, write_log};
use gfnco::oracle::{brute_force_optimum, exact_terminal_distribution, greedy, reachable_terminals, target_distribution, tv_distance};
use gfnco::{GinConfig, Graph, Label, PolicyModel, State, Task};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_graph(rng: &mut ChaCha8Rng, n_lo: usize, n_hi: usize) -> Graph {
    let n = rng.random_range(n_lo..=n_hi);
    if rng.random_bool(0.5) {
        let p = rng.random_range(0.05..0.6);
        gen_er(n, p, rng).unwrap()
    } else {
        let m = rng.random_range(1..=3.min(n - 1));
        gen_ba(n, m, rng).unwrap()
    }
}

/// Every state of one trajectory under the uniform policy over legal actions.
fn uniform_states(g: &Graph, task: Task, rng: &mut ChaCha8Rng) -> Vec<State> {
    let mut s = task.initial_state(g);
    let mut out = vec![s.clone()];
    while !task.is_terminal(&s) {
        let legal: Vec<usize> = task.action_mask(g, &s).iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v).collect();
        s = task.step(g, &s, *legal.choose(rng).unwrap()).unwrap().next_state;
        out.push(s.clone());
    }
    out
}

fn mis_maximal(g: &Graph, s: &State) -> bool {
    (0..g.num_vertices()).all(|v| s.label(v) == Label::One || g.neighbors(v).iter().any(|&u| s.label(u) == Label::One))
}

fn cut_locally_maximal(g: &Graph, s: &State) -> bool {
    s.vertices_with(Label::Zero).into_iter().all(|v| {
        let ones = g.neighbors(v).iter().filter(|&&u| s.label(u) == Label::One).count();
        g.neighbors(v).len() <= 2 * ones
    })
}

fn c1_feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut violations = Vec::new();
    let mut states = 0usize;
    for task in Task::ALL {
        for _ in 0..1000 {
            let g = random_graph(&mut rng, 2, 50);
            let traj = uniform_states(&g, task, &mut rng);
            states += traj.len();
            if traj.len() - 1 > g.num_vertices() {
                violations.push(format!("{task}: trajectory longer than |V|"));
            }
            for w in traj.windows(2) {
                if w[1].count(Label::Void) >= w[0].count(Label::Void) {
                    violations.push(format!("{task}: void count did not decrease"));
                }
            }
            for s in &traj {
                if let Err(e) = task.check_feasible(&g, s) {
                    violations.push(format!("{task} {}: {e}", g.id()));
                }
            }
            let x = traj.last().unwrap();
            let extra = match task {
                Task::Mis => !mis_maximal(&g, x),
                Task::Mcut => !cut_locally_maximal(&g, x),
                _ => false,
            };
            if extra {
                violations.push(format!("{task}: terminal {x} not maximal"));
            }
        }
    }
    let detail = format!("4000 rollouts, {states} states, {} violations", violations.len());
    outcome(violations.is_empty(), match violations.first() {
        Some(v) => format!("{detail}; first: {v}"),
        None => detail,
    })
}

fn c2_gradients() -> Outcome {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for trial in 0..20 {
        let cfg = GinConfig { num_layers: 2, hidden_dim: 8, zero_init_heads: false };
        let mut model = PolicyModel::new(cfg, &mut rng).unwrap();
        let task = Task::ALL[trial % 4];
        let mut g = random_graph(&mut rng, 4, 8);
        while task.is_terminal(&task.initial_state(&g)) {
            g = random_graph(&mut rng, 4, 8);
        }
        let beta = rng.random_range(0.5..3.0);
        let traj = rollout(&g, task, &model, 0.3, &mut rng).unwrap();
        let recs = records_from_trajectory(&g, task, &traj).unwrap();
        for objective in [Objective::Fl, Objective::Db, Objective::Tb] {
            let groups = [recs.as_slice()];
            let (_, grads) = loss_and_grads(&model, &g, task, beta, objective, &groups).unwrap();
            for p in 0..model.params().len() {
                for i in 0..model.params()[p].values.len() {
                    let orig = model.params()[p].values[i];
                    model.params_mut()[p].values[i] = orig + H;
                    let up = loss_and_grads(&model, &g, task, beta, objective, &groups).unwrap().0;
                    model.params_mut()[p].values[i] = orig - H;
                    let down = loss_and_grads(&model, &g, task, beta, objective, &groups).unwrap().0;
                    model.params_mut()[p].values[i] = orig;
                    let numeric = (up - down) / (2.0 * H);
                    let analytic = grads[p][i];
                    // Rounding in the loss puts about eps*|L|/h of noise on the
                    // numeric derivative; smaller gradients cannot be resolved
                    // to TOL, so the denominator is floored there.
                    let floor = 10.0 * f64::EPSILON * up.abs().max(down.abs()) / (H * TOL);
                    let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
                    worst = worst.max(err);
                    checked += 1;
                }
            }
        }
    }
    outcome(worst <= TOL, format!("{checked} partial derivatives, worst relative error {worst:.2e} (tol {TOL:.0e})"))
}

fn bull() -> Graph {
    Graph::new("bull", 5, &[(0, 1), (1, 2), (2, 0), (1, 3), (2, 4)]).unwrap()
}

/// Instance per task for the single-graph experiments. MaxCut uses K4: the
/// uniform backward policy only matches the true parent count on symmetric
/// MaxCut instances (see the README).
fn single_graph_instances() -> Vec<(Task, Graph)> {
    vec![(Task::Mis, bull()), (Task::Mc, bull()), (Task::Mds, bull()), (Task::Mcut, Graph::complete("k4", 4))]
}

fn train_single(g: &Graph, task: Task, beta: f64, updates: usize) -> PolicyModel {
    let cfg = TrainConfig {
        variant: LossVariant::FlTransition,
        beta,
        anneal_frac: 0.0,
        batch_size: 16,
        graphs_per_round: 8,
        lr: 1e-3,
        max_updates: Some(updates),
        seed: 1,
        gin: GinConfig { num_layers: 3, hidden_dim: 32, zero_init_heads: true },
        record_wall_time: false,
        ..Default::default()
    };
    let mut t = Trainer::new(task, cfg).unwrap();
    t.train(std::slice::from_ref(g), |_| ControlFlow::Continue(())).unwrap();
    t.into_outcome().model
}

fn c3_distribution_matching() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (task, g) in single_graph_instances() {
        let model = train_single(&g, task, 1.0, 4000);
        let p = exact_terminal_distribution(&g, task, &model).unwrap();
        let q = target_distribution(&g, task, 1.0).unwrap();
        let tv = tv_distance(&p, &q);
        pass &= tv <= 0.05;
        parts.push(format!("{task}/{} tv={tv:.4}", g.id()));
    }
    outcome(pass, format!("{} (tol 0.05)", parts.join(", ")))
}

fn c4_low_temperature() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for (task, g) in single_graph_instances() {
        let model = train_single(&g, task, 20.0, 4000);
        let best = brute_force_optimum(&g, task).unwrap().optimum;
        let mut hits = 0;
        for _ in 0..100 {
            let copies = vec![&g; 100];
            for t in rollout_many(&copies, task, &model, 0.0, &mut rng).unwrap() {
                hits += usize::from(task.objective(&g, &t.terminal) == best);
            }
        }
        let frac = hits as f64 / 10000.0;
        pass &= frac >= 0.99;
        parts.push(format!("{task}/{} {:.2}%", g.id(), 100.0 * frac));
    }
    outcome(pass, format!("optimal samples of 10000: {} (need >= 99%)", parts.join(", ")))
}

fn er_spec(count: usize, seed: u64) -> GenSpec {
    GenSpec { family: Family::Er { p: 0.3 }, n_min: 20, n_max: 30, count, seed }
}

fn mis_config(variant: LossVariant, updates: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        variant,
        beta: 500.0,
        anneal_frac: 0.5,
        anneal: Anneal::Temperature,
        batch_size: 64,
        graphs_per_round: 16,
        lr: 1e-3,
        max_updates: Some(updates),
        seed,
        gin: GinConfig { num_layers: 3, hidden_dim: 32, zero_init_heads: true },
        record_wall_time: false,
        ..Default::default()
    }
}

fn c5_solving_quality() -> Outcome {
    let train = gen_dataset(&er_spec(200, 0)).unwrap();
    let test = gen_dataset(&er_spec(50, 1 << 32)).unwrap();
    let mut trainer = Trainer::new(Task::Mis, mis_config(LossVariant::FlTransition, 6000, 0)).unwrap();
    trainer.train(&train, |_| ControlFlow::Continue(())).unwrap();
    let model = trainer.model();
    let mut gfn = 0.0;
    let mut base = 0.0;
    let mut opt = 0.0;
    for (i, g) in test.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        gfn += sample_best_of_k(g, Task::Mis, model, 20, &mut rng).unwrap().1;
        base += greedy(g, Task::Mis).unwrap().1;
        opt += brute_force_optimum(g, Task::Mis).unwrap().optimum;
    }
    let n = test.len() as f64;
    let drop = 1.0 - gfn / opt;
    outcome(
        gfn >= base && drop <= 0.05,
        format!(
            "best-of-20 mean {:.3}, greedy mean {:.3}, optimum mean {:.3}, drop {:.2}% (need >= greedy, drop <= 5%)",
            gfn / n,
            base / n,
            opt / n,
            100.0 * drop
        ),
    )
}

/// Updates until the mean single-sample MIS size on `val` first reaches
/// `threshold`, checked every `every` updates; `None` within the budget.
fn updates_to_threshold(
    train: &[Graph],
    val: &[Graph],
    variant: LossVariant,
    seed: u64,
    budget: usize,
    every: usize,
    threshold: f64,
) -> Option<usize> {
    let mut trainer = Trainer::new(Task::Mis, mis_config(variant, budget, seed)).unwrap();
    let mut next = every;
    let mut reached = None;
    trainer
        .train(train, |t| {
            if t.updates() < next {
                return ControlFlow::Continue(());
            }
            next = t.updates() + every;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mean = val.iter().map(|g| sample_best_of_k(g, Task::Mis, t.model(), 1, &mut rng).unwrap().1).sum::<f64>()
                / val.len() as f64;
            if mean >= threshold {
                reached = Some(t.updates());
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })
        .unwrap();
    reached
}

fn c6_training_efficiency() -> Outcome {
    const BUDGET: usize = 1000;
    const EVERY: usize = 50;
    const FRACTION_OF_GREEDY: f64 = 0.9;
    let train = gen_dataset(&er_spec(200, 0)).unwrap();
    let val = gen_dataset(&er_spec(30, 1 << 33)).unwrap();
    let greedy_mean = val.iter().map(|g| greedy(g, Task::Mis).unwrap().1).sum::<f64>() / val.len() as f64;
    let threshold = FRACTION_OF_GREEDY * greedy_mean;
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let fl = updates_to_threshold(&train, &val, LossVariant::FlTransition, seed, BUDGET, EVERY, threshold);
        let db = updates_to_threshold(&train, &val, LossVariant::DbTrajectory, seed, BUDGET, EVERY, threshold);
        let ok = match (fl, db) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            _ => false,
        };
        wins += usize::from(ok);
        let show = |u: Option<usize>| u.map_or_else(|| "never".to_string(), |u| u.to_string());
        parts.push(format!("seed {seed}: fl {} vs db {}", show(fl), show(db)));
    }
    outcome(wins == 3, format!("threshold {threshold:.3} (0.9 x greedy); {}; {wins}/3", parts.join(", ")))
}

fn c7_fl_db_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 1000 {
        let cfg = GinConfig { num_layers: 2, hidden_dim: 8, zero_init_heads: false };
        let model = PolicyModel::new(cfg, &mut rng).unwrap();
        let task = Task::ALL[count % 4];
        let g = random_graph(&mut rng, 3, 12);
        let beta = rng.random_range(0.1..50.0);
        let states = uniform_states(&g, task, &mut rng);
        for s in &states[..states.len() - 1] {
            let legal: Vec<usize> =
                task.action_mask(&g, s).iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v).collect();
            let a = *legal.choose(&mut rng).unwrap();
            let rec = TransitionRecord::new(&g, 0, task, s.clone(), a).unwrap();
            let fl = fl_loss(&g, task, &rec, &model, beta).unwrap();

            let out = model.forward(&g, s).unwrap();
            let log_pf = masked_log_softmax(&out.node_logits, &task.action_mask(&g, s)).unwrap()[a];
            let log_f = -beta * task.intermediate_energy(&g, s) + out.log_flow;
            let log_f_next = if rec.terminal {
                -beta * task.terminal_energy(&g, &rec.next_state).unwrap()
            } else {
                -beta * task.intermediate_energy(&g, &rec.next_state) + model.forward(&g, &rec.next_state).unwrap().log_flow
            };
            let log_pb = -(task.num_backward_choices(&rec.next_state).unwrap() as f64).ln();
            let db = (log_f + log_pf - log_f_next - log_pb).powi(2);
            worst = worst.max((fl - db).abs() / db.abs().max(1.0));
            count += 1;
        }
    }
    outcome(worst <= 1e-10, format!("{count} transitions, worst difference {worst:.2e} (tol 1e-10)"))
}

fn c8_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut mismatches = 0;
    for i in 0..100 {
        let n = rng.random_range(1..=12);
        let p = rng.random_range(0.0..1.0);
        let g = gen_er(n, p, &mut rng).unwrap().with_id(format!("g{i}"));
        let c = g.complement();
        let mc = reachable_terminals(&g, Task::Mc).unwrap();
        let mis = reachable_terminals(&c, Task::Mis).unwrap();
        let a = brute_force_optimum(&g, Task::Mc).unwrap();
        let b = brute_force_optimum(&c, Task::Mis).unwrap();
        if mc != mis || a.optimum != b.optimum || a.optimizer_count != b.optimizer_count {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("100 graphs (n <= 12), {mismatches} mismatches"))
}

fn c9_determinism() -> Outcome {
    let mut problems = Vec::new();
    for spec in [
        GenSpec { family: Family::Ba { m: 3 }, n_min: 20, n_max: 40, count: 10, seed: 9 },
        er_spec(10, 9),
        GenSpec { family: Family::Rb { groups: (4, 6), group_size: (3, 5), rounds: 20 }, n_min: 0, n_max: 0, count: 10, seed: 9 },
    ] {
        let a = to_jsonl(&gen_dataset(&spec).unwrap()).unwrap();
        let b = to_jsonl(&gen_dataset(&spec).unwrap()).unwrap();
        if a != b {
            problems.push(format!("{} dataset differs", spec.family.name()));
        }
    }

    let data = gen_dataset(&GenSpec { family: Family::Er { p: 0.4 }, n_min: 6, n_max: 10, count: 8, seed: 3 }).unwrap();
    let cfg = TrainConfig {
        max_updates: Some(20),
        batch_size: 16,
        graphs_per_round: 4,
        gin: GinConfig { num_layers: 2, hidden_dim: 16, zero_init_heads: true },
        record_wall_time: false,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let mut t = Trainer::new(Task::Mds, cfg.clone()).unwrap();
        t.train(&data, |_| ControlFlow::Continue(())).unwrap();
        let beta = t.beta();
        let out = t.into_outcome();
        let log = dir.path().join(format!("log{run}.csv"));
        let ck = dir.path().join(format!("ck{run}.json"));
        write_log(&log, &out.log).unwrap();
        Checkpoint::from_model(&out.model, Some(Task::Mds), Some(beta), Some(&out.optimizer)).save(&ck).unwrap();
        artifacts.push((std::fs::read(&log).unwrap(), std::fs::read(&ck).unwrap(), out.model));
    }
    if artifacts[0].0 != artifacts[1].0 {
        problems.push("training logs differ".into());
    }
    if artifacts[0].1 != artifacts[1].1 {
        problems.push("checkpoints differ".into());
    }

    let loaded = Checkpoint::load(dir.path().join("ck0.json")).unwrap().model().unwrap();
    let original = &artifacts[0].2;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for g in &data {
        for s in uniform_states(g, Task::Mds, &mut rng) {
            let a = original.forward(g, &s).unwrap();
            let b = loaded.forward(g, &s).unwrap();
            let same = a.log_flow.to_bits() == b.log_flow.to_bits()
                && a.node_logits.iter().zip(&b.node_logits).all(|(x, y)| x.to_bits() == y.to_bits());
            if !same {
                problems.push(format!("forward output changed after reload on {}", g.id()));
                break;
            }
        }
    }
    outcome(problems.is_empty(), if problems.is_empty() { "datasets, logs, checkpoints and reloaded forwards identical".to_string() } else { problems.join("; ") })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 environment feasibility", c1_feasibility),
        ("2 gradient oracle", c2_gradients),
        ("3 distribution matching", c3_distribution_matching),
        ("4 low-temperature optimality", c4_low_temperature),
        ("5 desk-scale solving quality", c5_solving_quality),
        ("6 training-efficiency ordering", c6_training_efficiency),
        ("7 FL/DB reparametrization identity", c7_fl_db_identity),
        ("8 MC/MIS duality", c8_duality),
        ("9 determinism and round-trips", c9_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {verdict} ({:.1}s) {}", t0.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
