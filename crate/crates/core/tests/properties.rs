use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gfnco::generate::{gen_ba, gen_er};
use gfnco::oracle::{
    brute_force_optimum, greedy, reachable_terminals, target_distribution, terminal_distribution_with, tv_distance,
    uniform_policy,
};
use gfnco::{Graph, Label, State, Task};

fn graph_from(seed: u64, n: usize, dense: bool) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if dense {
        gen_er(n, rng.random_range(0.1..0.7), &mut rng).unwrap()
    } else {
        gen_ba(n, rng.random_range(1..=2.min(n - 1)), &mut rng).unwrap()
    }
}

/// Walks a uniformly random trajectory, returning every visited state.
fn walk(g: &Graph, task: Task, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = task.initial_state(g);
    let mut out = vec![s.clone()];
    while !task.is_terminal(&s) {
        let legal: Vec<usize> = task.action_mask(g, &s).iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v).collect();
        let v = legal[rng.random_range(0..legal.len())];
        s = task.step(g, &s, v).unwrap().next_state;
        out.push(s.clone());
    }
    out
}

fn task_strategy() -> impl Strategy<Value = Task> {
    prop::sample::select(Task::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // After every step the void set is exactly what a from-scratch check
    // leaves open.
    #[test]
    fn incremental_forcing_matches_full_recheck(seed in any::<u64>(), n in 2usize..20, dense in any::<bool>()) {
        let g = graph_from(seed, n, dense);
        for task in [Task::Mis, Task::Mc] {
            for s in walk(&g, task, seed ^ 1) {
                let ones = s.ones();
                for v in 0..n {
                    let open = match task {
                        Task::Mis => !ones.contains(&v) && ones.iter().all(|&u| !g.are_adjacent(u, v).unwrap()),
                        _ => !ones.contains(&v) && ones.iter().all(|&u| g.are_adjacent(u, v).unwrap()),
                    };
                    prop_assert_eq!(s.label(v) == Label::Void, open, "{} {} at {}", task, s, v);
                }
            }
        }
    }

    #[test]
    fn surrogate_energy_equals_energy_on_terminals(seed in any::<u64>(), n in 2usize..16, task in task_strategy()) {
        let g = graph_from(seed, n, seed % 2 == 0);
        let states = walk(&g, task, seed);
        let x = states.last().unwrap();
        prop_assert_eq!(task.intermediate_energy(&g, x), task.terminal_energy(&g, x).unwrap());
        for s in &states[..states.len() - 1] {
            prop_assert!(task.terminal_energy(&g, s).is_err());
        }
    }

    #[test]
    fn exact_distribution_is_normalized_on_reachable_terminals(seed in any::<u64>(), n in 2usize..8, task in task_strategy()) {
        let g = graph_from(seed, n, seed % 3 != 0);
        let p = terminal_distribution_with(&g, task, uniform_policy).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-12);
        let support: Vec<State> = p.support().into_iter().cloned().collect();
        prop_assert_eq!(&support, &reachable_terminals(&g, task).unwrap());
        let target = target_distribution(&g, task, 0.7).unwrap();
        prop_assert_eq!(target.support(), p.support());
    }

    #[test]
    fn greedy_never_beats_optimum(seed in any::<u64>(), n in 2usize..14, task in task_strategy()) {
        let g = graph_from(seed, n, seed % 2 == 1);
        let (x, value) = greedy(&g, task).unwrap();
        prop_assert!(task.check_feasible(&g, &x).is_ok());
        prop_assert_eq!(value, task.objective(&g, &x));
        let opt = brute_force_optimum(&g, task).unwrap().optimum;
        prop_assert!(!task.better(value, opt), "greedy {} beats optimum {}", value, opt);
    }

    // Flows built backward from the reward with the uniform backward policy
    // make every flow-matching residual zero; sampling the induced forward
    // policy must then reproduce the target exactly.
    #[test]
    fn zero_loss_flows_sample_the_target(seed in any::<u64>(), n in 2usize..8, beta in 0.0f64..3.0) {
        let g = graph_from(seed, n, seed % 2 == 0);
        for task in [Task::Mis, Task::Mc, Task::Mds] {
            let mut flows = HashMap::new();
            let s0 = task.initial_state(&g);
            flow(&g, task, beta, &s0, &mut flows);
            let p = terminal_distribution_with(&g, task, |states, masks| {
                Ok(states.iter().zip(masks).map(|(s, m)| {
                    let mut lp = vec![f64::NEG_INFINITY; m.len()];
                    for c in task.enumerate_children(&g, s).unwrap() {
                        let k = task.num_backward_choices(&c.next_state).unwrap() as f64;
                        lp[c.action] = flows[&c.next_state].ln() - k.ln() - flows[*s].ln();
                    }
                    lp
                }).collect())
            }).unwrap();
            let q = target_distribution(&g, task, beta).unwrap();
            prop_assert!(tv_distance(&p, &q) < 1e-9, "{} tv {}", task, tv_distance(&p, &q));
        }
    }
}

fn flow(g: &Graph, task: Task, beta: f64, s: &State, memo: &mut HashMap<State, f64>) -> f64 {
    if let Some(&f) = memo.get(s) {
        return f;
    }
    let f = if task.is_terminal(s) {
        (-beta * task.terminal_energy(g, s).unwrap()).exp()
    } else {
        task.enumerate_children(g, s)
            .unwrap()
            .iter()
            .map(|c| flow(g, task, beta, &c.next_state, memo) / task.num_backward_choices(&c.next_state).unwrap() as f64)
            .sum()
    };
    memo.insert(s.clone(), f);
    f
}

// Edge count of G(n, p) is Binomial(C(n,2), p); the sample mean over many
// draws must sit within a few standard errors.
#[test]
fn er_edge_counts_follow_binomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (n, p) in [(10usize, 0.5f64), (30, 0.1), (50, 0.3)] {
        let draws = 400;
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = (0..draws).map(|_| gen_er(n, p, &mut rng).unwrap().num_edges() as f64).sum::<f64>() / draws as f64;
        let se = (pairs * p * (1.0 - p) / draws as f64).sqrt();
        assert!((mean - pairs * p).abs() < 4.0 * se, "n={n} p={p}: mean {mean} vs {}", pairs * p);
    }
}

#[test]
fn ba_degrees_sum_to_twice_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(5..60);
        let m = rng.random_range(1..4);
        let g = gen_ba(n, m, &mut rng).unwrap();
        let total: usize = (0..n).map(|v| g.degree(v).unwrap()).sum();
        assert_eq!(total, 2 * g.num_edges());
        assert_eq!(g.num_edges(), (n - m) * m);
        assert!((0..m).all(|v| g.degree(v).unwrap() >= 1));
        assert!((m..n).all(|v| g.degree(v).unwrap() >= m));
    }
}
