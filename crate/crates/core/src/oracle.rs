//! Ground truth for small graphs: exhaustive optima, exact terminal
//! distributions by state-DAG enumeration, reward-proportional targets,
//! greedy baselines and total-variation distance.

use std::collections::{BTreeMap, HashMap};

use crate::env::{Label, State, Task};
use crate::error::{Error, Result};
use crate::gin::PolicyModel;
use crate::graph::Graph;

/// Vertex cap for the `2^n` subset scan (MDS, MaxCut).
pub const SUBSET_SCAN_CAP: usize = 24;
/// Vertex cap for pruned independent-set / clique enumeration (MIS, MC).
pub const SET_ENUM_CAP: usize = 64;
/// Solutions are listed individually only up to this many vertices.
pub const LIST_CAP: usize = 16;
/// Vertex cap for exact terminal distributions under a learned policy.
pub const DISTRIBUTION_CAP: usize = 10;
/// Vertex cap for reward-proportional target distributions.
pub const TARGET_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub optimum: f64,
    pub optimizer_count: u64,
    /// Every feasible solution with its objective, for graphs up to [`LIST_CAP`].
    pub solutions: Option<Vec<(State, f64)>>,
}

pub fn brute_force_cap(task: Task) -> usize {
    match task {
        Task::Mis | Task::Mc => SET_ENUM_CAP,
        Task::Mds | Task::Mcut => SUBSET_SCAN_CAP,
    }
}

fn adjacency_bits(g: &Graph) -> Vec<u64> {
    (0..g.num_vertices()).map(|v| g.neighbors(v).iter().fold(0u64, |m, &u| m | 1 << u)).collect()
}

fn state_from_bits(n: usize, bits: u64) -> State {
    State::from_labels((0..n).map(|v| if bits >> v & 1 == 1 { Label::One } else { Label::Zero }).collect())
}

struct Tally {
    best: i64,
    count: u64,
    maximize: bool,
    list: Option<Vec<(u64, i64)>>,
}

impl Tally {
    fn new(maximize: bool, listing: bool) -> Self {
        Tally { best: if maximize { i64::MIN } else { i64::MAX }, count: 0, maximize, list: listing.then(Vec::new) }
    }

    fn visit(&mut self, bits: u64, value: i64) {
        if let Some(l) = self.list.as_mut() {
            l.push((bits, value));
        }
        let better = if self.maximize { value > self.best } else { value < self.best };
        if better {
            self.best = value;
            self.count = 1;
        } else if value == self.best {
            self.count += 1;
        }
    }
}

/// Enumerates every set that is independent in `adj`, each exactly once.
/// Without listing, branches that cannot reach the incumbent size are cut.
fn independent_sets(adj: &[u64], cand: u64, chosen: u64, size: i64, tally: &mut Tally) {
    tally.visit(chosen, size);
    if tally.list.is_none() && size + i64::from(cand.count_ones()) < tally.best {
        return;
    }
    let mut rest = cand;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        // Only later vertices, so each set is generated in increasing order.
        let next = rest & !adj[v];
        independent_sets(adj, next, chosen | 1 << v, size + 1, tally);
        if tally.list.is_none() && size + 1 + i64::from(rest.count_ones()) < tally.best {
            break;
        }
    }
}

/// Exact optimum and optimizer count by exhaustive enumeration of feasible
/// vertex subsets.
pub fn brute_force_optimum(g: &Graph, task: Task) -> Result<ExactResult> {
    let n = g.num_vertices();
    let cap = brute_force_cap(task);
    if n > cap {
        return Err(Error::Size { n, cap, what: "brute-force optimum" });
    }
    let listing = n <= LIST_CAP;
    let mut tally = Tally::new(task.maximizes(), listing);
    let adj = adjacency_bits(g);
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    match task {
        Task::Mis => independent_sets(&adj, full, 0, 0, &mut tally),
        Task::Mc => {
            let comp: Vec<u64> = (0..n).map(|v| !adj[v] & full & !(1u64 << v)).collect();
            independent_sets(&comp, full, 0, 0, &mut tally);
        }
        Task::Mds => {
            let closed: Vec<u64> = (0..n).map(|v| adj[v] | 1 << v).collect();
            for s in 0..=full {
                if closed.iter().all(|&c| c & s != 0) {
                    tally.visit(s, i64::from(s.count_ones()));
                }
            }
        }
        Task::Mcut => {
            for s in 0..=full {
                let cut: u32 = (0..n).filter(|&v| s >> v & 1 == 1).map(|v| (adj[v] & !s).count_ones()).sum();
                tally.visit(s, i64::from(cut));
            }
        }
    }
    Ok(ExactResult {
        optimum: tally.best as f64,
        optimizer_count: tally.count,
        solutions: tally.list.map(|l| l.into_iter().map(|(b, v)| (state_from_bits(n, b), v as f64)).collect()),
    })
}

/// Probability mass over complete states.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExactDistribution {
    probs: BTreeMap<State, f64>,
}

impl ExactDistribution {
    pub fn from_map(probs: BTreeMap<State, f64>) -> Self {
        ExactDistribution { probs }
    }

    pub fn get(&self, x: &State) -> f64 {
        self.probs.get(x).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, f64)> {
        self.probs.iter().map(|(s, &p)| (s, p))
    }

    pub fn support(&self) -> Vec<&State> {
        self.probs.keys().collect()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Pushes probability mass level by level through the state DAG. `policy`
/// returns per-vertex log-probabilities for a batch of non-terminal states.
pub fn terminal_distribution_with<F>(g: &Graph, task: Task, mut policy: F) -> Result<ExactDistribution>
where
    F: FnMut(&[&State], &[Vec<bool>]) -> Result<Vec<Vec<f64>>>,
{
    let mut levels: BTreeMap<usize, HashMap<State, f64>> = BTreeMap::new();
    let s0 = task.initial_state(g);
    levels.entry(s0.count(Label::Void)).or_default().insert(s0, 1.0);
    let mut out = BTreeMap::new();
    while let Some((_, level)) = levels.pop_last() {
        let mut states: Vec<(State, f64)> = level.into_iter().collect();
        states.sort_by(|a, b| a.0.cmp(&b.0));
        let (done, open): (Vec<_>, Vec<_>) = states.into_iter().partition(|(s, _)| task.is_terminal(s));
        for (s, p) in done {
            *out.entry(s).or_insert(0.0) += p;
        }
        if open.is_empty() {
            continue;
        }
        let refs: Vec<&State> = open.iter().map(|(s, _)| s).collect();
        let masks: Vec<Vec<bool>> = refs.iter().map(|s| task.action_mask(g, s)).collect();
        let log_probs = policy(&refs, &masks)?;
        for ((s, p), lp) in open.iter().zip(log_probs) {
            for child in task.enumerate_children(g, s)? {
                let mass = p * lp[child.action].exp();
                if mass == 0.0 {
                    continue;
                }
                let next = child.next_state;
                *levels.entry(next.count(Label::Void)).or_default().entry(next).or_insert(0.0) += mass;
            }
        }
    }
    Ok(ExactDistribution { probs: out })
}

/// `P_F^T(x)`: the exact terminal distribution of the model's on-policy sampler.
pub fn exact_terminal_distribution(g: &Graph, task: Task, model: &PolicyModel) -> Result<ExactDistribution> {
    let n = g.num_vertices();
    if n > DISTRIBUTION_CAP {
        return Err(Error::Size { n, cap: DISTRIBUTION_CAP, what: "exact terminal distribution" });
    }
    terminal_distribution_with(g, task, |states, masks| {
        let items: Vec<(&Graph, &State)> = states.iter().map(|&s| (g, s)).collect();
        model.log_policy_many(&items, masks)
    })
}

/// Uniform policy over legal actions, for reference distributions.
pub fn uniform_policy(_states: &[&State], masks: &[Vec<bool>]) -> Result<Vec<Vec<f64>>> {
    Ok(masks
        .iter()
        .map(|m| {
            let k = m.iter().filter(|&&b| b).count() as f64;
            m.iter().map(|&b| if b { -k.ln() } else { f64::NEG_INFINITY }).collect()
        })
        .collect())
}

/// Every terminal state reachable from the initial state.
pub fn reachable_terminals(g: &Graph, task: Task) -> Result<Vec<State>> {
    let mut levels: BTreeMap<usize, Vec<State>> = BTreeMap::new();
    let s0 = task.initial_state(g);
    levels.entry(s0.count(Label::Void)).or_default().push(s0);
    let mut out = Vec::new();
    while let Some((_, mut level)) = levels.pop_last() {
        level.sort();
        level.dedup();
        for s in level {
            if task.is_terminal(&s) {
                out.push(s);
                continue;
            }
            for child in task.enumerate_children(g, &s)? {
                let next = child.next_state;
                levels.entry(next.count(Label::Void)).or_default().push(next);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// `p*(x) ∝ exp(-beta E(x))` over the reachable terminal states.
pub fn target_distribution(g: &Graph, task: Task, beta: f64) -> Result<ExactDistribution> {
    let n = g.num_vertices();
    if n > TARGET_CAP {
        return Err(Error::Size { n, cap: TARGET_CAP, what: "target distribution" });
    }
    let xs = reachable_terminals(g, task)?;
    let logr: Vec<f64> = xs.iter().map(|x| task.terminal_energy(g, x).map(|e| -beta * e)).collect::<Result<_>>()?;
    let max = logr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logr.iter().map(|l| (l - max).exp()).sum();
    Ok(ExactDistribution {
        probs: xs.into_iter().zip(logr).map(|(x, l)| (x, (l - max).exp() / z)).collect(),
    })
}

/// For every reachable non-initial state: (state, number of distinct parents
/// that transition into it, uniform backward-policy count).
pub fn parent_counts(g: &Graph, task: Task) -> Result<Vec<(State, usize, usize)>> {
    let mut parents: BTreeMap<State, usize> = BTreeMap::new();
    let mut levels: BTreeMap<usize, Vec<State>> = BTreeMap::new();
    let s0 = task.initial_state(g);
    levels.entry(s0.count(Label::Void)).or_default().push(s0);
    while let Some((_, mut level)) = levels.pop_last() {
        level.sort();
        level.dedup();
        for s in level {
            if task.is_terminal(&s) {
                continue;
            }
            for child in task.enumerate_children(g, &s)? {
                let next = child.next_state;
                *parents.entry(next.clone()).or_insert(0) += 1;
                levels.entry(next.count(Label::Void)).or_default().push(next);
            }
        }
    }
    parents
        .into_iter()
        .map(|(s, p)| {
            let k = task.num_backward_choices(&s)?;
            Ok((s, p, k))
        })
        .collect()
}

/// Total-variation distance; states missing from one side count as zero.
pub fn tv_distance(p: &ExactDistribution, q: &ExactDistribution) -> f64 {
    let mut keys: Vec<&State> = p.probs.keys().chain(q.probs.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.into_iter().map(|x| (p.get(x) - q.get(x)).abs()).sum::<f64>()
}

/// Myopic baseline run through the same MDP. MIS and MDS pick the legal vertex
/// with the fewest void neighbors, MC the one with the most, MaxCut the one
/// with the largest cut gain; ties go to the lowest index.
pub fn greedy(g: &Graph, task: Task) -> Result<(State, f64)> {
    let mut s = task.initial_state(g);
    while !task.is_terminal(&s) {
        let mask = task.action_mask(g, &s);
        let void_deg = |v: usize| g.neighbors(v).iter().filter(|&&u| s.label(u) == Label::Void).count() as i64;
        let score = |v: usize| -> i64 {
            match task {
                Task::Mis | Task::Mds => -void_deg(v),
                Task::Mc => void_deg(v),
                Task::Mcut => {
                    let nb = g.neighbors(v);
                    nb.len() as i64 - 2 * nb.iter().filter(|&&u| s.label(u) == Label::One).count() as i64
                }
            }
        };
        let mut best: Option<(usize, i64)> = None;
        for v in (0..mask.len()).filter(|&v| mask[v]) {
            let sc = score(v);
            if best.is_none_or(|(_, b)| sc > b) {
                best = Some((v, sc));
            }
        }
        let (v, _) = best.ok_or_else(|| Error::Contract("no legal action".into()))?;
        s = task.step(g, &s, v)?.next_state;
    }
    let obj = task.objective(g, &s);
    Ok((s, obj))
}
