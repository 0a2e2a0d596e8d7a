use rand::Rng;

use crate::env::{Label, State, Task};
use crate::error::{Error, Result};
use crate::gin::PolicyModel;
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryStep {
    pub action: usize,
    pub forced: Vec<(usize, Label)>,
}

/// A complete trajectory stored as its start state plus per-step label deltas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// Index of the conditioning graph in the caller's collection.
    pub graph: usize,
    pub initial: State,
    pub steps: Vec<TrajectoryStep>,
    pub terminal: State,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// All visited states `s_0, ..., s_n`, replayed from the deltas.
    pub fn states(&self, task: Task) -> Vec<State> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.initial.clone());
        for step in &self.steps {
            let next = task.apply_delta(out.last().unwrap(), step.action, &step.forced);
            out.push(next);
        }
        out
    }
}

/// Draws an index from `(1 - eps) * exp(log_probs) + eps * uniform(legal)`.
fn sample_action<R: Rng + ?Sized>(log_probs: &[f64], mask: &[bool], eps: f64, rng: &mut R) -> Result<usize> {
    let legal = mask.iter().filter(|&&m| m).count();
    if legal == 0 {
        return Err(Error::Contract("no legal action at a non-terminal state".into()));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (v, (&lp, &ok)) in log_probs.iter().zip(mask).enumerate() {
        if !ok {
            continue;
        }
        acc += (1.0 - eps) * lp.exp() + eps / legal as f64;
        last = v;
        if u < acc {
            return Ok(v);
        }
    }
    Ok(last)
}

/// Rolls out one trajectory per graph in lockstep, batching the policy
/// evaluations of all unfinished trajectories into a single forward pass.
pub fn rollout_many<R: Rng + ?Sized>(
    graphs: &[&Graph],
    task: Task,
    model: &PolicyModel,
    eps: f64,
    rng: &mut R,
) -> Result<Vec<Trajectory>> {
    let mut trajs: Vec<Trajectory> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let s0 = task.initial_state(g);
            Trajectory { graph: i, initial: s0.clone(), steps: Vec::new(), terminal: s0 }
        })
        .collect();
    loop {
        let active: Vec<usize> = (0..trajs.len()).filter(|&i| !task.is_terminal(&trajs[i].terminal)).collect();
        if active.is_empty() {
            break;
        }
        let items: Vec<(&Graph, &State)> = active.iter().map(|&i| (graphs[i], &trajs[i].terminal)).collect();
        let masks: Vec<Vec<bool>> = items.iter().map(|(g, s)| task.action_mask(g, s)).collect();
        let log_probs = model.log_policy_many(&items, &masks)?;
        for (j, &i) in active.iter().enumerate() {
            let v = sample_action(&log_probs[j], &masks[j], eps, rng)?;
            let r = task.step(graphs[i], &trajs[i].terminal, v)?;
            trajs[i].steps.push(TrajectoryStep { action: v, forced: r.newly_forced });
            trajs[i].terminal = r.next_state;
        }
    }
    Ok(trajs)
}

/// Samples one complete trajectory from the mixed policy.
pub fn rollout<R: Rng + ?Sized>(g: &Graph, task: Task, model: &PolicyModel, eps: f64, rng: &mut R) -> Result<Trajectory> {
    Ok(rollout_many(&[g], task, model, eps, rng)?.pop().expect("one trajectory"))
}

/// Best of `k` on-policy samples; ties keep the earliest sample.
pub fn sample_best_of_k<R: Rng + ?Sized>(
    g: &Graph,
    task: Task,
    model: &PolicyModel,
    k: usize,
    rng: &mut R,
) -> Result<(State, f64)> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let copies = vec![g; k];
    let trajs = rollout_many(&copies, task, model, 0.0, rng)?;
    let mut best: Option<(State, f64)> = None;
    for t in trajs {
        let obj = task.objective(g, &t.terminal);
        if best.as_ref().is_none_or(|(_, b)| task.better(obj, *b)) {
            best = Some((t.terminal, obj));
        }
    }
    Ok(best.expect("k >= 1"))
}
