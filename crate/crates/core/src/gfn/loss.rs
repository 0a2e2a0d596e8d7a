//! Forward-looking, detailed-balance and trajectory-balance losses.
//!
//! All losses are built on one tape from batched forward passes: one policy
//! pass over the source states and one flow pass over the source states plus
//! the non-terminal destination states. Rewards are `R(x) = exp(-beta E(x))`
//! and the backward policy is uniform over the vertices carrying the action
//! label, `log P_B = -ln k`.

use std::rc::Rc;

use crate::autodiff::{Grads, Tape, Tensor, Var};
use crate::env::{State, Task};
use crate::error::{Error, Result};
use crate::gfn::config::Objective;
use crate::gfn::rollout::Trajectory;
use crate::gin::{GraphBatch, PolicyModel};
use crate::graph::Graph;

/// Lookup of the conditioning graph referenced by a record.
pub trait GraphSource {
    fn graph(&self, idx: usize) -> &Graph;
}

impl GraphSource for [Graph] {
    fn graph(&self, idx: usize) -> &Graph {
        &self[idx]
    }
}

impl GraphSource for Vec<Graph> {
    fn graph(&self, idx: usize) -> &Graph {
        &self[idx]
    }
}

/// A single graph serves every index.
impl GraphSource for Graph {
    fn graph(&self, _idx: usize) -> &Graph {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub graph: usize,
    pub state: State,
    pub action: usize,
    pub next_state: State,
    pub terminal: bool,
    /// Intermediate energy of `state`.
    pub energy: f64,
    /// Intermediate energy of `next_state` (the terminal energy when `terminal`).
    pub next_energy: f64,
    pub backward_choices: usize,
}

impl TransitionRecord {
    pub fn new(g: &Graph, graph: usize, task: Task, state: State, action: usize) -> Result<Self> {
        let r = task.step(g, &state, action)?;
        Ok(TransitionRecord {
            graph,
            energy: task.intermediate_energy(g, &state),
            next_energy: task.intermediate_energy(g, &r.next_state),
            backward_choices: task.num_backward_choices(&r.next_state)?,
            terminal: r.terminal,
            next_state: r.next_state,
            state,
            action,
        })
    }
}

pub fn records_from_trajectory(g: &Graph, task: Task, traj: &Trajectory) -> Result<Vec<TransitionRecord>> {
    let states = traj.states(task);
    states
        .windows(2)
        .zip(&traj.steps)
        .map(|(pair, step)| {
            let (s, s_next) = (&pair[0], &pair[1]);
            Ok(TransitionRecord {
                graph: traj.graph,
                state: s.clone(),
                action: step.action,
                next_state: s_next.clone(),
                terminal: task.is_terminal(s_next),
                energy: task.intermediate_energy(g, s),
                next_energy: task.intermediate_energy(g, s_next),
                backward_choices: task.num_backward_choices(s_next)?,
            })
        })
        .collect()
}

/// `log P_F(s' | s)` for every record, as a `[B]` tape variable.
fn forward_log_probs<G: GraphSource + ?Sized>(
    tape: &mut Tape,
    model: &PolicyModel,
    graphs: &G,
    task: Task,
    recs: &[&TransitionRecord],
) -> Result<Var> {
    let items: Vec<(&Graph, &State)> = recs.iter().map(|r| (graphs.graph(r.graph), &r.state)).collect();
    let batch = GraphBatch::new(&items)?;
    let mask: Vec<bool> = items.iter().flat_map(|(g, s)| task.action_mask(g, s)).collect();
    let picks: Vec<usize> = recs
        .iter()
        .enumerate()
        .map(|(b, r)| {
            let idx = batch.segments.offsets[b] + r.action;
            if mask[idx] {
                Ok(idx)
            } else {
                Err(Error::Contract(format!("action {} illegal in state {}", r.action, r.state)))
            }
        })
        .collect::<Result<_>>()?;
    let lp = model.log_policy(tape, &batch, mask)?;
    Ok(tape.gather(lp, Rc::new(picks)))
}

/// Weighted sum of squared residuals. `groups` partitions the records: each
/// group's records are averaged, then groups are averaged. Transition-level
/// training passes one group; trajectory-level training passes one group per
/// trajectory. For [`Objective::Tb`] each group must be one complete
/// trajectory in order.
pub fn balance_loss<G: GraphSource + ?Sized>(
    tape: &mut Tape,
    model: &PolicyModel,
    graphs: &G,
    task: Task,
    beta: f64,
    objective: Objective,
    groups: &[&[TransitionRecord]],
) -> Result<Var> {
    if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::Contract("loss needs at least one non-empty group".into()));
    }
    match objective {
        Objective::Fl | Objective::Db => flow_matching_loss(tape, model, graphs, task, beta, objective, groups),
        Objective::Tb => trajectory_balance_loss(tape, model, graphs, task, beta, groups),
    }
}

fn flow_matching_loss<G: GraphSource + ?Sized>(
    tape: &mut Tape,
    model: &PolicyModel,
    graphs: &G,
    task: Task,
    beta: f64,
    objective: Objective,
    groups: &[&[TransitionRecord]],
) -> Result<Var> {
    let recs: Vec<&TransitionRecord> = groups.iter().flat_map(|g| g.iter()).collect();
    let weights: Vec<f64> = groups
        .iter()
        .flat_map(|g| std::iter::repeat_n(1.0 / (groups.len() * g.len()) as f64, g.len()))
        .collect();
    let b = recs.len();

    let log_pf = forward_log_probs(tape, model, graphs, task, &recs)?;

    let mut flow_items: Vec<(&Graph, &State)> = recs.iter().map(|r| (graphs.graph(r.graph), &r.state)).collect();
    let mut next_index = vec![0usize; b];
    let mut next_mask = vec![0.0; b];
    for (i, r) in recs.iter().enumerate() {
        if !r.terminal {
            next_index[i] = flow_items.len();
            next_mask[i] = 1.0;
            flow_items.push((graphs.graph(r.graph), &r.next_state));
        }
    }
    let flows = model.log_flow(tape, &GraphBatch::new(&flow_items)?);
    let flow_s = tape.gather(flows, Rc::new((0..b).collect()));
    let flow_next = tape.gather(flows, Rc::new(next_index));
    let keep = tape.constant(Tensor::vector(next_mask));
    let flow_next = tape.mul(flow_next, keep);

    let consts: Vec<f64> = recs
        .iter()
        .map(|r| {
            let neg_log_pb = (r.backward_choices as f64).ln();
            match objective {
                Objective::Fl => -beta * r.energy + beta * r.next_energy + neg_log_pb,
                // Terminal flow is the reward: -log F(x) = beta * E(x).
                _ if r.terminal => beta * r.next_energy + neg_log_pb,
                _ => neg_log_pb,
            }
        })
        .collect();

    let d = tape.add(flow_s, log_pf);
    let d = tape.sub(d, flow_next);
    let d = tape.add_const(d, &consts);
    let sq = tape.square(d);
    let w = tape.constant(Tensor::vector(weights));
    let weighted = tape.mul(sq, w);
    Ok(tape.sum(weighted))
}

fn trajectory_balance_loss<G: GraphSource + ?Sized>(
    tape: &mut Tape,
    model: &PolicyModel,
    graphs: &G,
    task: Task,
    beta: f64,
    groups: &[&[TransitionRecord]],
) -> Result<Var> {
    let mut offsets = vec![0];
    let mut consts = Vec::with_capacity(groups.len());
    for grp in groups {
        let first = &grp[0];
        let last = grp.last().unwrap();
        let g = graphs.graph(first.graph);
        if first.state != task.initial_state(g) || !last.terminal {
            return Err(Error::Contract("trajectory balance needs complete trajectories".into()));
        }
        offsets.push(offsets.last().unwrap() + grp.len());
        let sum_neg_log_pb: f64 = grp.iter().map(|r| (r.backward_choices as f64).ln()).sum();
        // -log R(x) = beta * E(x)
        consts.push(beta * last.next_energy + sum_neg_log_pb);
    }
    let recs: Vec<&TransitionRecord> = groups.iter().flat_map(|g| g.iter()).collect();
    let log_pf = forward_log_probs(tape, model, graphs, task, &recs)?;
    let seg = Rc::new(crate::autodiff::Segments { offsets });
    let sum_pf = tape.segment_sum(log_pf, seg);

    // Conditional log Z: the flow network evaluated at the initial state.
    let starts: Vec<(&Graph, &State)> = groups.iter().map(|g| (graphs.graph(g[0].graph), &g[0].state)).collect();
    let log_z = model.log_flow(tape, &GraphBatch::new(&starts)?);

    let d = tape.add(log_z, sum_pf);
    let d = tape.add_const(d, &consts);
    let sq = tape.square(d);
    Ok(tape.mean(sq))
}

fn scalar_loss<G: GraphSource + ?Sized>(
    model: &PolicyModel,
    graphs: &G,
    task: Task,
    beta: f64,
    objective: Objective,
    groups: &[&[TransitionRecord]],
) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = balance_loss(&mut tape, model, graphs, task, beta, objective, groups)?;
    Ok(tape.value(loss).values[0])
}

/// Forward-looking loss of one transition.
pub fn fl_loss(g: &Graph, task: Task, rec: &TransitionRecord, model: &PolicyModel, beta: f64) -> Result<f64> {
    scalar_loss(model, g, task, beta, Objective::Fl, &[std::slice::from_ref(rec)])
}

/// Detailed-balance loss of one transition.
pub fn db_loss(g: &Graph, task: Task, rec: &TransitionRecord, model: &PolicyModel, beta: f64) -> Result<f64> {
    scalar_loss(model, g, task, beta, Objective::Db, &[std::slice::from_ref(rec)])
}

/// Trajectory-balance loss of one complete trajectory.
pub fn tb_loss(g: &Graph, task: Task, traj: &[TransitionRecord], model: &PolicyModel, beta: f64) -> Result<f64> {
    scalar_loss(model, g, task, beta, Objective::Tb, &[traj])
}

/// Mean per-transition FL or DB loss along a trajectory.
pub fn trajectory_loss(
    g: &Graph,
    task: Task,
    traj: &[TransitionRecord],
    model: &PolicyModel,
    beta: f64,
    objective: Objective,
) -> Result<f64> {
    if objective == Objective::Tb {
        return tb_loss(g, task, traj, model, beta);
    }
    scalar_loss(model, g, task, beta, objective, &[traj])
}

/// Loss value and parameter gradients in one pass.
pub fn loss_and_grads<G: GraphSource + ?Sized>(
    model: &PolicyModel,
    graphs: &G,
    task: Task,
    beta: f64,
    objective: Objective,
    groups: &[&[TransitionRecord]],
) -> Result<(f64, Grads)> {
    let mut tape = Tape::new();
    let loss = balance_loss(&mut tape, model, graphs, task, beta, objective, groups)?;
    let grads = tape.backward(loss, &model.param_refs())?;
    Ok((tape.value(loss).values[0], grads))
}
