use std::ops::ControlFlow;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::env::Task;
use crate::error::{Error, Result};
use crate::gfn::config::TrainConfig;
use crate::gfn::loss::{loss_and_grads, records_from_trajectory, TransitionRecord};
use crate::gfn::rollout::rollout_many;
use crate::gin::PolicyModel;
use crate::graph::Graph;

/// One row of the training log, written as CSV with the same column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub update: usize,
    pub epoch: usize,
    pub loss: f64,
    pub beta: f64,
    /// Mean objective of the terminal states collected in the current round.
    pub mean_objective: f64,
    pub wall_ms: u64,
}

/// Splits `0..n` into shuffled batches of at most `batch_size`, each index
/// used exactly once.
pub fn plan_batches<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

pub struct TrainOutcome {
    pub model: PolicyModel,
    pub optimizer: Adam,
    pub log: Vec<LogRow>,
}

/// Training state for the rollout / buffer / update loop.
///
/// Each round samples `graphs_per_round` graphs, rolls out one trajectory per
/// graph with the current policy, and breaks the trajectories into
/// transitions. Transition-level variants shuffle those transitions and
/// consume each exactly once in batches of `batch_size`; trajectory-level
/// variants take one update over all trajectories of the round.
pub struct Trainer {
    task: Task,
    cfg: TrainConfig,
    model: PolicyModel,
    optimizer: Adam,
    rng: ChaCha8Rng,
    updates: usize,
    rounds: usize,
    planned_rounds: usize,
    epoch: usize,
    log: Vec<LogRow>,
    start: Instant,
    /// Records consumed by the most recent round, for accounting checks.
    consumed: Vec<TransitionRecord>,
    generated: Vec<TransitionRecord>,
}

impl Trainer {
    pub fn new(task: Task, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = PolicyModel::new(cfg.gin, &mut rng)?;
        Ok(Self::with_model(task, cfg, model, rng))
    }

    /// Continues from an existing model with a fresh optimizer; the RNG is
    /// seeded from `cfg.seed`.
    pub fn from_model(task: Task, cfg: TrainConfig, model: PolicyModel) -> Result<Self> {
        cfg.validate()?;
        if *model.config() != cfg.gin {
            return Err(Error::Validation("model architecture differs from the training config".into()));
        }
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self::with_model(task, cfg, model, rng))
    }

    fn with_model(task: Task, cfg: TrainConfig, model: PolicyModel, rng: ChaCha8Rng) -> Self {
        let optimizer = Adam::new(cfg.lr, model.params());
        Trainer {
            task,
            cfg,
            model,
            optimizer,
            rng,
            updates: 0,
            rounds: 0,
            planned_rounds: 0,
            epoch: 0,
            log: Vec::new(),
            start: Instant::now(),
            consumed: Vec::new(),
            generated: Vec::new(),
        }
    }

    pub fn model(&self) -> &PolicyModel {
        &self.model
    }

    pub fn optimizer(&self) -> &Adam {
        &self.optimizer
    }

    pub fn log(&self) -> &[LogRow] {
        &self.log
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Multisets of records generated and consumed in the last round.
    pub fn last_round_records(&self) -> (&[TransitionRecord], &[TransitionRecord]) {
        (&self.generated, &self.consumed)
    }

    fn budget_exhausted(&self) -> bool {
        self.cfg.max_updates.is_some_and(|m| self.updates >= m)
    }

    fn progress(&self) -> f64 {
        match self.cfg.max_updates {
            Some(m) if m > 0 => self.updates as f64 / m as f64,
            _ if self.planned_rounds > 0 => self.rounds as f64 / self.planned_rounds as f64,
            _ => 1.0,
        }
    }

    /// Current inverse temperature from the annealing schedule.
    pub fn beta(&self) -> f64 {
        self.cfg.beta_at(self.progress())
    }

    /// One collection round on the given graph indices.
    pub fn run_round(&mut self, dataset: &[Graph], picks: &[usize]) -> Result<()> {
        let graphs: Vec<&Graph> = picks.iter().map(|&i| &dataset[i]).collect();
        let mut trajs = rollout_many(&graphs, self.task, &self.model, self.cfg.eps, &mut self.rng)?;
        for t in trajs.iter_mut() {
            t.graph = picks[t.graph];
        }
        let mean_objective =
            trajs.iter().map(|t| self.task.objective(&dataset[t.graph], &t.terminal)).sum::<f64>() / trajs.len() as f64;
        let per_traj: Vec<Vec<TransitionRecord>> = trajs
            .iter()
            .map(|t| records_from_trajectory(&dataset[t.graph], self.task, t))
            .collect::<Result<_>>()?;
        self.generated = per_traj.iter().flatten().cloned().collect();
        self.consumed.clear();

        if self.cfg.variant.is_transition_based() {
            let flat = self.generated.clone();
            for batch in plan_batches(flat.len(), self.cfg.batch_size, &mut self.rng) {
                if self.budget_exhausted() {
                    break;
                }
                let recs: Vec<TransitionRecord> = batch.iter().map(|&i| flat[i].clone()).collect();
                self.update(dataset, &[&recs], mean_objective)?;
                self.consumed.extend(recs);
            }
        } else if !self.budget_exhausted() && !self.generated.is_empty() {
            let groups: Vec<&[TransitionRecord]> = per_traj.iter().map(Vec::as_slice).collect();
            self.update(dataset, &groups, mean_objective)?;
            self.consumed = self.generated.clone();
        }
        self.rounds += 1;
        Ok(())
    }

    fn update(&mut self, dataset: &[Graph], groups: &[&[TransitionRecord]], mean_objective: f64) -> Result<()> {
        let beta = self.beta();
        let objective = self.cfg.variant.objective();
        let (loss, grads) = loss_and_grads(&self.model, dataset, self.task, beta, objective, groups)?;
        if !loss.is_finite() {
            return Err(Error::Validation(format!("non-finite loss at update {}", self.updates)));
        }
        self.optimizer.step(self.model.params_mut(), &grads)?;
        self.log.push(LogRow {
            update: self.updates,
            epoch: self.epoch,
            loss,
            beta,
            mean_objective,
            wall_ms: if self.cfg.record_wall_time { self.start.elapsed().as_millis() as u64 } else { 0 },
        });
        self.updates += 1;
        Ok(())
    }

    /// Runs all epochs (or until `max_updates`). `on_round` is called after
    /// every round and may stop training early.
    pub fn train(&mut self, dataset: &[Graph], mut on_round: impl FnMut(&Trainer) -> ControlFlow<()>) -> Result<()> {
        if dataset.is_empty() {
            return Err(Error::Parameter("training dataset is empty".into()));
        }
        let per_epoch = dataset.len().div_ceil(self.cfg.graphs_per_round);
        self.planned_rounds = per_epoch * self.cfg.epochs;
        let epochs = if self.cfg.max_updates.is_some() { usize::MAX } else { self.cfg.epochs };
        for epoch in 0..epochs {
            self.epoch = epoch;
            let before = self.updates;
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            order.shuffle(&mut self.rng);
            for picks in order.chunks(self.cfg.graphs_per_round) {
                if self.budget_exhausted() {
                    return Ok(());
                }
                self.run_round(dataset, picks)?;
                if on_round(self).is_break() {
                    return Ok(());
                }
            }
            // Every trajectory was empty (initial states already terminal).
            if self.updates == before {
                return Ok(());
            }
        }
        Ok(())
    }

    pub fn into_outcome(self) -> TrainOutcome {
        TrainOutcome { model: self.model, optimizer: self.optimizer, log: self.log }
    }
}

/// Trains a fresh model seeded from `cfg.seed`. With `max_updates` set the
/// loop runs until the update budget is spent, otherwise for `cfg.epochs`.
pub fn train(dataset: &[Graph], task: Task, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(task, cfg.clone())?;
    trainer.train(dataset, |_| ControlFlow::Continue(()))?;
    Ok(trainer.into_outcome())
}
