use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gin::GinConfig;

/// Which balance condition a loss enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Detailed balance with the log-flow written as `-beta * E~(s) + log F~(s)`.
    Fl,
    Db,
    Tb,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fl" => Ok(Objective::Fl),
            "db" => Ok(Objective::Db),
            "tb" => Ok(Objective::Tb),
            other => Err(Error::Parameter(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossVariant {
    FlTransition,
    FlTrajectory,
    DbTransition,
    DbTrajectory,
    Tb,
}

impl LossVariant {
    /// `transition = false` selects the trajectory-level average; TB is always
    /// trajectory-level.
    pub fn new(objective: Objective, transition: bool) -> Self {
        match (objective, transition) {
            (Objective::Fl, true) => LossVariant::FlTransition,
            (Objective::Fl, false) => LossVariant::FlTrajectory,
            (Objective::Db, true) => LossVariant::DbTransition,
            (Objective::Db, false) => LossVariant::DbTrajectory,
            (Objective::Tb, _) => LossVariant::Tb,
        }
    }

    pub fn objective(self) -> Objective {
        match self {
            LossVariant::FlTransition | LossVariant::FlTrajectory => Objective::Fl,
            LossVariant::DbTransition | LossVariant::DbTrajectory => Objective::Db,
            LossVariant::Tb => Objective::Tb,
        }
    }

    pub fn is_transition_based(self) -> bool {
        matches!(self, LossVariant::FlTransition | LossVariant::DbTransition)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossVariant::FlTransition => "fl-transition",
            LossVariant::FlTrajectory => "fl-trajectory",
            LossVariant::DbTransition => "db-transition",
            LossVariant::DbTrajectory => "db-trajectory",
            LossVariant::Tb => "tb",
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape of the ramp from temperature 1 to the target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anneal {
    /// beta grows linearly.
    #[default]
    Beta,
    /// The temperature 1/beta shrinks linearly, so beta stays small for most
    /// of the ramp and rises steeply at its end.
    Temperature,
}

impl FromStr for Anneal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beta" => Ok(Anneal::Beta),
            "temperature" | "temp" => Ok(Anneal::Temperature),
            other => Err(Error::Parameter(format!("unknown annealing schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: LossVariant,
    /// Target inverse temperature.
    pub beta: f64,
    /// Fraction of training over which beta ramps linearly from 1 to the
    /// target; 0 disables annealing.
    pub anneal_frac: f64,
    pub anneal: Anneal,
    /// Probability mass mixed in from the uniform policy over legal actions.
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Graphs rolled out (one trajectory each) per collection round.
    pub graphs_per_round: usize,
    /// Hard cap on optimizer updates; also the annealing horizon when set.
    pub max_updates: Option<usize>,
    pub seed: u64,
    pub gin: GinConfig,
    /// When false the `wall_ms` log column is written as 0 so logs are
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: LossVariant::FlTransition,
            beta: 500.0,
            anneal_frac: 0.5,
            anneal: Anneal::Beta,
            eps: 0.0,
            batch_size: 64,
            epochs: 20,
            lr: 1e-3,
            graphs_per_round: 16,
            max_updates: None,
            seed: 0,
            gin: GinConfig::default(),
            record_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::Parameter(format!("exploration rate {} outside [0, 1]", self.eps)));
        }
        if !(0.0..=1.0).contains(&self.anneal_frac) {
            return Err(Error::Parameter(format!("anneal fraction {} outside [0, 1]", self.anneal_frac)));
        }
        if self.batch_size == 0 || self.graphs_per_round == 0 {
            return Err(Error::Parameter("batch size and graphs per round must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Parameter(format!("learning rate must be positive, got {}", self.lr)));
        }
        self.gin.validate()
    }

    /// Inverse temperature at training progress `p` in `[0, 1]`.
    pub fn beta_at(&self, progress: f64) -> f64 {
        if self.anneal_frac <= 0.0 {
            return self.beta;
        }
        let t = (progress / self.anneal_frac).clamp(0.0, 1.0);
        if t >= 1.0 {
            return self.beta;
        }
        match self.anneal {
            Anneal::Beta => 1.0 + (self.beta - 1.0) * t,
            Anneal::Temperature => 1.0 / (1.0 + (1.0 / self.beta - 1.0) * t),
        }
    }
}
