use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::env::Task;
use crate::error::{Error, Result};
use crate::gfn::{LogRow, LossVariant, Objective, TrainConfig};

pub const LOG_HEADER: &str = "update,epoch,loss,beta,mean_objective,wall_ms";

/// Parses `key = value` lines. `#` starts a comment; later keys win.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Parameter(format!("config line {}: empty key", i + 1)));
        }
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Everything `train` needs besides file paths. Keys accepted by [`apply`]
/// match the long flag names of the binary.
///
/// [`apply`]: TrainSettings::apply
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub task: Option<Task>,
    pub objective: Objective,
    pub transition: bool,
    pub config: TrainConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings { task: None, objective: Objective::Fl, transition: true, config: TrainConfig::default() }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parameter(format!("invalid value {value:?} for {key}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parameter(format!("invalid value {value:?} for {key}"))),
    }
}

impl TrainSettings {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.config;
        match key {
            "task" => self.task = Some(value.parse()?),
            "loss" => self.objective = value.parse()?,
            "transition" => self.transition = flag(key, value)?,
            "trajectory" => self.transition = !flag(key, value)?,
            "beta" => c.beta = num(key, value)?,
            "anneal-frac" => c.anneal_frac = num(key, value)?,
            "anneal" => c.anneal = value.parse()?,
            "eps" => c.eps = num(key, value)?,
            "batch" => c.batch_size = num(key, value)?,
            "epochs" => c.epochs = num(key, value)?,
            "lr" => c.lr = num(key, value)?,
            "updates" => c.max_updates = Some(num(key, value)?),
            "seed" => c.seed = num(key, value)?,
            "graphs-per-round" => c.graphs_per_round = num(key, value)?,
            "hidden" => c.gin.hidden_dim = num(key, value)?,
            "layers" => c.gin.num_layers = num(key, value)?,
            "zero-init-heads" => c.gin.zero_init_heads = flag(key, value)?,
            "wall-time" => c.record_wall_time = flag(key, value)?,
            _ => return Err(Error::Parameter(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        pairs.into_iter().try_for_each(|(k, v)| self.apply(k, v))
    }

    /// Resolved, validated training configuration.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig { variant: LossVariant::new(self.objective, self.transition), ..self.config.clone() };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn write_log(path: impl AsRef<Path>, rows: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(LOG_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<LogRow>> {
    let text = fs::read_to_string(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
