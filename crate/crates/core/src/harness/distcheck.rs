use std::fmt::Write as _;

use crate::env::{State, Task};
use crate::error::{Error, Result};
use crate::gin::PolicyModel;
use crate::graph::Graph;
use crate::oracle::{exact_terminal_distribution, target_distribution, tv_distance};

#[derive(Debug, Clone, PartialEq)]
pub struct DistRow {
    pub state: State,
    pub objective: f64,
    pub model: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistReport {
    pub graph_id: String,
    pub task: Task,
    pub beta: f64,
    pub tv: f64,
    /// Union of both supports, sorted by state.
    pub rows: Vec<DistRow>,
}

/// Exact sampler distribution against the `exp(-beta E)` target.
pub fn distcheck(g: &Graph, task: Task, model: &PolicyModel, beta: f64) -> Result<DistReport> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be finite and non-negative, got {beta}")));
    }
    let p = exact_terminal_distribution(g, task, model)?;
    let q = target_distribution(g, task, beta)?;
    let mut states: Vec<&State> = p.support().into_iter().chain(q.support()).collect();
    states.sort();
    states.dedup();
    let rows = states
        .into_iter()
        .map(|x| DistRow { state: x.clone(), objective: task.objective(g, x), model: p.get(x), target: q.get(x) })
        .collect();
    Ok(DistReport { graph_id: g.id().to_string(), task, beta, tv: tv_distance(&p, &q), rows })
}

impl DistReport {
    pub fn render(&self) -> String {
        let mut out = format!("{} {} beta={} tv={:.6}\n", self.graph_id, self.task.name(), self.beta, self.tv);
        let _ = writeln!(out, "{:<16} {:>9} {:>10} {:>10}", "state", "objective", "model", "target");
        for r in &self.rows {
            let _ = writeln!(out, "{:<16} {:>9} {:>10.6} {:>10.6}", r.state.to_string(), r.objective, r.model, r.target);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gin::GinConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fresh() -> PolicyModel {
        PolicyModel::new(GinConfig { num_layers: 2, hidden_dim: 8, zero_init_heads: true }, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn fresh_model_on_p3_mis() {
        let r = distcheck(&Graph::path("p3", 3), Task::Mis, &fresh(), 0.0).unwrap();
        assert!((r.tv - 1.0 / 6.0).abs() < 1e-12, "{}", r.tv);
        assert_eq!(r.rows.len(), 2);
        assert!(r.render().contains("101"));
    }

    #[test]
    fn oversized_graph_is_size_error() {
        let r = distcheck(&Graph::path("p11", 11), Task::Mis, &fresh(), 1.0);
        assert!(matches!(r, Err(Error::Size { n: 11, .. })));
    }
}
