use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::env::Task;
use crate::error::{Error, Result};
use crate::gfn::sample_best_of_k;
use crate::gin::PolicyModel;
use crate::graph::Graph;
use crate::oracle::{brute_force_cap, brute_force_optimum, greedy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Samples per graph for the learned policy.
    pub k: usize,
    /// Graph `i` samples from `ChaCha8Rng::seed_from_u64(seed ^ i)`.
    pub seed: u64,
    pub greedy: bool,
    pub oracle: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { k: 20, seed: 0, greedy: true, oracle: true }
    }
}

/// Per-instance result. `objective` is `None` when the oracle is skipped for
/// size, written as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub graph_id: String,
    pub method: String,
    pub objective: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    /// Rows with a value.
    pub instances: usize,
    pub mean_objective: f64,
    /// Drop (maximization) or Gap (minimization) against the oracle, on totals
    /// over the instances the oracle solved.
    pub ratio: Option<f64>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub rows: Vec<EvalRow>,
    pub summaries: Vec<MethodSummary>,
    /// Wall clock for the whole evaluation.
    pub elapsed_ms: f64,
}

/// `1 - alg/oracle` for maximization, `1 - oracle/alg` for minimization.
/// `None` when the denominator is zero.
pub fn approximation_ratio(task: Task, alg_total: f64, oracle_total: f64) -> Option<f64> {
    let (num, den) = if task.maximizes() { (alg_total, oracle_total) } else { (oracle_total, alg_total) };
    (den != 0.0).then(|| 1.0 - num / den)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t0 = Instant::now();
    let out = f()?;
    Ok((out, t0.elapsed().as_secs_f64() * 1e3))
}

fn row(g: &Graph, method: &str, objective: Option<f64>, wall_ms: f64) -> EvalRow {
    EvalRow { graph_id: g.id().to_string(), method: method.to_string(), objective, wall_ms }
}

fn eval_one(g: &Graph, i: usize, task: Task, model: Option<&PolicyModel>, opts: &EvalOptions) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::new();
    if let Some(m) = model {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ i as u64);
        let ((_, obj), ms) = timed(|| sample_best_of_k(g, task, m, opts.k, &mut rng))?;
        rows.push(row(g, "gfn", Some(obj), ms));
    }
    if opts.greedy {
        let ((_, obj), ms) = timed(|| greedy(g, task))?;
        rows.push(row(g, "greedy", Some(obj), ms));
    }
    if opts.oracle {
        if g.num_vertices() <= brute_force_cap(task) {
            let (res, ms) = timed(|| brute_force_optimum(g, task))?;
            rows.push(row(g, "oracle", Some(res.optimum), ms));
        } else {
            rows.push(row(g, "oracle", None, 0.0));
        }
    }
    Ok(rows)
}

/// Runs the learned policy (best of `k`), greedy and the exact oracle on every
/// graph. Instances run in parallel; rows come back in dataset order.
pub fn evaluate(graphs: &[Graph], task: Task, model: Option<&PolicyModel>, opts: &EvalOptions) -> Result<EvalReport> {
    if graphs.is_empty() {
        return Err(Error::Parameter("test set is empty".into()));
    }
    if opts.k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let t0 = Instant::now();
    let per_graph: Vec<Vec<EvalRow>> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| eval_one(g, i, task, model, opts))
        .collect::<Result<_>>()?;
    let elapsed_ms = t0.elapsed().as_secs_f64() * 1e3;
    let rows: Vec<EvalRow> = per_graph.into_iter().flatten().collect();
    let summaries = summarize(task, &rows);
    Ok(EvalReport { task, rows, summaries, elapsed_ms })
}

fn summarize(task: Task, rows: &[EvalRow]) -> Vec<MethodSummary> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let oracle_of = |id: &str| {
        rows.iter().find(|r| r.method == "oracle" && r.graph_id == id).and_then(|r| r.objective)
    };
    methods
        .into_iter()
        .map(|m| {
            let mine: Vec<&EvalRow> = rows.iter().filter(|r| r.method == m).collect();
            let vals: Vec<f64> = mine.iter().filter_map(|r| r.objective).collect();
            let (mut alg, mut opt, mut any) = (0.0, 0.0, false);
            for r in &mine {
                if let (Some(a), Some(o)) = (r.objective, oracle_of(&r.graph_id)) {
                    alg += a;
                    opt += o;
                    any = true;
                }
            }
            MethodSummary {
                method: m.to_string(),
                instances: vals.len(),
                mean_objective: if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 },
                ratio: if any { approximation_ratio(task, alg, opt) } else { None },
                total_ms: mine.iter().map(|r| r.wall_ms).sum(),
            }
        })
        .collect()
}

impl EvalReport {
    /// Recomputes the summaries from the rows alone.
    pub fn resummarize(&self) -> Vec<MethodSummary> {
        summarize(self.task, &self.rows)
    }

    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["graph_id", "method", "objective", "wall_ms"])?;
        for r in &self.rows {
            let obj = r.objective.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([r.graph_id.as_str(), r.method.as_str(), obj.as_str(), r.wall_ms.to_string().as_str()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Parses rows written by [`EvalReport::to_csv`].
    pub fn rows_from_csv(text: &str) -> Result<Vec<EvalRow>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.records()
            .map(|rec| {
                let rec = rec?;
                let field = |i: usize| rec.get(i).unwrap_or("");
                let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Validation(format!("bad number {s:?}")));
                Ok(EvalRow {
                    graph_id: field(0).to_string(),
                    method: field(1).to_string(),
                    objective: if field(2) == "NA" { None } else { Some(parse(field(2))?) },
                    wall_ms: parse(field(3))?,
                })
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let label = if self.task.maximizes() { "drop" } else { "gap" };
        let mut out = format!("task {}: {} instances\n", self.task.name(), self.rows.iter().filter(|r| r.method == self.rows[0].method).count());
        for s in &self.summaries {
            let ratio = s.ratio.map_or_else(|| "NA".to_string(), |r| format!("{:.2}%", 100.0 * r));
            let _ = writeln!(out, "{:<8} mean {:>10.3}  {label} {:>8}  time {:>10.1} ms", s.method, s.mean_objective, ratio, s.total_ms);
        }
        let _ = writeln!(out, "elapsed {:.1} ms", self.elapsed_ms);
        out
    }
}

/// One line of `oracle` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub graph_id: String,
    pub n: usize,
    /// `null` when the graph exceeds the brute-force cap.
    pub optimum: Option<f64>,
    pub optimizer_count: Option<u64>,
    pub greedy: f64,
}

pub fn oracle_rows(graphs: &[Graph], task: Task) -> Result<Vec<OracleRow>> {
    graphs
        .par_iter()
        .map(|g| {
            let exact = (g.num_vertices() <= brute_force_cap(task)).then(|| brute_force_optimum(g, task)).transpose()?;
            Ok(OracleRow {
                graph_id: g.id().to_string(),
                n: g.num_vertices(),
                optimum: exact.as_ref().map(|e| e.optimum),
                optimizer_count: exact.as_ref().map(|e| e.optimizer_count),
                greedy: greedy(g, task)?.1,
            })
        })
        .collect()
}
