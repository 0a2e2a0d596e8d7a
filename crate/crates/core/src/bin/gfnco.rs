use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use gfnco::checkpoint::Checkpoint;
use gfnco::generate::{gen_dataset, Family, GenSpec};
use gfnco::gfn::Trainer;
use gfnco::harness::{self, EvalOptions, TrainSettings};
use gfnco::{Graph, Task};

#[derive(Parser)]
#[command(name = "gfnco", version, about = "GFlowNet solvers for graph combinatorial optimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a JSON-lines dataset of random graphs.
    Gen(GenArgs),
    /// Train a policy on a dataset and write a checkpoint and log.
    Train(TrainArgs),
    /// Best-of-k evaluation against greedy and the exact oracle.
    Eval(EvalArgs),
    /// Exact optimum, optimizer count and greedy value per graph.
    Oracle(OracleArgs),
    /// Exact sampler distribution versus the reward-proportional target.
    Distcheck(DistArgs),
}

/// `lo..hi` (inclusive) or a single value.
fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid range {s:?}"));
    match s.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b.trim_start_matches('='))?)),
        None => num(s).map(|v| (v, v)),
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = ["ba", "er", "rb"])]
    family: String,
    /// Vertex count range, e.g. 200..300 (BA and ER).
    #[arg(long, value_parser = parse_range)]
    n: Option<(usize, usize)>,
    /// Edges per new vertex (BA).
    #[arg(long)]
    m: Option<usize>,
    /// Edge probability (ER).
    #[arg(long)]
    p: Option<f64>,
    /// Group count range (RB).
    #[arg(long, value_parser = parse_range)]
    groups: Option<(usize, usize)>,
    /// Group size range (RB).
    #[arg(long, value_parser = parse_range)]
    group_size: Option<(usize, usize)>,
    /// Inter-group edge rounds (RB).
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// key=value file; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long, conflicts_with = "trajectory")]
    transition: bool,
    #[arg(long)]
    trajectory: bool,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    anneal_frac: Option<f64>,
    /// Ramp shape: beta (linear in beta) or temperature (linear in 1/beta).
    #[arg(long)]
    anneal: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Stop after this many optimizer updates.
    #[arg(long)]
    updates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    graphs_per_round: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// Write 0 in the wall_ms column so logs are reproducible.
    #[arg(long)]
    no_wall_time: bool,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV path.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Without a checkpoint only the baselines run.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Defaults to the checkpoint's task.
    #[arg(long)]
    task: Option<String>,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    greedy: bool,
    #[arg(long)]
    oracle: bool,
    /// Per-instance CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    task: String,
    /// JSON-lines output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Graphs to check, each with at most 10 vertices.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    task: Option<String>,
    /// Defaults to the checkpoint's beta.
    #[arg(long)]
    beta: Option<f64>,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load_data(path: &Path) -> anyhow::Result<Vec<Graph>> {
    harness::read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn load_checkpoint(path: &Path) -> anyhow::Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("reading checkpoint {}", path.display()))
}

/// `--task` if given, else the checkpoint's; the two must agree.
fn resolve_task(flag: Option<&str>, ck: Option<&Checkpoint>) -> anyhow::Result<Task> {
    let flag: Option<Task> = flag.map(str::parse).transpose()?;
    match (flag, ck.and_then(|c| c.task)) {
        (Some(a), Some(b)) if a != b => bail!("checkpoint was trained for {} but --task is {}", b.name(), a.name()),
        (Some(t), _) | (None, Some(t)) => Ok(t),
        (None, None) => bail!("--task is required"),
    }
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let need = |what: &str| anyhow::anyhow!("--{what} is required for --family {}", a.family);
    let (n_min, n_max) = match a.family.as_str() {
        "rb" => (0, 0),
        _ => a.n.ok_or_else(|| need("n"))?,
    };
    let family = match a.family.as_str() {
        "ba" => Family::Ba { m: a.m.ok_or_else(|| need("m"))? },
        "er" => Family::Er { p: a.p.ok_or_else(|| need("p"))? },
        _ => Family::Rb {
            groups: a.groups.ok_or_else(|| need("groups"))?,
            group_size: a.group_size.ok_or_else(|| need("group-size"))?,
            rounds: a.rounds.unwrap_or(0),
        },
    };
    let graphs = gen_dataset(&GenSpec { family, n_min, n_max, count: a.count, seed: a.seed })?;
    harness::write_dataset(&a.out, &graphs).with_context(|| format!("writing {}", a.out.display()))?;
    emit(&format!("wrote {} graphs (seed {}) to {}\n", graphs.len(), a.seed, a.out.display()))
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let mut settings = TrainSettings::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let kv = harness::parse_key_values(&text)?;
        settings.apply_all(kv.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    let mut put = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k, v));
        }
    };
    put("task", a.task.clone());
    put("loss", a.loss.clone());
    put("transition", a.transition.then(|| "true".into()));
    put("trajectory", a.trajectory.then(|| "true".into()));
    put("beta", a.beta.map(|v| v.to_string()));
    put("anneal-frac", a.anneal_frac.map(|v| v.to_string()));
    put("anneal", a.anneal.clone());
    put("eps", a.eps.map(|v| v.to_string()));
    put("batch", a.batch.map(|v| v.to_string()));
    put("epochs", a.epochs.map(|v| v.to_string()));
    put("lr", a.lr.map(|v| v.to_string()));
    put("updates", a.updates.map(|v| v.to_string()));
    put("seed", a.seed.map(|v| v.to_string()));
    put("graphs-per-round", a.graphs_per_round.map(|v| v.to_string()));
    put("hidden", a.hidden.map(|v| v.to_string()));
    put("layers", a.layers.map(|v| v.to_string()));
    put("wall-time", a.no_wall_time.then(|| "false".into()));
    settings.apply_all(flags.iter().map(|(k, v)| (*k, v.as_str())))?;

    let task = settings.task.context("--task is required (flag or config file)")?;
    let cfg = settings.train_config()?;
    let data = load_data(&a.data)?;
    if data.is_empty() {
        bail!("dataset {} is empty", a.data.display());
    }
    if data.iter().all(|g| task.is_terminal(&task.initial_state(g))) {
        bail!("no graph in {} has a decision to make for task {}", a.data.display(), task.name());
    }
    let mut trainer = Trainer::new(task, cfg.clone())?;
    trainer.train(&data, |_| std::ops::ControlFlow::Continue(()))?;
    let beta = trainer.beta();
    let out = trainer.into_outcome();
    Checkpoint::from_model(&out.model, Some(task), Some(beta), Some(&out.optimizer))
        .save(&a.out)
        .with_context(|| format!("writing checkpoint {}", a.out.display()))?;
    if let Some(log) = &a.log {
        harness::write_log(log, &out.log).with_context(|| format!("writing log {}", log.display()))?;
    }
    emit(&match out.log.last() {
        Some(last) => format!(
            "{} updates ({}), final beta {}, final mean objective {:.4}\n",
            out.log.len(),
            cfg.variant,
            last.beta,
            last.mean_objective
        ),
        None => format!("0 updates ({})\n", cfg.variant),
    })
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let ck = a.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    let task = resolve_task(a.task.as_deref(), ck.as_ref())?;
    let model = ck.as_ref().map(Checkpoint::model).transpose()?;
    if model.is_none() && !a.greedy && !a.oracle {
        bail!("nothing to evaluate: pass --checkpoint, --greedy or --oracle");
    }
    let data = load_data(&a.data)?;
    let opts = EvalOptions { k: a.k, seed: a.seed, greedy: a.greedy, oracle: a.oracle };
    let report = harness::evaluate(&data, task, model.as_ref(), &opts)?;
    if let Some(out) = &a.out {
        report.write_csv(out).with_context(|| format!("writing {}", out.display()))?;
    }
    emit(&report.render())
}

fn oracle(a: OracleArgs) -> anyhow::Result<()> {
    let task: Task = a.task.parse()?;
    let data = load_data(&a.data)?;
    let mut text = String::new();
    for row in harness::oracle_rows(&data, task)? {
        text.push_str(&serde_json::to_string(&row)?);
        text.push('\n');
    }
    match &a.out {
        Some(out) => fs::write(out, text).with_context(|| format!("writing {}", out.display()))?,
        None => emit(&text)?,
    }
    Ok(())
}

fn distcheck(a: DistArgs) -> anyhow::Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let task = resolve_task(a.task.as_deref(), Some(&ck))?;
    let beta = a.beta.or(ck.beta).context("--beta is required (checkpoint has none)")?;
    let model = ck.model()?;
    for g in load_data(&a.data)? {
        emit(&harness::distcheck(&g, task, &model, beta)?.render())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Train(a) => train(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Oracle(a) => oracle(a),
        Cmd::Distcheck(a) => distcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already embed their source's message.
            let mut parts: Vec<String> = Vec::new();
            for cause in e.chain() {
                let msg = cause.to_string().replace('\n', " ");
                if !parts.last().is_some_and(|p| p.ends_with(&msg)) {
                    parts.push(msg);
                }
            }
            eprintln!("error: {}", parts.join(": "));
            ExitCode::FAILURE
        }
    }
}
