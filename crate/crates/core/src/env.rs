//! Sequential solution construction for MIS, MC, MDS and MaxCut.
//!
//! A state assigns every vertex one of three labels. Actions pick a `Void`
//! vertex; the deterministic transition then forces further labels so that
//! every reachable state extends to a feasible solution. Labels never revert.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Vertex label. The discriminants double as embedding indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Label {
    Zero = 0,
    One = 1,
    Void = 2,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Label::Zero => '0',
            Label::One => '1',
            Label::Void => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    labels: Vec<Label>,
    counts: [usize; 3],
}

impl State {
    pub fn all_void(n: usize) -> Self {
        State { labels: vec![Label::Void; n], counts: [0, 0, n] }
    }

    pub fn from_labels(labels: Vec<Label>) -> Self {
        let mut counts = [0; 3];
        for l in &labels {
            counts[l.index()] += 1;
        }
        State { labels, counts }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, l: Label) -> usize {
        self.counts[l.index()]
    }

    /// No `Void` labels remain.
    pub fn is_complete(&self) -> bool {
        self.counts[Label::Void.index()] == 0
    }

    fn set(&mut self, v: usize, l: Label) {
        let old = self.labels[v];
        self.counts[old.index()] -= 1;
        self.counts[l.index()] += 1;
        self.labels[v] = l;
    }

    /// Vertices labelled `One`, ascending.
    pub fn ones(&self) -> Vec<usize> {
        self.vertices_with(Label::One)
    }

    pub fn vertices_with(&self, l: Label) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == l).collect()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| match c {
                '0' => Ok(Label::Zero),
                '1' => Ok(Label::One),
                '-' => Ok(Label::Void),
                other => Err(Error::Parameter(format!("invalid state symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(State::from_labels(labels))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mis,
    Mc,
    Mds,
    Mcut,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Mis, Task::Mc, Task::Mds, Task::Mcut];

    pub fn name(self) -> &'static str {
        match self {
            Task::Mis => "mis",
            Task::Mc => "mc",
            Task::Mds => "mds",
            Task::Mcut => "mcut",
        }
    }

    /// True for MIS, MC and MaxCut; MDS minimizes.
    pub fn maximizes(self) -> bool {
        !matches!(self, Task::Mds)
    }

    /// Label written on the chosen vertex by an action.
    pub fn action_label(self) -> Label {
        match self {
            Task::Mds => Label::Zero,
            _ => Label::One,
        }
    }

    /// Whether `a` is a strictly better objective value than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.maximizes() {
            a > b
        } else {
            a < b
        }
    }

    pub fn initial_state(self, g: &Graph) -> State {
        let s = State::all_void(g.num_vertices());
        if self == Task::Mds && !s.is_empty() && !self.action_mask(g, &s).contains(&true) {
            // Edgeless graph: nothing can ever leave the dominating set.
            return State::from_labels(vec![Label::One; g.num_vertices()]);
        }
        s
    }

    pub fn is_terminal(self, s: &State) -> bool {
        s.is_complete()
    }

    pub fn action_mask(self, g: &Graph, s: &State) -> Vec<bool> {
        match self {
            Task::Mds => {
                let dom = domination_counts(g, s);
                (0..s.len())
                    .map(|v| s.label(v) == Label::Void && removable(g, &dom, v))
                    .collect()
            }
            _ => s.labels().iter().map(|&l| l == Label::Void).collect(),
        }
    }

    pub fn step(self, g: &Graph, s: &State, v: usize) -> Result<StepResult> {
        if v >= s.len() {
            return Err(Error::Index { index: v, n: s.len() });
        }
        if s.label(v) != Label::Void {
            return Err(Error::Contract(format!("vertex {v} is not void in state {s}")));
        }
        let mut next = s.clone();
        let mut forced = Vec::new();
        match self {
            Task::Mis => {
                next.set(v, Label::One);
                for &u in g.neighbors(v) {
                    if next.label(u) == Label::Void {
                        next.set(u, Label::Zero);
                        forced.push((u, Label::Zero));
                    }
                }
            }
            Task::Mc => {
                // Void vertices are adjacent to every earlier One, so only
                // adjacency to the new member needs checking.
                next.set(v, Label::One);
                for u in 0..next.len() {
                    if next.label(u) == Label::Void && !g.adjacent(u, v) {
                        next.set(u, Label::Zero);
                        forced.push((u, Label::Zero));
                    }
                }
            }
            Task::Mds => {
                let mut dom = domination_counts(g, s);
                if !removable(g, &dom, v) {
                    return Err(Error::Contract(format!(
                        "removing vertex {v} from {s} breaks domination"
                    )));
                }
                next.set(v, Label::Zero);
                dom[v] -= 1;
                for &w in g.neighbors(v) {
                    dom[w] -= 1;
                }
                for u in 0..next.len() {
                    if next.label(u) == Label::Void && !removable(g, &dom, u) {
                        next.set(u, Label::One);
                        forced.push((u, Label::One));
                    }
                }
                if !next.is_complete() && !self.action_mask(g, &next).contains(&true) {
                    for u in 0..next.len() {
                        if next.label(u) == Label::Void {
                            next.set(u, Label::One);
                            forced.push((u, Label::One));
                        }
                    }
                }
            }
            Task::Mcut => {
                next.set(v, Label::One);
                for u in 0..next.len() {
                    if next.label(u) == Label::Void && cut_gain(g, &next, u) < 0 {
                        next.set(u, Label::Zero);
                        forced.push((u, Label::Zero));
                    }
                }
            }
        }
        let terminal = next.is_complete();
        Ok(StepResult { next_state: next, action: v, newly_forced: forced, terminal })
    }

    /// Applies a recorded action and forced-label delta without re-running the
    /// transition rule.
    pub fn apply_delta(self, s: &State, action: usize, forced: &[(usize, Label)]) -> State {
        let mut next = s.clone();
        next.set(action, self.action_label());
        for &(u, l) in forced {
            next.set(u, l);
        }
        next
    }

    /// Positive objective of a (partial) solution: set size for MIS/MC/MDS,
    /// cut size for MaxCut (void counted on the non-One side).
    pub fn objective(self, g: &Graph, s: &State) -> f64 {
        match self {
            Task::Mis | Task::Mc | Task::Mds => s.count(Label::One) as f64,
            Task::Mcut => cut_size(g, s) as f64,
        }
    }

    /// Energy of a complete state: `-objective` for maximization tasks and
    /// `+objective` for MDS.
    pub fn terminal_energy(self, g: &Graph, x: &State) -> Result<f64> {
        if !x.is_complete() {
            return Err(Error::Contract(format!("terminal energy requested for incomplete state {x}")));
        }
        Ok(self.intermediate_energy(g, x))
    }

    /// Energy continuation on every state; equals the terminal energy on
    /// complete states.
    pub fn intermediate_energy(self, g: &Graph, s: &State) -> f64 {
        let obj = self.objective(g, s);
        if self.maximizes() {
            0.0 - obj
        } else {
            obj
        }
    }

    /// Number of vertices carrying the action label; the uniform backward
    /// policy assigns each of them probability `1 / count`.
    pub fn num_backward_choices(self, s_next: &State) -> Result<usize> {
        let k = s_next.count(self.action_label());
        if k == 0 {
            return Err(Error::Contract(format!("state {s_next} has no parent")));
        }
        Ok(k)
    }

    pub fn enumerate_children(self, g: &Graph, s: &State) -> Result<Vec<StepResult>> {
        if self.is_terminal(s) {
            return Err(Error::Contract(format!("terminal state {s} has no children")));
        }
        self.action_mask(g, s)
            .iter()
            .enumerate()
            .filter(|(_, &ok)| ok)
            .map(|(v, _)| self.step(g, s, v))
            .collect()
    }

    /// Checks the per-task invariant every reachable state satisfies. On
    /// complete states this also checks maximality: MIS/MC order-maximal,
    /// MaxCut locally maximal.
    pub fn check_feasible(self, g: &Graph, s: &State) -> std::result::Result<(), String> {
        let n = s.len();
        let ones = s.ones();
        match self {
            Task::Mis => {
                for &v in &ones {
                    if let Some(&u) = g.neighbors(v).iter().find(|&&u| s.label(u) == Label::One) {
                        return Err(format!("adjacent ones {u} and {v}"));
                    }
                }
                for v in s.vertices_with(Label::Zero) {
                    if !g.neighbors(v).iter().any(|&u| s.label(u) == Label::One) {
                        return Err(format!("zero vertex {v} has no one neighbor"));
                    }
                }
            }
            Task::Mc => {
                for (i, &a) in ones.iter().enumerate() {
                    for &b in &ones[i + 1..] {
                        if !g.adjacent(a, b) {
                            return Err(format!("ones {a} and {b} not adjacent"));
                        }
                    }
                }
                for v in 0..n {
                    let joined_all = ones.iter().all(|&u| g.adjacent(u, v));
                    match s.label(v) {
                        Label::Void if !joined_all => return Err(format!("void {v} cannot join clique")),
                        Label::Zero if joined_all => return Err(format!("zero {v} could join clique")),
                        _ => {}
                    }
                }
            }
            Task::Mds => {
                let dom = domination_counts(g, s);
                if let Some(v) = (0..n).find(|&v| dom[v] == 0) {
                    return Err(format!("vertex {v} undominated"));
                }
            }
            Task::Mcut => {
                if s.is_complete() {
                    for v in s.vertices_with(Label::Zero) {
                        if cut_gain(g, s, v) > 0 {
                            return Err(format!("flipping {v} increases the cut"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mis" => Ok(Task::Mis),
            "mc" => Ok(Task::Mc),
            "mds" => Ok(Task::Mds),
            "mcut" | "maxcut" => Ok(Task::Mcut),
            other => Err(Error::Parameter(format!("unknown task {other:?}"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub next_state: State,
    pub action: usize,
    /// Labels set by the transition rule, in vertex order.
    pub newly_forced: Vec<(usize, Label)>,
    pub terminal: bool,
}

/// `count[w]` = number of non-Zero vertices in the closed neighborhood of `w`.
fn domination_counts(g: &Graph, s: &State) -> Vec<usize> {
    (0..s.len())
        .map(|w| {
            let own = usize::from(s.label(w) != Label::Zero);
            own + g.neighbors(w).iter().filter(|&&u| s.label(u) != Label::Zero).count()
        })
        .collect()
}

/// Dropping `u` keeps the set dominating iff every vertex in its closed
/// neighborhood stays covered by someone else.
fn removable(g: &Graph, dom: &[usize], u: usize) -> bool {
    dom[u] >= 2 && g.neighbors(u).iter().all(|&w| dom[w] >= 2)
}

/// Change in cut size (One vs non-One) if `u` joined the One side.
fn cut_gain(g: &Graph, s: &State, u: usize) -> i64 {
    let nb = g.neighbors(u);
    let ones = nb.iter().filter(|&&w| s.label(w) == Label::One).count() as i64;
    nb.len() as i64 - 2 * ones
}

fn cut_size(g: &Graph, s: &State) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| (s.label(u) == Label::One) != (s.label(v) == Label::One))
        .count()
}
