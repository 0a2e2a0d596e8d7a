//! Seeded random-graph families: Barabási–Albert, Erdős–Rényi and an RB-style
//! disjoint-cliques construction.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// Preferential attachment with `m` edges per new vertex.
    Ba { m: usize },
    /// Independent edges with probability `p`.
    Er { p: f64 },
    /// Disjoint cliques plus random inter-group edges. Group count and size are
    /// drawn from inclusive ranges; the vertex-count range of [`GenSpec`] is
    /// ignored for this family.
    Rb {
        groups: (usize, usize),
        group_size: (usize, usize),
        rounds: usize,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ba { .. } => "ba",
            Family::Er { .. } => "er",
            Family::Rb { .. } => "rb",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub n_min: usize,
    pub n_max: usize,
    pub count: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Parameter("count must be at least 1".into()));
        }
        match self.family {
            Family::Ba { m } => {
                check_range(self.n_min, self.n_max, "vertex count")?;
                if m == 0 || m >= self.n_min {
                    return Err(Error::Parameter(format!(
                        "BA attach count m={m} must satisfy 1 <= m < n_min={}",
                        self.n_min
                    )));
                }
            }
            Family::Er { p } => {
                check_range(self.n_min, self.n_max, "vertex count")?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Parameter(format!("ER edge probability {p} outside [0, 1]")));
                }
            }
            Family::Rb { groups, group_size, .. } => {
                check_range(groups.0, groups.1, "group count")?;
                check_range(group_size.0, group_size.1, "group size")?;
                if groups.0 < 2 || group_size.0 < 2 {
                    return Err(Error::Parameter("RB needs at least 2 groups of size at least 2".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_range(lo: usize, hi: usize, what: &str) -> Result<()> {
    if lo > hi {
        return Err(Error::Parameter(format!("{what} range {lo}..{hi} is empty")));
    }
    Ok(())
}

/// Barabási–Albert graph: `m` isolated seed vertices, then every new vertex
/// attaches to `m` distinct existing vertices drawn proportionally to degree.
/// The first attaching vertex connects to all seeds. Exactly `(n - m) * m` edges.
pub fn gen_ba<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    if m == 0 || m >= n {
        return Err(Error::Parameter(format!("BA requires 1 <= m < n (got m={m}, n={n})")));
    }
    let mut edges = Vec::with_capacity((n - m) * m);
    // Every vertex appears once per incident edge endpoint.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * (n - m) * m);
    let mut targets: Vec<usize> = (0..m).collect();
    for source in m..n {
        for &t in &targets {
            edges.push((t, source));
            endpoints.push(t);
            endpoints.push(source);
        }
        targets.clear();
        if source + 1 < n {
            while targets.len() < m {
                let t = *endpoints.choose(rng).expect("non-empty after first round");
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
        }
    }
    Graph::new(format!("ba-{n}-{m}"), n, &edges)
}

/// Erdős–Rényi G(n, p).
pub fn gen_er<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("ER edge probability {p} outside [0, 1]")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(format!("er-{n}"), n, &edges)
}

/// `groups` disjoint cliques of `group_size` vertices; each of
/// `inter_edge_rounds` rounds picks two distinct groups and adds one missing
/// edge between them, chosen uniformly. Independence number is at most `groups`.
pub fn gen_rb<R: Rng + ?Sized>(
    groups: usize,
    group_size: usize,
    inter_edge_rounds: usize,
    rng: &mut R,
) -> Result<Graph> {
    if groups < 2 || group_size < 2 {
        return Err(Error::Parameter("RB needs at least 2 groups of size at least 2".into()));
    }
    let n = groups * group_size;
    let mut set = BTreeSet::new();
    for g in 0..groups {
        let base = g * group_size;
        for i in 0..group_size {
            for j in i + 1..group_size {
                set.insert((base + i, base + j));
            }
        }
    }
    for _ in 0..inter_edge_rounds {
        let a = rng.random_range(0..groups);
        let mut b = rng.random_range(0..groups - 1);
        if b >= a {
            b += 1;
        }
        let (a, b) = (a.min(b), a.max(b));
        let missing: Vec<(usize, usize)> = (0..group_size)
            .flat_map(|i| (0..group_size).map(move |j| (a * group_size + i, b * group_size + j)))
            .filter(|e| !set.contains(e))
            .collect();
        if let Some(&e) = missing.choose(rng) {
            set.insert(e);
        }
    }
    let edges: Vec<_> = set.into_iter().collect();
    Graph::new(format!("rb-{groups}x{group_size}"), n, &edges)
}

/// Generates `spec.count` graphs. Instance `i` uses its own stream seeded with
/// `spec.seed ^ i`, so the output is deterministic and instances are independent.
pub fn gen_dataset(spec: &GenSpec) -> Result<Vec<Graph>> {
    spec.validate()?;
    (0..spec.count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ i as u64);
            let g = match spec.family {
                Family::Ba { m } => {
                    let n = rng.random_range(spec.n_min..=spec.n_max);
                    gen_ba(n, m, &mut rng)?
                }
                Family::Er { p } => {
                    let n = rng.random_range(spec.n_min..=spec.n_max);
                    gen_er(n, p, &mut rng)?
                }
                Family::Rb { groups, group_size, rounds } => {
                    let k = rng.random_range(groups.0..=groups.1);
                    let s = rng.random_range(group_size.0..=group_size.1);
                    gen_rb(k, s, rounds, &mut rng)?
                }
            };
            Ok(g.with_id(format!("{}-{}-{:05}", spec.family.name(), spec.seed, i)))
        })
        .collect()
}
