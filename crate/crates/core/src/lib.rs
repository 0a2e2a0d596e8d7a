//! Graph-conditional GFlowNets for combinatorial optimization.
//!
//! Solutions to maximum independent set, maximum clique, minimum dominating
//! set and maximum cut are built one vertex at a time by a learned policy
//! whose terminal distribution is trained to be proportional to
//! `exp(-beta * energy)`. The crate contains the environments, a small
//! reverse-mode autodiff engine with a GIN model, the balance losses and
//! training loop, exact oracles for small graphs, and an evaluation harness.

pub mod adam;
pub mod autodiff;
pub mod checkpoint;
pub mod env;
pub mod error;
pub mod generate;
pub mod gfn;
pub mod gin;
pub mod graph;
pub mod harness;
pub mod oracle;

pub use env::{Label, State, StepResult, Task};
pub use error::{Error, Result};
pub use gin::{GinConfig, PolicyModel};
pub use graph::Graph;
