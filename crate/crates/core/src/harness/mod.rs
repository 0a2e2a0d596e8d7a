//! File formats and experiment orchestration behind the `gfnco` binary.

mod dataset;
mod distcheck;
mod eval;
mod settings;

pub use dataset::{parse_dataset, read_dataset, to_jsonl, write_dataset};
pub use distcheck::{distcheck, DistReport, DistRow};
pub use eval::{approximation_ratio, evaluate, oracle_rows, EvalOptions, EvalReport, EvalRow, MethodSummary, OracleRow};
pub use settings::{parse_key_values, read_log, write_log, TrainSettings, LOG_HEADER};
