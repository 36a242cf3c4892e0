//! Instance files, generators, algorithm dispatch and batch runs.

pub mod bench;
pub mod dispatch;
pub mod format;
pub mod generate;

pub use bench::{bench, write_csv, BenchRow};
pub use dispatch::{dispatch, Algorithm, DispatchOptions, Outcome, Problem, SolveReport};
pub use format::{parse_assignment, parse_instance, serialize_instance};
pub use generate::{gen_binpacking, gen_random, BinPackingVariant, GenMode, GenParams};
