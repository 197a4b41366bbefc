//! Benchmark harness, problem files and CLI plumbing around `cpc-core`.

pub mod bench;
pub mod error;
pub mod generate;
pub mod io;

pub use bench::{execute, percent_diff, run_benchmark, BenchConfig, BenchRecord, BenchTable, OutputFormat};
pub use error::{HarnessError, Result};
pub use generate::{generate_instance, random_orthonormal, replication_rng};
pub use io::{load_instance, save_instance};
