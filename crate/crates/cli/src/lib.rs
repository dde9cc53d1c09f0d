//! File formats and batch commands for the `parea` binary.

pub mod commands;
pub mod io;
pub mod problem_file;

pub use commands::{cmd_barrier, cmd_certify, cmd_levelsets, cmd_oracle, cmd_solve, exit_code, RunOptions, Status};
pub use problem_file::{load_problem, parse_problem, LoadedProblem};
