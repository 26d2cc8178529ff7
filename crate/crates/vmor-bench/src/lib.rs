//! Driver for the vmor solvers: experiment configs, problem descriptors, run
//! summaries, the `vmor` command line and the acceptance suite.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod problem;
pub mod run;
pub mod summary;
