//! Simulation, constant registry, validation suites and the command-line
//! front end for `dstlab-core`.

pub mod acceptance;
pub mod cli;
pub mod montecarlo;
pub mod registry;
pub mod validate;
