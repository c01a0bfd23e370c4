//! File loaders, the HTTP service and the command-line interface of the
//! trip planner. The planning itself lives in `tripplan-core`.

pub mod cli;
pub mod constraint;
pub mod error;
pub mod io;
pub mod plan;
pub mod service;
pub mod wire;
