//! File formats, parallel drivers, validation suites and the command line
//! for `rwre-core`.

pub mod cli;
pub mod config;
pub mod envio;
pub mod grid;
pub mod output;
pub mod run;
pub mod suites;
