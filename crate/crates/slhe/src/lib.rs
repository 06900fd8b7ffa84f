//! File formats, configuration, reporting and the command-line front end for
//! [`slhe_core`].

pub mod bench;
pub mod cli;
pub mod config;
pub mod pnm;
pub mod report;

pub use cli::run_cli;
pub use config::{parse_config, RunConfig};
pub use pnm::{decode_pnm, encode_pnm};
