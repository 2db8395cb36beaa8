//! The `tablescene` command line: one subcommand per benchmark stage, a
//! run manifest for replay, and the overlay asset service.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod serve;

pub use args::Cli;
pub use commands::execute;
