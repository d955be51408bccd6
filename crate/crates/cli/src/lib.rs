//! Command-line front end, HTTP API and metrics plots for the task agent.

pub mod commands;
pub mod plot;
pub mod server;
