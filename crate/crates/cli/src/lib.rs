//! Operational shell around `adoe-core`: a file-per-campaign store, the
//! HTTP API used by the console, and the `adoe` command line.

pub mod analysis;
pub mod api;
pub mod commands;
pub mod store;
