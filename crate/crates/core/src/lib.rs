pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
mod framed;
pub mod ingest;
pub mod rdp;
pub mod series;
pub mod store;
pub mod synth;
pub mod tuner;
