//! Command line and HTTP front ends for the trivine engine.

pub mod cli;
pub mod engine;
pub mod schema;
pub mod service;
