//! Configuration, recipes, and file output for the `rotor` binary. The
//! binary itself is a thin dispatcher over [`commands`].

pub mod commands;
pub mod config;
pub mod output;
