//! Configuration files, command-line driver and result writers for the
//! `uavsense-core` simulator.

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;
pub mod selftest;
