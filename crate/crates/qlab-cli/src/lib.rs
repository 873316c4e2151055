//! Experiment runner and I/O surface for the free-fermion quench laboratory:
//! config parsing, the three figure pipelines, power-law fits, certificate
//! and resilience reports, and gnuplot emission.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod oracle_check;
pub mod plot;
pub mod reports;
