//! Batch driver: JSON configs in, CSV series, raw snapshots and a checksummed
//! manifest out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
