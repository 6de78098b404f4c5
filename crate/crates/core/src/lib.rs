//! Construction of log-statement alignment datasets from log-related issues.
//!
//! The crate is organised along the pipeline:
//!
//! - [`miner`] collects log-related issues from a Jira-style tracker,
//! - [`linker`] resolves forge references in those issues to commit bundles,
//! - [`diff`], [`java`] and [`changes`] turn bundles into before/after log changes,
//! - [`pairs`] filters the changes into prompt/chosen/rejected dataset entries,
//! - [`review`] backs the human relevance review of the exported entries,
//! - [`metrics`] scores generated log statements against ground truth.
//!
//! [`pipeline`] wires the stages together through files on disk.

pub mod changes;
pub mod config;
pub mod diff;
pub mod http;
pub mod java;
pub mod level;
pub mod linker;
pub mod metrics;
pub mod miner;
pub mod pairs;
pub mod pipeline;
pub mod review;
pub mod text;

pub use level::Level;
