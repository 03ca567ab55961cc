#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Experiment runner and acceptance suite for the `krein` library.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod oracle;
pub mod report;
pub mod spec;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod experiments_chapter {}
