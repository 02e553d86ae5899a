//! Sample-partitioned comparison sorting.
//!
//! The library sorts flat buffers of fixed-length byte-string keys by
//! splitting the input into `p` contiguous sequences, sorting each with a
//! pluggable base sort, choosing `p - 1` splitters from an oversampled
//! key sample (regular/deterministic or random), splitting every sorted
//! sequence around the splitters, and `p`-way merging the resulting
//! buckets. A multi-core variant distributes the per-sequence base sorts
//! over a worker pool.
//!
//! Entry points:
//! - [`pipeline::sq_det`] / [`pipeline::sq_ran`] — sequential templates;
//! - [`parallel::mc_sort`] — multi-core wrapper around either template;
//! - [`bench`] — the benchmark/verification harness behind the `ovsort` CLI.

pub mod bench;
pub mod core_sort;
mod error;
pub mod keys;
pub mod parallel;
pub mod partition;
pub mod pipeline;

pub use error::{Error, Result};
