//! Asymmetric spherical locality-sensitive filters for near-neighbor search
//! on the unit sphere.
//!
//! The crate builds up in layers:
//!
//! * [`sphere_geometry`] — caps, wedges, their volumes (asymptotic exponents,
//!   exact finite-dimension quadrature, Monte Carlo), and sphere samplers.
//! * [`planner`] — closed-form query/update tradeoff exponents for sparse,
//!   dense, and critically dense regimes, plus a concrete parameter planner
//!   that turns `(n, d, theta, beta, kappa)` into cap thresholds and a
//!   filter-count target.
//! * [`product_code`] — the structured family of filter axes: a random
//!   product code whose `t = b^m` codewords are concatenations of `m`
//!   independently sampled blocks.
//! * [`decoder`] — enumerates, in time roughly proportional to output size,
//!   the codewords whose inner product with a target lands in an interval.
//! * [`filter_index`] — the mutable index: bucket map from codewords to
//!   point ids with insert/delete/query, threshold-probing queries,
//!   persistence, and self-audit.
//! * [`instance_gen`] — reproducible random instances (uniform background
//!   plus an optional planted near neighbor) and density-reduction
//!   subsampling.
//! * [`oracle`] — brute-force references: exact linear-scan nearest neighbor
//!   and exhaustive decode, used by tests and benchmarks.
//! * [`cli`] — configuration, vector-file formats, and the experiment
//!   drivers behind the `sphf` binary.

pub mod cli;
pub mod decoder;
pub mod error;
pub mod filter_index;
pub mod instance_gen;
pub mod oracle;
pub mod planner;
pub mod product_code;
pub mod sphere_geometry;

pub use error::{Error, Result};
