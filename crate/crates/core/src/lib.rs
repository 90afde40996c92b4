//! Whitney and chain decompositions of rasterized domains, the
//! John–Nirenberg `JN_p` functionals (global and localized), weak-`L^p`
//! norms and the Poincaré-type quotients that go with them.
//!
//! Modules:
//! - [`dyadic`]: dyadic cubes, rasterized domains, Whitney decompositions,
//!   the boundary integral probe.
//! - [`john`]: John-constant probing, chain decompositions, shadows and
//!   verification of the chain conditions.
//! - [`jnp`]: grid functions, the dyadic partition dynamic program, local
//!   star families, distribution functions and the inequality ratios.
//! - [`sobolev`]: gradients and (weak, fractional) Poincaré quotients.
//! - [`lab`]: domain/function corpora, experiment pipelines and reports.

// Index loops over small fixed-size coordinate arrays read better here, and
// `!(a < b)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dyadic;
pub mod error;
pub mod jnp;
pub mod john;
pub mod lab;
pub mod sobolev;

pub use error::{Error, Result};

/// Version recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
