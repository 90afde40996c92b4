//! The `JN_p` functionals on raster functions.
//!
//! [`jn_global_dyadic`] maximizes `sum |Q| (avg_Q |f - f_Q|)^p` over dyadic
//! partitions, an exact optimum within that family and hence a lower bound
//! for the supremum over arbitrary cube partitions. [`jn_local`] evaluates
//! families of Whitney stars that fit in the domain after dilation. Weak
//! norms are exact on the raster since the functions are simple.

mod dp;
mod function;
mod local;
mod ratios;
mod weak;

pub use dp::{
    jn_global_dyadic, mean_oscillation, DPResult, FamilyKind, JNParams, DEFAULT_LAMBDA,
    DEFAULT_OVERLAP_BOUND,
};
pub use function::GridFunction;
pub use local::jn_local;
pub use ratios::{
    lemma_chain_bound, local_to_global_ratio, weak_type_ratio, ChainBoundReport, RatioReport,
};
pub use weak::{distribution, weak_norm_opt_c, DistributionProfile, WeakOptimum};
