//! Deterministic numerical kernels: normal distribution functions, the
//! bivariate normal CDF, Gauss–Legendre quadrature and bracketed root finding.
//!
//! Everything here is a pure function of its inputs.

mod bvn;
pub(crate) mod normal;
mod quadrature;
mod root;

pub use bvn::{bvn_cdf, bvn_cdf_conditional, BVN_TAIL, BVN_TOL};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use quadrature::{
    gauss_legendre, graded_gauss_legendre, integrate, integrate_01, QuadratureRule, DEFAULT_ORDER,
    PARTIAL_TOL,
};
pub use root::{find_root, RootBracket, MAX_ROOT_ITERATIONS};

/// Probabilities are kept inside `[PROB_EPS, 1 - PROB_EPS]` before they reach
/// a logarithm or a quantile function.
pub const PROB_EPS: f64 = 1e-12;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}
