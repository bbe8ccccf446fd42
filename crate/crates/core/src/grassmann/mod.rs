//! The generalized Grassmann manifold `{A ∈ ℝ^{n×p} : AᵀKA = I_p} / O(p)` and
//! a Riemannian conjugate-gradient minimizer over it.
//!
//! Tangent vectors are represented horizontally (`AᵀKξ = 0`) and the metric
//! is `⟨ξ, ζ⟩_K = tr(ξᵀKζ)`. Setting `K = I` recovers the ordinary Grassmann
//! manifold.

mod manifold;
mod rcg;

pub use manifold::{GeneralizedGrassmann, GrassmannPoint, TangentVector};
pub use rcg::{rcg_minimize, BetaRule, Objective, RcgOptions, RcgResult, Termination, TraceEntry};
