use serde::{Deserialize, Serialize};

/// Numerical tolerances used throughout the crate.
///
/// Every threshold consulted by a solver or a check lives here, and a
/// scenario file can override any of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tie window for selecting maximal coordinates of an ℓ∞ norming functional.
    pub linf_tie: f64,
    /// Operators with smallest singular value at most `injectivity * ‖Q‖` are rejected.
    pub injectivity: f64,
    /// Relative accuracy of the ℓ² operator-norm power iteration.
    pub power_iteration: f64,
    pub power_iteration_cap: usize,
    /// Relative width at which the multiplier bisection stops.
    pub root_find: f64,
    /// Doublings allowed while bracketing the multiplier.
    pub bracket_cap: usize,
    /// Tolerance of every certificate check (scaled as documented at each check).
    pub certificate: f64,
    /// Relative tolerance of the identity `‖Q*ⁿf‖ = c/d`.
    pub norm_identity: f64,
    pub lp_feasibility: f64,
    pub lp_pivot: f64,
    pub lp_pivot_cap: usize,
    /// Relative commutation residual accepted for commutant samples.
    pub commutation: f64,
    /// Pivot floor for the α decomposition denominator (relative to scale).
    pub decomposition: f64,
    /// Slack allowed in `g(x₀) ≥ ε` for the limit functional.
    pub limit_level: f64,
    /// Maximal pairwise dual-norm distance inside the functional cluster.
    pub cluster_diameter: f64,
    /// Relative singular-value cutoff of the Krylov basis.
    pub rank: f64,
    /// Accepted invariance residual of the candidate subspace under sampled commutant elements.
    pub invariance: f64,
    /// Retry cap for the λ-relaxation.
    pub relax_retries: usize,
    /// Samples per side for the sampled separation check.
    pub separation_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            linf_tie: 1e-12,
            injectivity: 1e-12,
            power_iteration: 1e-10,
            power_iteration_cap: 10_000,
            root_find: 1e-12,
            bracket_cap: 2_000,
            certificate: 1e-9,
            norm_identity: 1e-8,
            lp_feasibility: 1e-9,
            lp_pivot: 1e-11,
            lp_pivot_cap: 100_000,
            commutation: 1e-10,
            decomposition: 1e-14,
            limit_level: 1e-8,
            cluster_diameter: 0.1,
            rank: 1e-10,
            invariance: 1e-6,
            relax_retries: 64,
            separation_samples: 1_000,
        }
    }
}
