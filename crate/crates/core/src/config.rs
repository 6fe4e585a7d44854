use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed deviation of total mass from one.
    pub mass: f64,
    /// Allowed deviation of mean / variance from their targets.
    pub moment: f64,
    /// Absolute tolerance of the adaptive quadrature engine.
    pub quad: f64,
    /// Raw inverted densities below `-density` are treated as errors.
    pub density: f64,
    /// Absolute tolerance on v_t(u).
    pub v: f64,
    /// Residual tolerance of the subordination fixed point.
    pub fixed_point: f64,
    pub chi: f64,
    pub gap: f64,
    /// Mass allowed outside the support-containment interval.
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass: 1e-8,
            moment: 1e-8,
            quad: 1e-10,
            density: 1e-8,
            v: 1e-12,
            fixed_point: 1e-13,
            chi: 1e-3,
            gap: 1e-6,
            support: 1e-6,
        }
    }
}
