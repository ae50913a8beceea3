//! Numerical tolerances shared by every module.
//!
//! All thresholds live in one record so that experiments can be reproduced
//! from a single configuration. The defaults are the values the test suites
//! are written against.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Self-adjointness of the form matrix.
    pub form_symmetry: f64,
    /// Relative form residual accepted on a constructed group element.
    pub isometry: f64,
    /// Relative form residual above which renormalization refuses to run.
    pub normalize_max_residual: f64,
    /// Target relative form residual after renormalization.
    pub normalize_target: f64,
    /// Eigenvalue modulus gap separating hyperbolic elements.
    pub classify: f64,
    /// Null-vector test for boundary points, relative to the squared norm.
    pub null_vector: f64,
    /// Projective equality of canonical boundary representatives.
    pub projective_eq: f64,
    /// Default residual threshold for chain membership.
    pub chain_membership: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            form_symmetry: 1e-14,
            isometry: 1e-10,
            normalize_max_residual: 1e-4,
            normalize_target: 1e-12,
            classify: 1e-8,
            null_vector: 1e-10,
            projective_eq: 1e-9,
            chain_membership: 1e-8,
        }
    }
}

pub const TOL: Tolerances = Tolerances {
    form_symmetry: 1e-14,
    isometry: 1e-10,
    normalize_max_residual: 1e-4,
    normalize_target: 1e-12,
    classify: 1e-8,
    null_vector: 1e-10,
    projective_eq: 1e-9,
    chain_membership: 1e-8,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn const_matches_default() {
        assert_eq!(TOL, Tolerances::default());
    }
}
