//! Inequality checks on dimension estimates.

use serde::Serialize;

/// The band `max{a, 2a - 2n} <= b <= min{2a, a + 1}` between a spherical
/// dimension `a` and a Gromov/Heisenberg dimension `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaloghReport {
    pub pass: bool,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub tolerance: f64,
    /// `b - a`, `b - (2a - 2n)`, `2a - b`, `a + 1 - b`; each must be `>= -tolerance`.
    pub slacks: [f64; 4],
}

pub const BALOGH_SLACK: f64 = 0.1;

pub fn balogh_check(alpha: f64, beta: f64, n: usize, tolerance: f64) -> BaloghReport {
    let nn = 2.0 * n as f64;
    let slacks = [beta - alpha, beta - (2.0 * alpha - nn), 2.0 * alpha - beta, alpha + 1.0 - beta];
    let pass = alpha.is_finite() && beta.is_finite() && slacks.iter().all(|s| *s >= -tolerance);
    BaloghReport { pass, alpha, beta, n, tolerance, slacks }
}

/// A named inequality gate with the margin by which it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

/// `alpha >= delta - fiber / 2 - tolerance`.
pub fn theorem_a_gate(alpha: f64, delta: f64, fiber: f64, tolerance: f64) -> Gate {
    let margin = alpha - (delta - 0.5 * fiber - tolerance);
    Gate { name: "lower-bound".into(), pass: margin >= 0.0, margin }
}

/// `|alpha - delta|`, `|beta - delta|` within `tol_dim` and the two exponent
/// estimators within `tol_delta`; margin is the smallest remaining room.
pub fn theorem_c_gate(alpha: f64, beta: f64, delta: f64, delta_other: f64, tol_dim: f64, tol_delta: f64) -> Gate {
    let margin = (tol_dim - (alpha - delta).abs())
        .min(tol_dim - (beta - delta).abs())
        .min(tol_delta - (delta - delta_other).abs());
    Gate { name: "dimension-equality".into(), pass: margin >= 0.0, margin }
}

/// Ledrappier-Young gap: soft pass at `soft`, hard failure above `hard`.
pub fn ly_gate(gap: f64, soft: f64, hard: f64) -> (Gate, bool) {
    (Gate { name: "fiber-plus-transverse".into(), pass: gap <= soft, margin: soft - gap }, gap > hard)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balogh_examples() {
        let r = balogh_check(1.0, 2.0, 2, BALOGH_SLACK);
        assert!(r.pass);
        assert_eq!(r.slacks[2], 0.0);
        for d in [0.3, 1.0, 1.9] {
            assert!(balogh_check(d, d, 2, BALOGH_SLACK).pass);
        }
        let bad = balogh_check(1.0, 3.0, 2, BALOGH_SLACK);
        assert!(!bad.pass && bad.slacks[2] < 0.0);
    }

    #[test]
    fn gates() {
        assert!(theorem_a_gate(0.5, 0.6, 0.0, 0.2).pass);
        assert!(!theorem_a_gate(0.2, 0.6, 0.0, 0.2).pass);
        assert!(theorem_c_gate(0.5, 0.52, 0.45, 0.46, 0.15, 0.1).pass);
        assert!(!theorem_c_gate(0.7, 0.52, 0.45, 0.46, 0.15, 0.1).pass);
    }
}
