//! Centralized tolerances.
//!
//! Two regimes recur throughout the lattice experiments:
//!
//! * identities that are exact in f64 arithmetic (tower properties, duality,
//!   envelope fixed points) — these get [`EXACT`];
//! * claims that inherit the grid-ceiling error of the hitting index, which
//!   rounds a continuum crossing up to the next grid time — these scale with
//!   the step `dt`.

/// Pure arithmetic identities: dynamic-programming towers, sublinearity,
/// duality, mass conservation. A handful of f64 additions per node leaves
/// comfortably fewer than 1e-12 of accumulated rounding at desk scale.
pub const EXACT: f64 = 1e-12;

/// Algebraically exact jet memberships (the shifted payoff reduces to a
/// constant). Slightly looser than [`EXACT`] because the payoff is assembled
/// from several quadratic terms per node.
pub const JET_EXACT: f64 = 1e-9;

/// Jet membership when the hitting index enters: the crossing is resolved
/// to the grid ceiling, so the expectation of the clipped time is off by
/// O(dt), amplified by the curvature of the test monomial.
pub fn jet_grid(dt: f64, gamma_norm: f64) -> f64 {
    5.0 * dt * (1.0 + gamma_norm)
}

/// Residual checks against a reference solution on the lattice.
pub fn residual(dt: f64) -> f64 {
    5.0 * dt
}
