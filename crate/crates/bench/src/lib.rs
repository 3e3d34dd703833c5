//! Shared fixtures for the benchmark targets.

use chaotic_walks::skew::{DisplacementKind, DisplacementSpec, Monotonicity};

/// ξ(y) = −1 + 2y, the displacement driving the worked examples.
pub fn affine_displacement() -> DisplacementSpec {
    DisplacementSpec::new(
        DisplacementKind::Affine { a: -1.0, b: 2.0 },
        Monotonicity::Increasing,
    )
    .unwrap()
}
