//! Shared fixtures for the criterion benches.

use hitting_core::{Boundary, GridSpec};

/// `f'(t) = 0.5 + 0.3 t` on `[0, 1]`, the boundary used across the benches.
pub fn rising_boundary() -> Boundary {
    Boundary::new(vec![0.5, 0.3], 1.0).expect("valid boundary")
}

/// Grid over `[0, 0.9] x [0, 3]` with `nt x nx` nodes.
pub fn grid(nt: usize, nx: usize) -> GridSpec {
    GridSpec::new(0.0, 0.9, nt, 0.0, 3.0, nx).expect("valid grid")
}
