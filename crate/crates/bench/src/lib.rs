//! Shared fixtures for the criterion benches.

use cablebarrier::PendulumParams;

/// Parameter sets benchmarked: the disjoint and the connected configuration.
pub fn configurations() -> [(&'static str, PendulumParams); 2] {
    [
        ("heavy_cart", PendulumParams::heavy_cart()),
        ("light_cart", PendulumParams::light_cart()),
    ]
}
