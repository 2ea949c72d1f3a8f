//! Seed derivation and angle grids shared by the optimizer and the harness.

use std::f64::consts::TAU;

/// Mixes a master seed with an index into an independent stream seed
/// (splitmix64 finalizer), so per-item seeds do not depend on scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Points `k · spacing` covering `[0, 2π)`.
///
/// The count is `round(2π / spacing)`, so spacings that divide the circle
/// exactly (π/180, π/18) give exactly 360 and 36 points.
pub fn uniform_angles(spacing: f64) -> Vec<f64> {
    assert!(spacing > 0.0 && spacing.is_finite(), "grid spacing must be positive");
    let count = (TAU / spacing).round().max(1.0) as usize;
    (0..count)
        .map(|k| k as f64 * spacing)
        .filter(|&a| a < TAU)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_sizes() {
        assert_eq!(uniform_angles(PI / 180.0).len(), 360);
        assert_eq!(uniform_angles(PI / 18.0).len(), 36);
        assert_eq!(uniform_angles(PI / 18.0)[0], 0.0);
        assert!(uniform_angles(PI / 180.0).iter().all(|&a| a < TAU));
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
