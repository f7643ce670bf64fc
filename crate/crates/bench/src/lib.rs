//! Shared fixtures for the benches.

use horopca::io::{generate, GeneratorSpec};
use horopca::stats::{center, Dataset};
use horopca::{ComponentSet, IdealPoint};

/// A centered tangent-Gaussian cloud with a decaying spectrum.
pub fn cloud(n: usize, d: usize, seed: u64) -> Dataset {
    let cov: Vec<f64> = (0..d).map(|i| 2.0 * 0.7f64.powi(i as i32)).collect();
    let raw = generate(&GeneratorSpec::tangent_gaussian(n, cov, seed)).expect("valid spec");
    center(&raw, &Default::default())
        .expect("centering converges")
        .0
}

/// `k` ideal points in general position, deterministic in `(d, k)`.
pub fn components(d: usize, k: usize) -> ComponentSet {
    let dirs = (0..k)
        .map(|j| {
            let v: Vec<f64> = (0..d)
                .map(|i| ((i * 7 + j * 13 + 1) as f64).sin() + if i == j { 2.0 } else { 0.0 })
                .collect();
            IdealPoint::from_direction(&v).expect("nonzero direction")
        })
        .collect();
    ComponentSet::at_origin(dirs).expect("independent directions")
}
