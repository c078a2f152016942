//! Shared fixtures for the benchmarks.

use vsnit::{build_samples, generate_population, GeneratorConfig, RecoverySample};

/// `n` masked synthetic person-days from the default generator.
pub fn samples(n: usize, seed: u64) -> Vec<RecoverySample> {
    let config = GeneratorConfig { person_days: n, ..Default::default() };
    let days = generate_population(&config, seed).expect("default generator config is valid");
    build_samples(&days, config.p_remove, seed).expect("p_remove in range")
}
