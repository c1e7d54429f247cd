//! Shared fixtures for the criterion benchmarks.

use dlstream::generators::{
    AgrawalConfig, AgrawalGenerator, DriftKind, DriftSchedule, SeaConfig, SeaGenerator,
    StreamGenerator,
};
use dlstream::{Instance, RunSeed};

pub fn sea(n: usize, seed: u64) -> Vec<Instance> {
    let cfg = SeaConfig {
        schedule: DriftSchedule::stationary(8.0),
        noise: 0.1,
    };
    SeaGenerator::new(cfg, RunSeed::new(seed))
        .unwrap()
        .take_instances(n)
}

pub fn agrawal(n: usize, seed: u64) -> Vec<Instance> {
    let cfg = AgrawalConfig {
        schedule: DriftSchedule::new(vec![], vec![5], DriftKind::Abrupt).unwrap(),
        perturbation: 0.05,
    };
    AgrawalGenerator::new(cfg, RunSeed::new(seed))
        .unwrap()
        .take_instances(n)
}
