//! Fixtures shared by the benchmarks.

use coordsim::coding::DirectSchemeConfig;
use coordsim::region::RegionQuery;
use coordsim::rng::StreamKey;
use coordsim::{CondPmf, MarkovLaw, Pmf};

/// Uniform binary source with flip-0.1 observation and flip-0.2 channel.
pub fn binary_law() -> MarkovLaw {
    MarkovLaw::new(
        Pmf::uniform(2).expect("binary"),
        CondPmf::binary_symmetric(0.1).expect("flip"),
        CondPmf::binary_symmetric(0.2).expect("flip"),
    )
    .expect("valid law")
}

pub fn direct_config(rate: f64, epsilon: f64) -> DirectSchemeConfig {
    DirectSchemeConfig::new(binary_law(), vec![rate], vec![0.0], epsilon).expect("valid scheme")
}

/// A uniformly random sequence over `size` symbols.
pub fn sequence(seed: u64, n: usize, size: usize) -> Vec<usize> {
    let key = StreamKey::new(seed);
    (0..n as u64).map(|i| (key.word(i) % size as u64) as usize).collect()
}

/// Ternary query whose target is not reachable exactly.
pub fn ternary_query(delta: f64) -> RegionQuery {
    let obs = CondPmf::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.8, 0.1], vec![0.2, 0.2, 0.6]]).expect("channel");
    let target = CondPmf::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.5, 0.5]]).expect("channel");
    RegionQuery::new(Pmf::new(vec![0.3, 0.3, 0.4]).expect("pmf"), obs, target, delta).expect("query")
}
