//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use vcperf_core::ingest::SectorId;
use vcperf_core::returns::RoundTerms;
use vcperf_core::sim::{simulate, SimSpec, SyntheticDataset};

/// Default simulation with `n_firms` firms spread over every sector.
pub fn synthetic(n_firms: usize, pmv_missing_rate: f64) -> SyntheticDataset {
    let mut spec = SimSpec {
        n_firms,
        sectors: SectorId::ALL.to_vec(),
        ..SimSpec::default()
    };
    spec.rounds.pmv_missing_rate = pmv_missing_rate;
    simulate(&spec).expect("benchmark spec is valid")
}

/// Round cascade of length `n` with valuations growing by half each round.
pub fn cascade(n: usize) -> Vec<RoundTerms> {
    (0..n)
        .map(|k| {
            let v = 10.0 * 1.5f64.powi(k as i32);
            RoundTerms::new(0.2 * v, v)
        })
        .collect()
}

/// Per-sector amounts, `per_sector` values each, deterministic.
pub fn sector_samples(per_sector: usize) -> BTreeMap<SectorId, Vec<f64>> {
    SectorId::ALL
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let values = (0..per_sector)
                .map(|j| 1.0 + ((i * 31 + j * 17) % 97) as f64 * (1.0 + i as f64 / 10.0))
                .collect();
            (s, values)
        })
        .collect()
}
