//! Fixtures shared by the benchmarks.

use rfne_core::eval::TrainTest;
use rfne_core::pipeline::{generate_synthetic, prepare, split, SplitMode, SplitSpec, SynthConfig};
use rfne_core::TextFeatureMode;

/// Digitized synthetic train/test split of `n` posts.
pub fn synthetic_split(n: usize, seed: u64) -> TrainTest {
    let data = generate_synthetic(&SynthConfig {
        n,
        seed,
        ..Default::default()
    })
    .expect("valid config");
    let spec = SplitSpec {
        mode: SplitMode::RandomSetA,
        test_count: n / 5,
        seed,
    };
    let (train, test) = split(&data, &spec).expect("labeled data");
    prepare(&train, &test, TextFeatureMode::TextLength)
        .expect("non-empty train set")
        .1
}

/// `n` strings drawn from `distinct` values.
pub fn id_column(n: usize, distinct: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("value-{}", (i * 7919) % distinct))
        .collect()
}
