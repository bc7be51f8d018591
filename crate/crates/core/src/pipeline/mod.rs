//! Loading, splitting, generating and persisting data and models.

mod dataset;
mod persist;
mod split;
mod synth;

pub use dataset::{
    load_dataset, load_dataset_mapped, save_dataset, write_jsonl, write_tsv, ColumnMapping,
    DataFormat, Dataset, LoadWarnings, COLUMNS, LABEL_COLUMN,
};
pub use persist::{
    decode_model, encode_model, load_model, save_model, summary_json, ModelBundle, FORMAT_VERSION,
    MAGIC,
};
pub use split::{default_test_count, split, split_indices, SplitMode, SplitSpec};
pub use synth::{generate_synthetic, SynthConfig, DATE_ORIGIN};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::eval::TrainTest;
use crate::preprocess::{digitize_all, fit_encoding_maps, EncodingMaps, TextFeatureMode};

/// Fits encoding maps on `train` and digitizes both partitions with them.
pub fn prepare(
    train: &Dataset,
    test: &Dataset,
    mode: TextFeatureMode,
) -> Result<(EncodingMaps, TrainTest)> {
    let maps = fit_encoding_maps(&train.records)?;
    let data = TrainTest {
        x_train: digitize_all(&train.records, &maps, mode),
        y_train: train.labels()?,
        x_test: digitize_all(&test.records, &maps, mode),
        y_test: test.labels()?,
    };
    Ok((maps, data))
}

/// One row of [`title_length_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBucket {
    pub length: usize,
    pub count: usize,
    pub mean_label: f64,
}

/// Post count and mean label for each title length, ascending by length.
/// Records without a label are skipped.
pub fn title_length_profile(dataset: &Dataset, mode: TextFeatureMode) -> Vec<LengthBucket> {
    let mut buckets: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in &dataset.records {
        if let Some(label) = r.label {
            let e = buckets
                .entry(mode.measure(&r.title) as usize)
                .or_insert((0, 0.0));
            e.0 += 1;
            e.1 += label;
        }
    }
    buckets
        .into_iter()
        .map(|(length, (count, sum))| LengthBucket {
            length,
            count,
            mean_label: sum / count as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::RawRecord;

    #[test]
    fn profile_groups_by_length() {
        let rec = |title: &str, label| RawRecord {
            title: title.into(),
            label: Some(label),
            ..Default::default()
        };
        let ds = Dataset::new(
            vec![
                rec("ab", 1.0),
                rec("cd", 3.0),
                rec("", 5.0),
                rec("東京", 7.0),
            ],
            "t",
        );
        let p = title_length_profile(&ds, TextFeatureMode::TextLength);
        assert_eq!(
            p,
            vec![
                LengthBucket {
                    length: 0,
                    count: 1,
                    mean_label: 5.0
                },
                LengthBucket {
                    length: 2,
                    count: 3,
                    mean_label: 11.0 / 3.0
                },
            ]
        );
    }

    #[test]
    fn prepare_uses_train_maps() {
        let rec = |cat: &str| RawRecord {
            category: cat.into(),
            label: Some(1.0),
            ..Default::default()
        };
        let train = Dataset::new(vec![rec("a"), rec("b")], "t");
        let test = Dataset::new(vec![rec("b"), rec("z")], "t");
        let (maps, data) = prepare(&train, &test, TextFeatureMode::TextLength).unwrap();
        assert_eq!(maps.category.len(), 2);
        assert_eq!(data.x_test.get(0, 2), 1.0);
        assert_eq!(data.x_test.get(1, 2), 2.0);
    }
}
