//! Synthetic post metadata with a heavy tail of very popular posts.
//!
//! Labels are linear in the digitized features (with maps fitted on the
//! generated records and [`TextFeatureMode::TextLength`]) plus Gaussian
//! noise. A `tail_frac` share of users are "celebrities": every post of
//! theirs is multiplied by a per-user log-normal factor, so extreme scores
//! are predictable from the user id but poorly fit by a smooth model.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::dataset::Dataset;
use crate::preprocess::{digitize, fit_encoding_maps, RawRecord, TextFeatureMode, N_FEATURES};
use crate::seed::{derive_seed, rng_from_seed};

/// Post date of the first generated record (2015-12-13).
pub const DATE_ORIGIN: i64 = 1_450_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// One weight per digitized feature.
    pub coefficients: [f64; N_FEATURES],
    pub intercept: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Share of users whose posts get the log-normal multiplier.
    pub tail_frac: f64,
    /// Log-space standard deviation `s` of the multiplier; its log-mean is `3s`.
    pub tail_scale: f64,
    pub posts_per_user: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let mut coefficients = [0.0; N_FEATURES];
        coefficients[2] = 0.1; // category
        coefficients[4] = 0.03; // concept
        coefficients[6] = 0.5; // ispublic
        coefficients[8] = 0.02; // title
        coefficients[10] = 0.01; // tags
        coefficients[13] = 0.05; // geo accuracy
        SynthConfig {
            n: 5000,
            seed: 0,
            coefficients,
            intercept: 2.0,
            noise: 0.3,
            tail_frac: 0.05,
            tail_scale: 0.5,
            posts_per_user: 30,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if self.noise.is_nan() || self.noise < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        if !(0.0..=1.0).contains(&self.tail_frac) {
            return Err(Error::InvalidConfig(format!(
                "tail_frac must lie in [0, 1], got {}",
                self.tail_frac
            )));
        }
        if !self.tail_scale.is_finite() || self.tail_scale < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tail_scale must be non-negative, got {}",
                self.tail_scale
            )));
        }
        if self.posts_per_user == 0 {
            return Err(Error::InvalidConfig(
                "posts_per_user must be positive".into(),
            ));
        }
        if self
            .coefficients
            .iter()
            .chain([&self.intercept])
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvalidConfig("coefficients must be finite".into()));
        }
        Ok(())
    }
}

const CATEGORIES: [(&str, [&str; 3]); 6] = [
    ("Food", ["Cake", "Noodles", "Coffee"]),
    ("Travel", ["Beach", "Mountain", "City"]),
    ("Animal", ["Cat", "Dog", "Bird"]),
    ("Fashion", ["Street", "Vintage", "Shoes"]),
    ("Entertainment", ["Music", "Movie", "Festival"]),
    ("Holiday&Celebrations", ["Christmas", "Wedding", "Birthday"]),
];

const CONCEPTS: [&str; 12] = [
    "dessert",
    "ramen",
    "latte",
    "sunset",
    "hiking",
    "skyline",
    "kitten",
    "puppy",
    "parrot",
    "streetwear",
    "concert",
    "fireworks",
];

const WORDS: [&str; 40] = [
    "summer",
    "light",
    "sky",
    "friends",
    "happy",
    "night",
    "city",
    "blue",
    "travel",
    "food",
    "cat",
    "dog",
    "love",
    "nature",
    "photo",
    "canon",
    "nikon",
    "sony",
    "street",
    "art",
    "beach",
    "sea",
    "sunset",
    "tokyo",
    "paris",
    "café",
    "naïve",
    "Straße",
    "東京",
    "夕焼け",
    "coffee",
    "bw",
    "portrait",
    "macro",
    "flower",
    "rain",
    "snow",
    "music",
    "party",
    "instagood",
];

fn words<R: Rng>(rng: &mut R, count: usize) -> String {
    (0..count)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Generates `config.n` labeled records; identical configs give identical data.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = rng_from_seed(derive_seed(config.seed, 0));

    let users = config.n.div_ceil(config.posts_per_user).max(2);
    let mut order: Vec<usize> = (0..users).collect();
    order.shuffle(&mut rng);
    let uids: Vec<i64> = order.iter().map(|&u| 10_000 + 37 * u as i64).collect();
    let celebrities = (config.tail_frac * users as f64).round() as usize;
    let tail = LogNormal::new(3.0 * config.tail_scale, config.tail_scale)
        .map_err(|e| Error::InvalidConfig(format!("tail_scale: {e}")))?;
    // users 0..celebrities (in shuffled order) carry a multiplier
    let factors: Vec<f64> = (0..users)
        .map(|u| {
            if u < celebrities {
                tail.sample(&mut rng)
            } else {
                1.0
            }
        })
        .collect();

    let mut records = Vec::with_capacity(config.n);
    let mut owners = Vec::with_capacity(config.n);
    let mut date = DATE_ORIGIN;
    let mut pid = 700_000i64;
    for _ in 0..config.n {
        let user = rng.random_range(0..users);
        let (category, subs) = CATEGORIES[rng.random_range(0..CATEGORIES.len())];
        let geotagged = rng.random_bool(0.65);
        date += rng.random_range(1..1200);
        pid += rng.random_range(1..4);
        let record = RawRecord {
            uid: Some(uids[user]),
            pid: Some(pid),
            category: category.to_owned(),
            subcategory: subs[rng.random_range(0..subs.len())].to_owned(),
            concept: CONCEPTS[rng.random_range(0..CONCEPTS.len())].to_owned(),
            path_alias: if rng.random_bool(0.6) {
                let len = rng.random_range(3..16);
                (0..len)
                    .map(|_| rng.random_range(b'a'..=b'z') as char)
                    .collect()
            } else {
                String::new()
            },
            is_public: rng.random_bool(0.9),
            media_status: (if rng.random_bool(0.97) {
                "ready"
            } else {
                "processing"
            })
            .to_owned(),
            title: {
                let n = rng.random_range(0..12);
                words(&mut rng, n)
            },
            media_type: (if rng.random_bool(0.92) {
                "photo"
            } else {
                "video"
            })
            .to_owned(),
            all_tags: {
                let n = rng.random_range(0..40);
                words(&mut rng, n)
            },
            post_date: Some(date),
            latitude: geotagged.then(|| round6(rng.random_range(-60.0..70.0))),
            geo_accuracy: geotagged.then(|| f64::from(rng.random_range(1..=16))),
            longitude: geotagged.then(|| round6(rng.random_range(-180.0..180.0))),
            label: None,
        };
        records.push(record);
        owners.push(user);
    }

    let maps = fit_encoding_maps(&records)?;
    let noise =
        Normal::new(0.0, config.noise).map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
    for (record, &user) in records.iter_mut().zip(&owners) {
        let x = digitize(record, &maps, TextFeatureMode::TextLength);
        let linear = config.intercept
            + config
                .coefficients
                .iter()
                .zip(&x)
                .map(|(c, v)| c * v)
                .sum::<f64>();
        let eps = if config.noise > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        record.label = Some((linear + eps) * factors[user]);
    }

    Ok(Dataset::new(
        records,
        format!(
            "synthetic n={} seed={} tail_frac={}",
            config.n, config.seed, config.tail_frac
        ),
    ))
}
