//! Building a labelled set: balanced sampling and aggregation of several
//! raters' severity classes into one.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{BinaryLabel, LabeledSample, Quaternary};
use crate::error::{Error, Result};

/// Every rater's class (1 to 4) for one region pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatedPair {
    pub pair_id: String,
    pub rater_ids: Vec<String>,
    pub ratings: Vec<u8>,
}

impl RatedPair {
    pub fn new(
        pair_id: impl Into<String>,
        rater_ids: Vec<String>,
        ratings: Vec<u8>,
    ) -> Result<Self> {
        let pair_id = pair_id.into();
        if ratings.is_empty() {
            return Err(Error::TooFewRatings {
                pair_id,
                needed: 1,
                available: 0,
            });
        }
        if rater_ids.len() != ratings.len() {
            return Err(Error::DimensionMismatch {
                expected: ratings.len(),
                actual: rater_ids.len(),
            });
        }
        if let Some(&bad) = ratings.iter().find(|r| !(1..=4).contains(*r)) {
            return Err(Error::InvalidRating(bad));
        }
        Ok(RatedPair {
            pair_id,
            rater_ids,
            ratings,
        })
    }
}

/// The first `per_class` false positives followed by the first `per_class`
/// incompatibilities, each block in input order. Samples without a binary
/// label are skipped.
pub fn balance_binary(samples: &[LabeledSample], per_class: usize) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::with_capacity(2 * per_class);
    for class in [BinaryLabel::FalsePositive, BinaryLabel::Incompatibility] {
        let picked: Vec<_> = samples
            .iter()
            .filter(|s| s.binary_label == Some(class))
            .take(per_class)
            .cloned()
            .collect();
        if picked.len() < per_class {
            return Err(Error::InsufficientClass {
                class: class.as_str().to_string(),
                needed: per_class,
                available: picked.len(),
            });
        }
        out.extend(picked);
    }
    Ok(out)
}

/// Seeded random subset of `trim_to` ratings, kept in their original order.
pub fn trim_ratings(rp: &RatedPair, trim_to: usize, seed: u64) -> Result<Vec<u8>> {
    let n = rp.ratings.len();
    if trim_to == 0 || n < trim_to {
        return Err(Error::TooFewRatings {
            pair_id: rp.pair_id.clone(),
            needed: trim_to.max(1),
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, n, trim_to).into_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| rp.ratings[i]).collect())
}

/// Mean class rounded to the nearest integer, halves rounding up.
pub fn mean_class(ratings: &[u8]) -> Result<Quaternary> {
    if ratings.is_empty() {
        return Err(Error::InsufficientData("no ratings".into()));
    }
    let n = ratings.len() as u64;
    let sum: u64 = ratings.iter().map(|&r| r as u64).sum();
    Quaternary::from_class(((2 * sum + n) / (2 * n)) as u8)
}

pub fn aggregate_ratings(rp: &RatedPair, trim_to: usize, seed: u64) -> Result<Quaternary> {
    mean_class(&trim_ratings(rp, trim_to, seed)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct RatingRow {
    pair_id: String,
    rater_id: String,
    class: u8,
}

/// Ratings grouped by pair id in order of first appearance.
pub fn read_ratings_from<R: Read>(reader: R) -> Result<Vec<RatedPair>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut pairs: Vec<RatedPair> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for row in rdr.deserialize() {
        let row: RatingRow = row?;
        if !(1..=4).contains(&row.class) {
            return Err(Error::InvalidRating(row.class));
        }
        let slot = *index.entry(row.pair_id.clone()).or_insert_with(|| {
            pairs.push(RatedPair {
                pair_id: row.pair_id.clone(),
                rater_ids: Vec::new(),
                ratings: Vec::new(),
            });
            pairs.len() - 1
        });
        pairs[slot].rater_ids.push(row.rater_id);
        pairs[slot].ratings.push(row.class);
    }
    Ok(pairs)
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatedPair>> {
    read_ratings_from(std::fs::File::open(path)?)
}

pub fn write_ratings_to<W: Write>(writer: W, pairs: &[RatedPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in pairs {
        for (rater, &class) in p.rater_ids.iter().zip(&p.ratings) {
            w.serialize(RatingRow {
                pair_id: p.pair_id.clone(),
                rater_id: rater.clone(),
                class,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
