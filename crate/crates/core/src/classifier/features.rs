use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::PairVerdict;

pub const FEATURE_COUNT: usize = 17;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "h0",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "h7",
    "h8",
    "h9",
    "correlation",
    "x",
    "y",
    "w",
    "h",
    "config_index",
    "mismatch_density",
];

/// Which side of the pair was missing when the vector was built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSide {
    #[default]
    Neither,
    Baseline,
    UnderTest,
}

/// Histogram (10 bins), correlation, x, y, w, h, configuration index and
/// mismatch density, in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector17 {
    pub values: [f64; FEATURE_COUNT],
    #[serde(default)]
    pub null_side: NullSide,
}

impl FeatureVector17 {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "feature {} is not finite",
                FEATURE_NAMES[i]
            )));
        }
        let ci = values[15];
        if ci.fract() != 0.0 || !(1.0..=14.0).contains(&ci) {
            return Err(Error::Format(format!("config_index {ci} outside 1..=14")));
        }
        Ok(FeatureVector17 {
            values,
            null_side: NullSide::Neither,
        })
    }

    pub fn correlation(&self) -> f64 {
        self.values[10]
    }

    pub fn config_index(&self) -> u8 {
        self.values[15] as u8
    }

    pub fn mismatch_density(&self) -> f64 {
        self.values[16]
    }
}

/// Features come from the baseline region, or from the under-test region
/// when the baseline side is missing. Correlation is zero for one-sided pairs.
pub fn build_feature_vector(
    pv: &PairVerdict,
    config_index: u8,
    mismatch_density: f64,
) -> Result<FeatureVector17> {
    let (side, null_side) = match (&pv.roib, &pv.roit) {
        (Some(b), Some(_)) => (b, NullSide::Neither),
        (Some(b), None) => (b, NullSide::UnderTest),
        (None, Some(t)) => (t, NullSide::Baseline),
        (None, None) => return Err(Error::EmptyPair),
    };
    let mut values = [0.0; FEATURE_COUNT];
    values[..10].copy_from_slice(&side.histogram);
    values[10] = if null_side == NullSide::Neither {
        pv.correlation
    } else {
        0.0
    };
    values[11] = side.bbox.x as f64;
    values[12] = side.bbox.y as f64;
    values[13] = side.bbox.width as f64;
    values[14] = side.bbox.height as f64;
    values[15] = config_index as f64;
    values[16] = mismatch_density;
    let mut fv = FeatureVector17::new(values)?;
    fv.null_side = null_side;
    Ok(fv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Rect;
    use crate::matching::{RoiSummary, Verdict};

    fn summary(id: usize, bbox: Rect) -> RoiSummary {
        let mut histogram = [0.0; 10];
        histogram[9] = 0.75;
        histogram[0] = 0.25;
        RoiSummary {
            id,
            bbox,
            histogram,
        }
    }

    fn verdict(
        roib: Option<RoiSummary>,
        roit: Option<RoiSummary>,
        correlation: f64,
    ) -> PairVerdict {
        PairVerdict {
            roib,
            roit,
            matched_exact: false,
            best_ssd_norm: Some(0.2),
            best_offset: Some((0, 0)),
            correlation,
            verdict: Verdict::PotentialIncompatibility,
        }
    }

    #[test]
    fn canonical_order() {
        let pv = verdict(
            Some(summary(0, Rect::new(3, 4, 5, 6))),
            Some(summary(0, Rect::new(9, 9, 5, 6))),
            0.5,
        );
        let fv = build_feature_vector(&pv, 7, 0.25).unwrap();
        assert_eq!(fv.values.len(), 17);
        assert_eq!(fv.values[0], 0.25);
        assert_eq!(fv.values[9], 0.75);
        assert_eq!(&fv.values[10..], &[0.5, 3.0, 4.0, 5.0, 6.0, 7.0, 0.25]);
        assert_eq!(fv.null_side, NullSide::Neither);
    }

    #[test]
    fn missing_sides() {
        let pv = verdict(Some(summary(0, Rect::new(1, 1, 2, 2))), None, 0.9);
        let fv = build_feature_vector(&pv, 1, 0.0).unwrap();
        assert_eq!(fv.correlation(), 0.0);
        assert_eq!(fv.null_side, NullSide::UnderTest);

        let pv = verdict(None, Some(summary(2, Rect::new(7, 8, 2, 3))), 0.0);
        let fv = build_feature_vector(&pv, 1, 0.0).unwrap();
        assert_eq!(&fv.values[11..15], &[7.0, 8.0, 2.0, 3.0]);
        assert_eq!(fv.null_side, NullSide::Baseline);

        assert!(matches!(
            build_feature_vector(&verdict(None, None, 0.0), 1, 0.0),
            Err(Error::EmptyPair)
        ));
    }

    #[test]
    fn config_index_range() {
        let pv = verdict(Some(summary(0, Rect::new(1, 1, 2, 2))), None, 0.0);
        assert!(build_feature_vector(&pv, 0, 0.0).is_err());
        assert!(build_feature_vector(&pv, 15, 0.0).is_err());
        assert!(build_feature_vector(&pv, 14, 0.0).is_ok());
    }
}
