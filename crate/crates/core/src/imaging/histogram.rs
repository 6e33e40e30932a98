use crate::error::{Error, Result};
use crate::imaging::GrayView;

pub const HISTOGRAM_BINS: usize = 10;

#[inline]
pub fn bin_index(intensity: u8) -> usize {
    (intensity as usize * HISTOGRAM_BINS / 256).min(HISTOGRAM_BINS - 1)
}

/// Raw pixel counts per intensity decile.
pub fn histogram10_counts(window: &GrayView<'_>) -> Result<[u64; HISTOGRAM_BINS]> {
    if window.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let mut lut = [0u64; 256];
    for row in window.rows() {
        for &v in row {
            lut[v as usize] += 1;
        }
    }
    let mut bins = [0u64; HISTOGRAM_BINS];
    for (v, &n) in lut.iter().enumerate() {
        bins[bin_index(v as u8)] += n;
    }
    Ok(bins)
}

/// Intensity histogram normalised to sum to one, so it does not depend on
/// the window size.
pub fn histogram10(window: &GrayView<'_>) -> Result<[f64; HISTOGRAM_BINS]> {
    let counts = histogram10_counts(window)?;
    let total = window.pixel_count() as f64;
    Ok(counts.map(|c| c as f64 / total))
}
