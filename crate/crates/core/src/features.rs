//! Moment-based descriptors of a region: raw moments, intensity centroid,
//! normalised second-order central moments, orientation and histogram.
//!
//! Coordinates are ROI-local, starting at `(0, 0)` in the window's top-left
//! pixel, so every descriptor is invariant to where the region sits on the page.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{histogram10, GrayView, HISTOGRAM_BINS};
use crate::segmentation::Roi;

/// `M_ij = sum x^i y^j I(x, y)` for the orders used downstream, exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMoments {
    pub m00: u128,
    pub m10: u128,
    pub m01: u128,
    pub m11: u128,
    pub m20: u128,
    pub m02: u128,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CentralMoments {
    pub mu11: f64,
    pub mu20: f64,
    pub mu02: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiFeatures {
    pub raw: RawMoments,
    /// Intensity centroid, ROI-local pixels.
    pub centroid: (f64, f64),
    pub central: CentralMoments,
    /// Orientation of the principal axis, radians in (-pi/2, pi/2].
    pub theta: f64,
    pub histogram: [f64; HISTOGRAM_BINS],
    /// Set for all-black windows, whose centroid falls back to the window centre.
    pub zero_mass: bool,
}

impl RoiFeatures {
    /// Mean intensity over the window.
    pub fn mean_intensity(&self, pixel_count: u64) -> f64 {
        self.raw.m00 as f64 / pixel_count.max(1) as f64
    }
}

pub fn raw_moments(window: &GrayView<'_>) -> Result<RawMoments> {
    if window.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let mut m = RawMoments::default();
    for (y, row) in window.rows().enumerate() {
        let (mut s0, mut s1, mut s2) = (0u64, 0u64, 0u64);
        for (x, &v) in row.iter().enumerate() {
            let (x, v) = (x as u64, v as u64);
            s0 += v;
            s1 += x * v;
            s2 += x * x * v;
        }
        let y = y as u128;
        m.m00 += s0 as u128;
        m.m10 += s1 as u128;
        m.m20 += s2 as u128;
        m.m01 += y * s0 as u128;
        m.m11 += y * s1 as u128;
        m.m02 += y * y * s0 as u128;
    }
    Ok(m)
}

pub fn centroid(m: &RawMoments) -> Result<(f64, f64)> {
    if m.m00 == 0 {
        return Err(Error::ZeroMass);
    }
    let m00 = m.m00 as f64;
    Ok((m.m10 as f64 / m00, m.m01 as f64 / m00))
}

/// `mu'_11 = M11/M00 - x̄ȳ`, `mu'_20 = M20/M00 - x̄²`, `mu'_02 = M02/M00 - ȳ²`.
///
/// Evaluated as `(M00 M_ij - M_i0 M_0j) / M00²` with an exact integer
/// numerator, which keeps the variances non-negative.
pub fn central_moments(m: &RawMoments) -> Result<CentralMoments> {
    if m.m00 == 0 {
        return Err(Error::ZeroMass);
    }
    let (m00, m10, m01) = (m.m00 as i128, m.m10 as i128, m.m01 as i128);
    let n11 = m00 * m.m11 as i128 - m10 * m01;
    let n20 = m00 * m.m20 as i128 - m10 * m10;
    let n02 = m00 * m.m02 as i128 - m01 * m01;
    let d = m.m00 as f64 * m.m00 as f64;
    Ok(CentralMoments {
        mu11: n11 as f64 / d,
        mu20: n20 as f64 / d,
        mu02: n02 as f64 / d,
    })
}

/// `theta = atan2(2 mu'_11, mu'_20 - mu'_02) / 2`; zero when both arguments vanish.
pub fn orientation(mu: &CentralMoments) -> f64 {
    let num = 2.0 * mu.mu11;
    let den = mu.mu20 - mu.mu02;
    if num == 0.0 && den == 0.0 {
        return 0.0;
    }
    0.5 * num.atan2(den)
}

pub fn window_features(window: &GrayView<'_>) -> Result<RoiFeatures> {
    let raw = raw_moments(window)?;
    let histogram = histogram10(window)?;
    if raw.m00 == 0 {
        return Ok(RoiFeatures {
            raw,
            centroid: (
                (window.width() as f64 - 1.0) / 2.0,
                (window.height() as f64 - 1.0) / 2.0,
            ),
            central: CentralMoments::default(),
            theta: 0.0,
            histogram,
            zero_mass: true,
        });
    }
    let central = central_moments(&raw)?;
    Ok(RoiFeatures {
        raw,
        centroid: centroid(&raw)?,
        central,
        theta: orientation(&central),
        histogram,
        zero_mass: false,
    })
}

pub fn extract_features(roi: &Roi) -> Result<RoiFeatures> {
    window_features(&roi.window.view()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Raster;
    use std::f64::consts::FRAC_PI_4;

    fn features(r: &Raster) -> RoiFeatures {
        window_features(&r.view().unwrap()).unwrap()
    }

    #[test]
    fn two_by_two_ones() {
        let r = Raster::gray(2, 2, vec![1; 4]).unwrap();
        let m = raw_moments(&r.view().unwrap()).unwrap();
        assert_eq!(
            m,
            RawMoments {
                m00: 4,
                m10: 2,
                m01: 2,
                m11: 1,
                m20: 2,
                m02: 2
            }
        );
        assert_eq!(centroid(&m).unwrap(), (0.5, 0.5));
        let mu = central_moments(&m).unwrap();
        assert_eq!((mu.mu11, mu.mu20, mu.mu02), (0.0, 0.25, 0.25));
    }

    #[test]
    fn zero_and_point_mass() {
        let zero = Raster::gray(3, 3, vec![0; 9]).unwrap();
        let m = raw_moments(&zero.view().unwrap()).unwrap();
        assert_eq!(m, RawMoments::default());
        assert!(matches!(centroid(&m), Err(Error::ZeroMass)));

        let mut data = vec![0; 9];
        data[0] = 77;
        let single = Raster::gray(3, 3, data).unwrap();
        let m = raw_moments(&single.view().unwrap()).unwrap();
        assert_eq!(
            m,
            RawMoments {
                m00: 77,
                ..Default::default()
            }
        );

        let point =
            Raster::from_fn_gray(6, 9, |x, y| if (x, y) == (3, 7) { 200 } else { 0 }).unwrap();
        let f = features(&point);
        assert_eq!(f.centroid, (3.0, 7.0));
        assert_eq!(f.central, CentralMoments::default());
    }

    #[test]
    fn uniform_window_centroid_is_centre() {
        let r = Raster::gray(7, 4, vec![50; 28]).unwrap();
        let f = features(&r);
        assert_eq!(f.centroid, (3.0, 1.5));
        assert_eq!(f.central.mu11, 0.0);
        assert_eq!(f.theta, 0.0);
        let square = Raster::gray(4, 4, vec![9; 16]).unwrap();
        let f = features(&square);
        assert_eq!(f.theta, 0.0);
        assert_eq!(f.histogram.iter().filter(|&&b| b > 0.0).count(), 1);
    }

    #[test]
    fn diagonal_bar_is_at_forty_five_degrees() {
        // 3-px thick bar along y = x, image y axis pointing down
        let r = Raster::from_fn_gray(40, 40, |x, y| {
            if (x as i32 - y as i32).abs() <= 1 {
                255
            } else {
                0
            }
        })
        .unwrap();
        let theta = features(&r).theta;
        assert!((theta - FRAC_PI_4).abs() <= 0.03, "{theta}");
    }

    #[test]
    fn black_window_falls_back_to_centre() {
        let r = Raster::gray(5, 3, vec![0; 15]).unwrap();
        let f = features(&r);
        assert!(f.zero_mass);
        assert_eq!(f.centroid, (2.0, 1.0));
        assert_eq!(f.theta, 0.0);
    }

    #[test]
    fn mirror_negates_orientation() {
        let r = Raster::from_fn_gray(9, 6, |x, y| ((x * 31 + y * y * 17) % 251) as u8).unwrap();
        let a = features(&r);
        let b = features(&r.flip_horizontal());
        assert!(a.central.mu11 != 0.0);
        assert!((a.theta + b.theta).abs() < 1e-9);
    }
}
