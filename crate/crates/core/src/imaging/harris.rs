//! Harris & Stephens corner response with 3x3 non-maximum suppression.
//!
//! Gradients and the Gaussian-weighted structure tensor are accumulated in
//! integers (the window weights are fixed-point), so the response is an exact
//! function of the tensor entries. That makes the detector bit-for-bit
//! symmetric under 90-degree rotation and mirroring, and exactly invariant to
//! a global intensity offset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayView};

/// Fixed-point scale of the Gaussian window weights.
const WEIGHT_SCALE: f64 = 1024.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKernel {
    Sobel,
    Prewitt,
}

impl GradientKernel {
    fn center_weight(self) -> i64 {
        match self {
            GradientKernel::Sobel => 2,
            GradientKernel::Prewitt => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarrisParams {
    pub gradient: GradientKernel,
    /// Standard deviation of the Gaussian window, pixels.
    pub sigma: f64,
    /// Sensitivity in `det(M) - k trace(M)^2`.
    pub k: f64,
    /// Response threshold as a fraction of the image's maximum response.
    pub threshold: f64,
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams {
            gradient: GradientKernel::Sobel,
            sigma: 1.0,
            k: 0.04,
            threshold: 0.01,
        }
    }
}

impl HarrisParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.02..=0.1).contains(&self.k) {
            return Err(Error::InvalidConfig(format!(
                "harris k {} outside [0.02, 0.1]",
                self.k
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "harris threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if !(self.sigma > 0.0 && self.sigma <= 16.0) {
            return Err(Error::InvalidConfig(format!(
                "harris sigma {} outside (0, 16]",
                self.sigma
            )));
        }
        Ok(())
    }

    /// One-sided fixed-point Gaussian weights `w[0..=radius]`.
    pub fn window_weights(&self) -> Vec<i64> {
        let radius = (3.0 * self.sigma).ceil() as i64;
        (0..=radius)
            .map(|i| {
                let g = (-((i * i) as f64) / (2.0 * self.sigma * self.sigma)).exp();
                (g * WEIGHT_SCALE).round() as i64
            })
            .collect()
    }
}

/// Gradient pair at `(x, y)` with replicated borders.
#[inline]
fn gradient_at(img: &GrayView<'_>, kernel: GradientKernel, x: u32, y: u32) -> (i64, i64) {
    let w = img.width();
    let h = img.height();
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(w - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(h - 1);
    let c = kernel.center_weight();
    let p = |x: u32, y: u32| img.get(x, y) as i64;
    let gx = (p(xp, ym) + c * p(xp, y) + p(xp, yp)) - (p(xm, ym) + c * p(xm, y) + p(xm, yp));
    let gy = (p(xm, yp) + c * p(x, yp) + p(xp, yp)) - (p(xm, ym) + c * p(x, ym) + p(xp, ym));
    (gx, gy)
}

/// Horizontally window-filtered structure tensor products of one row.
struct TensorRow {
    xx: Vec<i64>,
    yy: Vec<i64>,
    xy: Vec<i64>,
}

fn tensor_row(img: &GrayView<'_>, params: &HarrisParams, weights: &[i64], y: u32) -> TensorRow {
    let w = img.width() as usize;
    let mut gxx = vec![0i64; w];
    let mut gyy = vec![0i64; w];
    let mut gxy = vec![0i64; w];
    for x in 0..w {
        let (gx, gy) = gradient_at(img, params.gradient, x as u32, y);
        gxx[x] = gx * gx;
        gyy[x] = gy * gy;
        gxy[x] = gx * gy;
    }
    let r = weights.len() as i64 - 1;
    let last = w as i64 - 1;
    let filter = |src: &[i64]| -> Vec<i64> {
        (0..w as i64)
            .map(|x| {
                let mut acc = weights[0] * src[x as usize];
                for k in 1..=r {
                    let wk = weights[k as usize];
                    acc += wk
                        * (src[(x - k).clamp(0, last) as usize]
                            + src[(x + k).clamp(0, last) as usize]);
                }
                acc
            })
            .collect()
    };
    TensorRow {
        xx: filter(&gxx),
        yy: filter(&gyy),
        xy: filter(&gxy),
    }
}

/// Per-pixel response `R = det(M) - k trace(M)^2`, row-major.
pub fn harris_response(img: &GrayView<'_>, params: &HarrisParams) -> Vec<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Vec::new();
    }
    let weights = params.window_weights();
    let r = weights.len() - 1;
    let taps = 2 * r + 1;
    let mut ring: Vec<Option<(usize, TensorRow)>> = (0..taps).map(|_| None).collect();
    let mut response = vec![0.0f64; w * h];

    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for row in lo..=hi {
            let slot = row % taps;
            if !matches!(&ring[slot], Some((cached, _)) if *cached == row) {
                ring[slot] = Some((row, tensor_row(img, params, &weights, row as u32)));
            }
        }
        // rows[r + k] is the (clamped) row y + k
        let rows: Vec<&TensorRow> = (-(r as isize)..=r as isize)
            .map(|k| {
                let row = (y as isize + k).clamp(0, h as isize - 1) as usize;
                &ring[row % taps].as_ref().expect("row cached above").1
            })
            .collect();
        let out = &mut response[y * w..(y + 1) * w];
        for (x, slot) in out.iter_mut().enumerate() {
            let centre = rows[r];
            let mut sxx = weights[0] * centre.xx[x];
            let mut syy = weights[0] * centre.yy[x];
            let mut sxy = weights[0] * centre.xy[x];
            for k in 1..=r {
                let up = rows[r - k];
                let down = rows[r + k];
                let wk = weights[k];
                sxx += wk * (up.xx[x] + down.xx[x]);
                syy += wk * (up.yy[x] + down.yy[x]);
                sxy += wk * (up.xy[x] + down.xy[x]);
            }
            let det = sxx as i128 * syy as i128 - sxy as i128 * sxy as i128;
            let trace = sxx as i128 + syy as i128;
            *slot = det as f64 - params.k * (trace * trace) as f64;
        }
    }
    response
}

/// Corner mask: response above `threshold * max(R)` and maximal in its 3x3
/// neighbourhood. A constant image yields an empty mask.
pub fn harris_corners(img: &GrayView<'_>, params: &HarrisParams) -> BinaryMask {
    let (w, h) = (img.width(), img.height());
    let mut mask = BinaryMask::new(w, h);
    let response = harris_response(img, params);
    let max = response.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if response.is_empty() || max <= 0.0 {
        return mask;
    }
    let thresh = params.threshold * max;
    let (wu, hu) = (w as usize, h as usize);
    for y in 0..hu {
        for x in 0..wu {
            let v = response[y * wu + x];
            if v <= thresh {
                continue;
            }
            let mut is_max = true;
            'nbhd: for ny in y.saturating_sub(1)..=(y + 1).min(hu - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(wu - 1) {
                    if response[ny * wu + nx] > v {
                        is_max = false;
                        break 'nbhd;
                    }
                }
            }
            if is_max {
                mask.set(x as u32, y as u32, true);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{connected_components, Raster};

    fn square_page() -> Raster {
        Raster::from_fn_gray(100, 100, |x, y| {
            if (30..70).contains(&x) && (30..70).contains(&y) {
                255
            } else {
                0
            }
        })
        .unwrap()
    }

    /// Per-pixel structure tensor with floating Gaussian weights and direct
    /// neighbourhood loops.
    fn response_oracle(img: &Raster, p: &HarrisParams) -> Vec<f64> {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let px =
            |x: i64, y: i64| img.get(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32) as f64;
        let grad = |x: i64, y: i64| {
            let gx = px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)
                - px(x - 1, y - 1)
                - 2.0 * px(x - 1, y)
                - px(x - 1, y + 1);
            let gy = px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)
                - px(x - 1, y - 1)
                - 2.0 * px(x, y - 1)
                - px(x + 1, y - 1);
            (gx, gy)
        };
        let r = (3.0 * p.sigma).ceil() as i64;
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let g = (-((dx * dx + dy * dy) as f64) / (2.0 * p.sigma * p.sigma)).exp();
                        let (gx, gy) = grad((x + dx).clamp(0, w - 1), (y + dy).clamp(0, h - 1));
                        a += g * gx * gx;
                        b += g * gy * gy;
                        c += g * gx * gy;
                    }
                }
                out.push(a * b - c * c - p.k * (a + b) * (a + b));
            }
        }
        out
    }

    #[test]
    fn uniform_image_has_no_corners() {
        let img = Raster::gray(20, 15, vec![128; 300]).unwrap();
        assert!(harris_corners(&img.view().unwrap(), &HarrisParams::default()).is_empty());
    }

    #[test]
    fn square_yields_four_corner_clusters() {
        let img = square_page();
        let params = HarrisParams::default();
        let mask = harris_corners(&img.view().unwrap(), &params);
        let clusters = connected_components(&mask);
        assert_eq!(clusters.len(), 4, "{clusters:?}");
        let corners = [(30.0, 30.0), (69.0, 30.0), (30.0, 69.0), (69.0, 69.0)];
        for blob in &clusters {
            let (cx, cy) = blob.bbox.center();
            assert!(
                corners
                    .iter()
                    .any(|&(x, y)| (cx - x).abs() <= 3.0 && (cy - y).abs() <= 3.0),
                "cluster at ({cx}, {cy}) is not near a square corner"
            );
        }

        // the fixed-point window must track the floating structure tensor
        let fast = harris_response(&img.view().unwrap(), &params);
        let slow = response_oracle(&img, &params);
        let scale = slow.iter().cloned().fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            // weights are scaled by 1024 per axis, so compare after removing it
            let a = a / (1024.0f64.powi(4));
            assert!((a - b).abs() <= 0.01 * scale, "{a} vs {b}");
        }
        let oracle_peaks: Vec<usize> = (0..slow.len()).filter(|&i| slow[i] > 0.5 * scale).collect();
        assert!(oracle_peaks.iter().all(|&i| fast[i] > 0.0));
    }

    #[test]
    fn rotation_commutes_with_detection() {
        let img = Raster::from_fn_gray(41, 29, |x, y| {
            let a = (5..20).contains(&x) && (4..12).contains(&y);
            let b = (24..37).contains(&x) && (10..25).contains(&y);
            if a {
                200
            } else if b {
                90
            } else {
                20
            }
        })
        .unwrap();
        let p = HarrisParams::default();
        let rotated = harris_corners(&img.rotate_cw().view().unwrap(), &p);
        assert_eq!(
            rotated,
            harris_corners(&img.view().unwrap(), &p).rotate_cw()
        );
    }

    #[test]
    fn offset_invariance() {
        let img = Raster::from_fn_gray(
            32,
            32,
            |x, y| if (x / 8 + y / 8) % 2 == 0 { 40 } else { 150 },
        )
        .unwrap();
        let shifted = Raster::from_fn_gray(32, 32, |x, y| img.get(x, y) + 60).unwrap();
        let p = HarrisParams::default();
        assert_eq!(
            harris_corners(&img.view().unwrap(), &p),
            harris_corners(&shifted.view().unwrap(), &p)
        );
    }

    #[test]
    fn parameter_validation() {
        assert!(HarrisParams::default().validate().is_ok());
        assert!(HarrisParams {
            k: 0.2,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HarrisParams {
            threshold: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
