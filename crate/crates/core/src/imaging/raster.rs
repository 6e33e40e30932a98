use std::io::Cursor;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned pixel rectangle. Origin top-left, `x` rightward, `y` downward.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    /// Exclusive right edge.
    pub fn right(&self) -> u32 {
        self.x + self.width
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn max_side(&self) -> u32 {
        self.width.max(self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn overlap_area(&self, other: &Rect) -> u64 {
        self.intersection(other).map_or(0, |r| r.area())
    }

    /// Centre of the rectangle in continuous pixel-index coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + (self.width as f64 - 1.0) / 2.0,
            self.y as f64 + (self.height as f64 - 1.0) / 2.0,
        )
    }
}

/// Row-major 8-bit pixel grid with 1 (gray), 3 (RGB) or 4 (RGBA) channels.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * channels as usize;
        if width == 0 || height == 0 || !matches!(channels, 1 | 3 | 4) || data.len() != expected {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    /// A raster where every pixel holds `pixel` (its length sets the channel count).
    pub fn filled(width: u32, height: u32, pixel: &[u8]) -> Result<Self> {
        let n = width as usize * height as usize;
        let data = pixel
            .iter()
            .copied()
            .cycle()
            .take(n * pixel.len())
            .collect();
        Self::new(width, height, pixel.len() as u8, data)
    }

    pub fn from_fn_gray(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::gray(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    /// First-channel value; the intensity for gray rasters.
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[self.offset(x, y)]
    }

    /// Borrowed single-channel view over the whole raster.
    pub fn view(&self) -> Result<GrayView<'_>> {
        if !self.is_gray() {
            return Err(Error::ChannelMismatch {
                expected: "1",
                actual: self.channels,
            });
        }
        Ok(GrayView {
            data: &self.data,
            stride: self.width as usize,
            width: self.width,
            height: self.height,
        })
    }

    /// Copy of the pixels inside `rect`, clipped to the raster bounds.
    pub fn crop(&self, rect: Rect) -> Result<Raster> {
        let r = rect.intersection(&self.bounds()).ok_or(Error::EmptyRoi)?;
        let c = self.channels as usize;
        let mut data = Vec::with_capacity(r.area() as usize * c);
        for y in r.y..r.bottom() {
            let o = self.offset(r.x, y);
            data.extend_from_slice(&self.data[o..o + r.width as usize * c]);
        }
        Raster::new(r.width, r.height, self.channels, data)
    }

    pub fn transpose(&self) -> Raster {
        let c = self.channels as usize;
        let mut data = Vec::with_capacity(self.data.len());
        for x in 0..self.width {
            for y in 0..self.height {
                data.extend_from_slice(self.pixel(x, y));
            }
        }
        debug_assert_eq!(data.len(), self.width as usize * self.height as usize * c);
        Raster {
            width: self.height,
            height: self.width,
            channels: self.channels,
            data,
        }
    }

    /// Rotate 90 degrees clockwise.
    pub fn rotate_cw(&self) -> Raster {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.width {
            for x in 0..self.height {
                data.extend_from_slice(self.pixel(y, self.height - 1 - x));
            }
        }
        Raster {
            width: self.height,
            height: self.width,
            channels: self.channels,
            data,
        }
    }

    pub fn flip_horizontal(&self) -> Raster {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                data.extend_from_slice(self.pixel(x, y));
            }
        }
        Raster {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Raster> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        let (w, h) = (img.width(), img.height());
        match img {
            DynamicImage::ImageLuma8(buf) => Raster::new(w, h, 1, buf.into_raw()),
            DynamicImage::ImageRgb8(buf) => Raster::new(w, h, 3, buf.into_raw()),
            DynamicImage::ImageRgba8(buf) => Raster::new(w, h, 4, buf.into_raw()),
            DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) => {
                Raster::new(w, h, 1, img.into_luma8().into_raw())
            }
            DynamicImage::ImageRgb16(_) => Raster::new(w, h, 3, img.into_rgb8().into_raw()),
            other => Raster::new(w, h, 4, other.into_rgba8().into_raw()),
        }
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Raster> {
        let bytes = std::fs::read(path)?;
        Self::decode_png(&bytes)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let color = match self.channels {
            1 => ExtendedColorType::L8,
            3 => ExtendedColorType::Rgb8,
            _ => ExtendedColorType::Rgba8,
        };
        let mut out = Cursor::new(Vec::new());
        PngEncoder::new(&mut out).write_image(&self.data, self.width, self.height, color)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }
}

/// Borrowed single-channel window. May be empty, unlike [`Raster`].
#[derive(Clone, Copy, Debug)]
pub struct GrayView<'a> {
    data: &'a [u8],
    stride: usize,
    width: u32,
    height: u32,
}

impl<'a> GrayView<'a> {
    /// View over a packed row-major buffer of `width * height` bytes.
    pub fn from_slice(data: &'a [u8], width: u32, height: u32) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels: 1,
                len: data.len(),
            });
        }
        Ok(GrayView {
            data,
            stride: width as usize,
            width,
            height,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.stride + x as usize]
    }

    pub fn row(&self, y: u32) -> &'a [u8] {
        let start = y as usize * self.stride;
        &self.data[start..start + self.width as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [u8]> + '_ {
        (0..self.height).map(move |y| self.row(y))
    }

    /// Sub-window; `rect` must lie inside this view.
    pub fn sub(&self, rect: Rect) -> Result<GrayView<'a>> {
        if rect.right() > self.width || rect.bottom() > self.height {
            return Err(Error::PlacementOutOfBounds {
                tw: rect.width,
                th: rect.height,
                x: rect.x,
                y: rect.y,
                sw: self.width,
                sh: self.height,
            });
        }
        if rect.is_empty() {
            return Ok(GrayView {
                data: &[],
                stride: 0,
                width: rect.width,
                height: rect.height,
            });
        }
        let start = rect.y as usize * self.stride + rect.x as usize;
        let end = (rect.bottom() as usize - 1) * self.stride + rect.right() as usize;
        Ok(GrayView {
            data: &self.data[start..end],
            stride: self.stride,
            width: rect.width,
            height: rect.height,
        })
    }

    pub fn to_raster(&self) -> Result<Raster> {
        if self.is_empty() {
            return Err(Error::EmptyRoi);
        }
        let mut data = Vec::with_capacity(self.pixel_count() as usize);
        for row in self.rows() {
            data.extend_from_slice(row);
        }
        Raster::gray(self.width, self.height, data)
    }
}

/// One bit per pixel, same geometry as its source raster.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("set", &self.count_ones())
            .finish()
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels: 1,
                len: bits.len(),
            });
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of every set pixel in raster order.
    pub fn ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    pub fn transpose(&self) -> BinaryMask {
        let mut out = BinaryMask::new(self.height, self.width);
        for (x, y) in self.ones() {
            out.set(y, x, true);
        }
        out
    }

    pub fn rotate_cw(&self) -> BinaryMask {
        let mut out = BinaryMask::new(self.height, self.width);
        for (x, y) in self.ones() {
            out.set(self.height - 1 - y, x, true);
        }
        out
    }

    /// `other` has every bit of `self` set.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// White-on-black gray raster for debug output.
    pub fn to_raster(&self) -> Raster {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        Raster::gray(self.width.max(1), self.height.max(1), data)
            .expect("mask dimensions are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Raster::gray(0, 3, vec![]).is_err());
        assert!(Raster::gray(2, 2, vec![0; 3]).is_err());
        assert!(Raster::new(1, 1, 2, vec![0; 2]).is_err());
    }

    #[test]
    fn crop_clips_to_bounds() {
        let r = Raster::from_fn_gray(4, 4, |x, y| (y * 4 + x) as u8).unwrap();
        let c = r.crop(Rect::new(2, 2, 5, 5)).unwrap();
        assert_eq!(c.dimensions(), (2, 2));
        assert_eq!(c.data(), &[10, 11, 14, 15]);
    }

    #[test]
    fn sub_view_reads_the_right_pixels() {
        let r = Raster::from_fn_gray(5, 4, |x, y| (y * 10 + x) as u8).unwrap();
        let v = r.view().unwrap().sub(Rect::new(1, 2, 3, 2)).unwrap();
        assert_eq!(v.row(0), &[21, 22, 23]);
        assert_eq!(v.row(1), &[31, 32, 33]);
        assert!(r.view().unwrap().sub(Rect::new(3, 3, 3, 2)).is_err());
    }

    #[test]
    fn rotation_four_times_is_identity() {
        let r = Raster::from_fn_gray(3, 5, |x, y| (x * 7 + y * 3) as u8).unwrap();
        assert_eq!(r.rotate_cw().rotate_cw().rotate_cw().rotate_cw(), r);
        assert_eq!(r.rotate_cw().get(0, 0), r.get(0, 4));
    }

    #[test]
    fn png_round_trip() {
        let rgb = Raster::new(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let back = Raster::decode_png(&rgb.encode_png().unwrap()).unwrap();
        assert_eq!(back, rgb);
        let gray = Raster::gray(2, 2, vec![0, 64, 128, 255]).unwrap();
        assert_eq!(
            Raster::decode_png(&gray.encode_png().unwrap()).unwrap(),
            gray
        );
    }
}
