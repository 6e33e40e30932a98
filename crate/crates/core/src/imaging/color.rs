use crate::imaging::Raster;

/// Rec.601 luma, rounded half-up in exact integer arithmetic. Alpha is ignored
/// and single-channel input is returned unchanged.
pub fn to_grayscale(image: &Raster) -> Raster {
    if image.is_gray() {
        return image.clone();
    }
    let c = image.channels() as usize;
    let data = image
        .data()
        .chunks_exact(c)
        .map(|p| luma(p[0], p[1], p[2]))
        .collect();
    Raster::gray(image.width(), image.height(), data).expect("same geometry as a valid raster")
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}
