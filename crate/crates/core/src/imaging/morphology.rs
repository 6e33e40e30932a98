use crate::imaging::BinaryMask;

/// Binary dilation by a horizontal line of `2 * h_extent + 1` pixels followed
/// by a vertical line of `2 * v_extent + 1` pixels, clipped at the borders.
/// Equivalent to dilation by the `(2h+1) x (2v+1)` rectangle.
pub fn dilate_hv(mask: &BinaryMask, h_extent: u32, v_extent: u32) -> BinaryMask {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut horiz = vec![false; w * h];
    for y in 0..h {
        let src = &mask.bits()[y * w..(y + 1) * w];
        dilate_line(src, &mut horiz[y * w..(y + 1) * w], h_extent as usize);
    }

    let mut out = vec![false; w * h];
    let mut column = vec![false; h];
    let mut dilated = vec![false; h];
    for x in 0..w {
        for y in 0..h {
            column[y] = horiz[y * w + x];
        }
        dilate_line(&column, &mut dilated, v_extent as usize);
        for y in 0..h {
            out[y * w + x] = dilated[y];
        }
    }
    BinaryMask::from_bits(mask.width(), mask.height(), out).expect("same geometry")
}

/// 1-D dilation via a running count over the sliding window.
fn dilate_line(src: &[bool], dst: &mut [bool], extent: usize) {
    let n = src.len();
    if extent == 0 {
        dst.copy_from_slice(src);
        return;
    }
    let mut count = src[..extent.min(n)].iter().filter(|&&b| b).count();
    for i in 0..n {
        if i + extent < n && src[i + extent] {
            count += 1;
        }
        if i > extent && src[i - extent - 1] {
            count -= 1;
        }
        dst[i] = count > 0;
    }
}
