//! Blob analysis: 8-connected component labelling of a binary mask.

use serde::{Deserialize, Serialize};

use crate::imaging::{BinaryMask, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blob {
    pub bbox: Rect,
    pub pixel_count: u64,
}

/// 8-connected blobs ordered by the (top, left) corner of their bounding box;
/// blobs sharing a corner keep raster order of their first pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Blob> {
    label_components(mask).1
}

/// Component labels (0 = background, blob `i` has label `i + 1`) together
/// with the blobs, in the same order as [`connected_components`].
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<Blob>) {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut blobs = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = blobs.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut count = 0u64;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            count += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        blobs.push(Blob {
            bbox: Rect::new(
                x0 as u32,
                y0 as u32,
                (x1 - x0 + 1) as u32,
                (y1 - y0 + 1) as u32,
            ),
            pixel_count: count,
        });
    }

    let mut order: Vec<usize> = (0..blobs.len()).collect();
    order.sort_by_key(|&i| (blobs[i].bbox.y, blobs[i].bbox.x));
    let mut relabel = vec![0u32; blobs.len() + 1];
    for (new, &old) in order.iter().enumerate() {
        relabel[old + 1] = new as u32 + 1;
    }
    for l in labels.iter_mut() {
        *l = relabel[*l as usize];
    }
    let blobs = order.into_iter().map(|i| blobs[i]).collect();
    (labels, blobs)
}
