//! Sum of squared differences and normalised cross-correlation between a
//! template and a placement inside a larger image.

use crate::error::{Error, Result};
use crate::imaging::{GrayView, Rect};

#[inline]
fn row_ssd(a: &[u8], b: &[u8]) -> u64 {
    // u32 lanes are safe for 65_536 differences of at most 255^2
    a.chunks(32_768)
        .zip(b.chunks(32_768))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(&p, &q)| {
                    let d = p as i32 - q as i32;
                    (d * d) as u32
                })
                .sum::<u32>() as u64
        })
        .sum()
}

/// `SSD = sum over the template of (search(x + i, y + j) - template(i, j))^2`,
/// exact.
pub fn ssd(template: &GrayView<'_>, search: &GrayView<'_>, x: u32, y: u32) -> Result<u64> {
    let placed = Rect::new(x, y, template.width(), template.height());
    if placed.right() > search.width() || placed.bottom() > search.height() {
        return Err(Error::PlacementOutOfBounds {
            tw: template.width(),
            th: template.height(),
            x,
            y,
            sw: search.width(),
            sh: search.height(),
        });
    }
    let window = search.sub(placed)?;
    Ok(template
        .rows()
        .zip(window.rows())
        .map(|(t, s)| row_ssd(t, s))
        .sum())
}

/// A template position inside a page with its SSD.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    pub x: u32,
    pub y: u32,
    pub ssd: u64,
}

/// Exhaustive minimum-SSD placement of `template` inside `region` of `page`.
///
/// Ties go to the placement closest (Euclidean) to `anchor`, then to the
/// smaller `(y, x)`. Candidates are visited in that priority order and a scan
/// is abandoned as soon as its partial sum reaches the best complete sum, which
/// cannot change the result. Returns `None` if the template does not fit in
/// the region or is empty.
pub fn best_placement(
    template: &GrayView<'_>,
    page: &GrayView<'_>,
    region: Rect,
    anchor: (u32, u32),
) -> Option<Placement> {
    let region = region.intersection(&Rect::new(0, 0, page.width(), page.height()))?;
    let (tw, th) = (template.width(), template.height());
    if template.is_empty() || tw > region.width || th > region.height {
        return None;
    }
    let mut candidates: Vec<(u64, u32, u32)> = Vec::new();
    for y in region.y..=region.bottom() - th {
        for x in region.x..=region.right() - tw {
            let dx = x as i64 - anchor.0 as i64;
            let dy = y as i64 - anchor.1 as i64;
            candidates.push(((dx * dx + dy * dy) as u64, y, x));
        }
    }
    candidates.sort_unstable();

    let mut best: Option<Placement> = None;
    'candidates: for (_, y, x) in candidates {
        let mut acc = 0u64;
        for j in 0..th {
            let start = x as usize;
            let srow = &page.row(y + j)[start..start + tw as usize];
            acc += row_ssd(template.row(j), srow);
            if let Some(b) = best {
                if acc >= b.ssd {
                    continue 'candidates;
                }
            }
        }
        best = Some(Placement { x, y, ssd: acc });
        if acc == 0 {
            break;
        }
    }
    best
}

/// Pearson correlation between two equally sized windows, clamped to [0, 1].
///
/// Two constant windows correlate fully when identical and not at all
/// otherwise; a constant window against a varying one scores 0.
pub fn ncc(a: &GrayView<'_>, b: &GrayView<'_>) -> f64 {
    if a.width() != b.width() || a.height() != b.height() || a.is_empty() {
        return 0.0;
    }
    let n = a.pixel_count() as i128;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (ra, rb) in a.rows().zip(b.rows()) {
        let (mut ra_s, mut rb_s, mut raa, mut rbb, mut rab) = (0i64, 0i64, 0i64, 0i64, 0i64);
        for (&p, &q) in ra.iter().zip(rb) {
            let (p, q) = (p as i64, q as i64);
            ra_s += p;
            rb_s += q;
            raa += p * p;
            rbb += q * q;
            rab += p * q;
        }
        sa += ra_s as i128;
        sb += rb_s as i128;
        saa += raa as i128;
        sbb += rbb as i128;
        sab += rab as i128;
    }
    // n^2 * covariance and variances, exact
    let cov = n * sab - sa * sb;
    let va = n * saa - sa * sa;
    let vb = n * sbb - sb * sb;
    match (va == 0, vb == 0) {
        (true, true) => {
            if sa == sb {
                1.0
            } else {
                0.0
            }
        }
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let r = cov as f64 / ((va as f64).sqrt() * (vb as f64).sqrt());
            r.clamp(0.0, 1.0)
        }
    }
}
