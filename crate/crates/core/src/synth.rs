//! Synthetic page pairs with known differences.
//!
//! A [`PageSpec`] is a list of boxes, bars and glyph-textured blocks drawn
//! with coverage antialiasing at subpixel positions. A [`Perturbation`] edits
//! one element of the spec and carries an oracle label fixed by the manual
//! rules: moves over 40 px, size changes over 15 px, removals, visible
//! recolours and content changes are incompatibilities; everything else is a
//! false positive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{BinaryLabel, LabeledSample, Quaternary};
use crate::dataset::{aggregate_ratings, RatedPair};
use crate::error::{Error, Result};
use crate::imaging::{Raster, Rect};
use crate::matching::Verdict;
use crate::pipeline::{compare_pages, CompareConfig, ComparisonReport, PairRecord};

/// Threshold on mean per-channel difference for a visible recolour.
pub const VISIBLE_RECOLOR_DELTA: f64 = 32.0;
pub const SHIFT_LIMIT: f64 = 40.0;
pub const RESIZE_LIMIT: f64 = 15.0;
/// Minimum free space between elements in generated layouts.
pub const LAYOUT_GAP: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Box,
    Bar,
    TextBlock,
}

/// Pseudo-text drawn inside an element.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub seed: u64,
    pub ink: [u8; 3],
    /// Extra advance per glyph, pixels.
    pub spacing_delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Border {
    pub color: [u8; 3],
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub fill: Option<[u8; 3]>,
    pub border: Option<Border>,
    pub texture: Option<Texture>,
    /// Amplitude of intensity noise on edge pixels, gray levels.
    pub edge_noise: u8,
    pub visible: bool,
}

impl Element {
    /// Pixels the element can touch, given a page offset.
    pub fn pixel_rect(&self, offset: (f64, f64)) -> Rect {
        let x0 = (self.x + offset.0).floor().max(0.0);
        let y0 = (self.y + offset.1).floor().max(0.0);
        let x1 = (self.x + offset.0 + self.width).ceil().max(x0);
        let y1 = (self.y + offset.1 + self.height).ceil().max(y0);
        Rect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32)
    }

    /// Colour a recolour acts on: the fill, or the ink for text.
    fn color(&self) -> [u8; 3] {
        self.fill
            .or(self.texture.map(|t| t.ink))
            .unwrap_or([0, 0, 0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PageSpec {
    pub width: u32,
    pub height: u32,
    pub background: [u8; 3],
    pub elements: Vec<Element>,
    /// Whole-page subpixel displacement, as between two rendering engines.
    pub offset: (f64, f64),
    pub seed: u64,
}

impl PageSpec {
    pub fn blank(width: u32, height: u32, background: u8, seed: u64) -> Self {
        PageSpec {
            width,
            height,
            background: [background; 3],
            elements: Vec::new(),
            offset: (0.0, 0.0),
            seed,
        }
    }
}

fn blend_rect(canvas: &mut Raster, x0: f64, y0: f64, x1: f64, y1: f64, color: [u8; 3]) {
    let (w, h) = canvas.dimensions();
    let (cx0, cy0) = (x0.max(0.0), y0.max(0.0));
    let (cx1, cy1) = (x1.min(w as f64), y1.min(h as f64));
    if cx1 <= cx0 || cy1 <= cy0 {
        return;
    }
    for j in cy0.floor() as u32..cy1.ceil() as u32 {
        let cy = (y1.min(j as f64 + 1.0) - y0.max(j as f64)).clamp(0.0, 1.0);
        for i in cx0.floor() as u32..cx1.ceil() as u32 {
            let c = cy * (x1.min(i as f64 + 1.0) - x0.max(i as f64)).clamp(0.0, 1.0);
            if c <= 0.0 {
                continue;
            }
            let px = canvas.pixel_mut(i, j);
            for k in 0..3 {
                px[k] = (px[k] as f64 * (1.0 - c) + color[k] as f64 * c).round() as u8;
            }
        }
    }
}

/// Glyph strokes `(x, y, w, h)` relative to the element origin. The glyph
/// sequence depends only on the seed; the box width decides where lines wrap.
pub fn layout_glyphs(texture: &Texture, width: f64, height: f64) -> Vec<(f64, f64, f64, f64)> {
    const PAD: f64 = 4.0;
    const LINE: f64 = 15.0;
    let mut rng = ChaCha8Rng::seed_from_u64(texture.seed);
    let mut out = Vec::new();
    let mut pen = PAD;
    let mut top = PAD;
    let advance = |gw: f64| gw + 1.0 + texture.spacing_delta;
    loop {
        let len = rng.random_range(1..=7);
        let glyphs: Vec<(f64, f64, u8)> = (0..len)
            .map(|_| {
                (
                    rng.random_range(3..=6) as f64,
                    rng.random_range(6..=10) as f64,
                    rng.random_range(0..4u8),
                )
            })
            .collect();
        let word: f64 = glyphs.iter().map(|g| advance(g.0)).sum();
        if pen + word > width - PAD {
            if pen == PAD {
                break;
            }
            pen = PAD;
            top += LINE;
        }
        if top + LINE > height - PAD + 1.0 {
            break;
        }
        let base = top + 11.0;
        for (gw, gh, shape) in glyphs {
            let (x, y) = (pen, base - gh);
            match shape {
                0 => out.push((x, y, gw, gh)),
                1 => {
                    out.push((x, y, 1.6, gh));
                    out.push((x, y, gw, 1.6));
                }
                2 => {
                    out.push((x, y, 1.4, gh));
                    out.push((x + gw - 1.4, y, 1.4, gh));
                    out.push((x, y, gw, 1.4));
                    out.push((x, base - 1.4, gw, 1.4));
                }
                _ => {
                    out.push((x + gw - 1.6, y, 1.6, gh + 3.0));
                    out.push((x, base - 1.6, gw, 1.6));
                }
            }
            pen += advance(gw);
        }
        pen += 4.0;
    }
    out
}

fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn add_edge_noise(canvas: &mut Raster, rect: Rect, amplitude: u8, seed: u64) {
    let bounds = canvas.bounds();
    let Some(r) = Rect::new(
        rect.x.saturating_sub(1),
        rect.y.saturating_sub(1),
        rect.width + 2,
        rect.height + 2,
    )
    .intersection(&bounds) else {
        return;
    };
    let differs = |a: &[u8], b: &[u8]| a.iter().zip(b).any(|(p, q)| p.abs_diff(*q) > 10);
    let mut edges = Vec::new();
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            let here = canvas.pixel(x, y);
            let right = x + 1 < bounds.width && differs(here, canvas.pixel(x + 1, y));
            let down = y + 1 < bounds.height && differs(here, canvas.pixel(x, y + 1));
            if right || down {
                edges.push((x, y));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = amplitude as i32;
    for (x, y) in edges {
        let d = rng.random_range(-a..=a);
        for v in canvas.pixel_mut(x, y) {
            *v = (*v as i32 + d).clamp(0, 255) as u8;
        }
    }
}

/// Rasterises a spec into an RGB image.
pub fn render(spec: &PageSpec) -> Raster {
    let mut canvas =
        Raster::filled(spec.width, spec.height, &spec.background).expect("valid canvas");
    for (idx, e) in spec.elements.iter().enumerate() {
        if !e.visible {
            continue;
        }
        let x = e.x + spec.offset.0;
        let y = e.y + spec.offset.1;
        if let Some(fill) = e.fill {
            blend_rect(&mut canvas, x, y, x + e.width, y + e.height, fill);
        }
        if let Some(b) = e.border {
            let t = b.width as f64;
            blend_rect(&mut canvas, x, y, x + e.width, y + t, b.color);
            blend_rect(
                &mut canvas,
                x,
                y + e.height - t,
                x + e.width,
                y + e.height,
                b.color,
            );
            blend_rect(&mut canvas, x, y + t, x + t, y + e.height - t, b.color);
            blend_rect(
                &mut canvas,
                x + e.width - t,
                y + t,
                x + e.width,
                y + e.height - t,
                b.color,
            );
        }
        if let Some(t) = &e.texture {
            for (gx, gy, gw, gh) in layout_glyphs(t, e.width, e.height) {
                blend_rect(&mut canvas, x + gx, y + gy, x + gx + gw, y + gy + gh, t.ink);
            }
        }
        if e.edge_noise > 0 {
            add_edge_noise(
                &mut canvas,
                e.pixel_rect(spec.offset),
                e.edge_noise,
                mix_seed(spec.seed, idx as u64),
            );
        }
    }
    canvas
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Shift,
    Resize,
    Delete,
    Recolor,
    TextureSwap,
    SubpixelJitter,
    AntialiasNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Right,
    Left,
    Down,
    Up,
}

/// One edit to one element.
///
/// `magnitude` is pixels for shift, resize and jitter, the per-channel delta
/// for recolour and the noise amplitude for antialias noise (on text the glyph
/// advance also changes by `magnitude / 100` px). For resize, `Right`/`Left`
/// grow/shrink the width and `Down`/`Up` the height. For recolour, `Down`
/// darkens and anything else lightens.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub magnitude: f64,
    pub target: usize,
    pub direction: Direction,
}

fn recolored(c: [u8; 3], delta: f64, direction: Direction) -> [u8; 3] {
    let d = delta.round() as i32;
    let s = if direction == Direction::Down { -d } else { d };
    c.map(|v| (v as i32 + s).clamp(0, 255) as u8)
}

fn mean_channel_delta(a: [u8; 3], b: [u8; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(p, q)| p.abs_diff(*q) as f64)
        .sum::<f64>()
        / 3.0
}

/// Label the manual rules assign to a perturbation of `spec`.
pub fn oracle_label(spec: &PageSpec, p: &Perturbation) -> Result<BinaryLabel> {
    let e = spec
        .elements
        .get(p.target)
        .ok_or_else(|| Error::InvalidConfig(format!("no element {}", p.target)))?;
    let incompatible = match p.kind {
        PerturbationKind::Shift => p.magnitude > SHIFT_LIMIT,
        PerturbationKind::Resize => p.magnitude > RESIZE_LIMIT,
        PerturbationKind::Delete | PerturbationKind::TextureSwap => true,
        PerturbationKind::Recolor => {
            let before = e.color();
            mean_channel_delta(before, recolored(before, p.magnitude, p.direction))
                >= VISIBLE_RECOLOR_DELTA
        }
        PerturbationKind::SubpixelJitter | PerturbationKind::AntialiasNoise => false,
    };
    Ok(if incompatible {
        BinaryLabel::Incompatibility
    } else {
        BinaryLabel::FalsePositive
    })
}

/// Applies `p` and returns the edited spec with its oracle label.
pub fn perturb(spec: &PageSpec, p: &Perturbation) -> Result<(PageSpec, BinaryLabel)> {
    if !(p.magnitude >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "negative magnitude {}",
            p.magnitude
        )));
    }
    let label = oracle_label(spec, p)?;
    let mut out = spec.clone();
    let e = &mut out.elements[p.target];
    let m = p.magnitude;
    match p.kind {
        PerturbationKind::Shift | PerturbationKind::SubpixelJitter => match p.direction {
            Direction::Right => e.x += m,
            Direction::Left => e.x -= m,
            Direction::Down => e.y += m,
            Direction::Up => e.y -= m,
        },
        PerturbationKind::Resize => match p.direction {
            Direction::Right => e.width += m,
            Direction::Left => e.width = (e.width - m).max(4.0),
            Direction::Down => e.height += m,
            Direction::Up => e.height = (e.height - m).max(4.0),
        },
        PerturbationKind::Delete => e.visible = false,
        PerturbationKind::Recolor => {
            if let Some(fill) = e.fill.as_mut() {
                *fill = recolored(*fill, m, p.direction);
            } else if let Some(t) = e.texture.as_mut() {
                t.ink = recolored(t.ink, m, p.direction);
            }
        }
        PerturbationKind::TextureSwap => {
            let old = e.texture.map(|t| t.seed).unwrap_or(0);
            let seed = mix_seed(old, m.to_bits() ^ 0xC0FF_EE00);
            let ink = match (e.texture, e.fill) {
                (Some(t), _) => t.ink,
                (None, Some(f)) if luma(f) < 128.0 => [235, 235, 235],
                _ => [25, 25, 25],
            };
            e.texture = Some(Texture {
                seed,
                ink,
                spacing_delta: e.texture.map(|t| t.spacing_delta).unwrap_or(0.0),
            });
        }
        PerturbationKind::AntialiasNoise => {
            e.edge_noise = m.round().clamp(0.0, 255.0) as u8;
            if let Some(t) = e.texture.as_mut() {
                t.spacing_delta += m / 100.0;
            }
        }
    }
    Ok((out, label))
}

fn luma(c: [u8; 3]) -> f64 {
    0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64
}

/// Perturbation families with fixed magnitude ranges, each with a fixed label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    LargeShift,
    SmallShift,
    LargeResize,
    SmallResize,
    Delete,
    StrongRecolor,
    SubtleRecolor,
    TextureSwap,
    Jitter,
    AntialiasNoise,
    /// One element renders taller and pushes everything below it down by the
    /// same small amount. Expands to one shift per moved element.
    LayoutDrift,
    /// Text rasterised with slightly different glyph advances and edge
    /// coverage. Expands to every text element on the page.
    FontRendering,
}

impl Recipe {
    pub fn kind(self) -> PerturbationKind {
        match self {
            Recipe::LargeShift | Recipe::SmallShift | Recipe::LayoutDrift => {
                PerturbationKind::Shift
            }
            Recipe::LargeResize | Recipe::SmallResize => PerturbationKind::Resize,
            Recipe::Delete => PerturbationKind::Delete,
            Recipe::StrongRecolor | Recipe::SubtleRecolor => PerturbationKind::Recolor,
            Recipe::TextureSwap => PerturbationKind::TextureSwap,
            Recipe::Jitter => PerturbationKind::SubpixelJitter,
            Recipe::AntialiasNoise | Recipe::FontRendering => PerturbationKind::AntialiasNoise,
        }
    }

    pub fn label(self) -> BinaryLabel {
        match self {
            Recipe::LargeShift
            | Recipe::LargeResize
            | Recipe::Delete
            | Recipe::StrongRecolor
            | Recipe::TextureSwap => BinaryLabel::Incompatibility,
            _ => BinaryLabel::FalsePositive,
        }
    }

    /// Severity 1 to 4 a careful rater would give.
    pub fn severity(self) -> u8 {
        match self {
            Recipe::Jitter | Recipe::AntialiasNoise | Recipe::FontRendering => 1,
            Recipe::SmallShift
            | Recipe::LayoutDrift
            | Recipe::SmallResize
            | Recipe::SubtleRecolor => 2,
            Recipe::LargeShift | Recipe::LargeResize | Recipe::StrongRecolor => 3,
            Recipe::Delete | Recipe::TextureSwap => 4,
        }
    }

    fn prefers_text(self) -> bool {
        matches!(
            self,
            Recipe::AntialiasNoise | Recipe::TextureSwap | Recipe::FontRendering
        )
    }

    /// Page-wide effects that spread from one anchor to many elements.
    pub fn expands(self) -> bool {
        matches!(self, Recipe::LayoutDrift | Recipe::FontRendering)
    }

    /// Draws a concrete perturbation of element `target`.
    pub fn sample(self, spec: &PageSpec, target: usize, rng: &mut ChaCha8Rng) -> Perturbation {
        let e = &spec.elements[target];
        let draw = |rng: &mut ChaCha8Rng| match self {
            Recipe::LargeShift => rng.random_range(60..=160) as f64,
            Recipe::SmallShift => rng.random_range(8..=32) as f64,
            // stays inside the matcher's default search tolerance
            Recipe::LayoutDrift => rng.random_range(4..=16) as f64,
            Recipe::FontRendering => rng.random_range(5..=15) as f64,
            Recipe::LargeResize => rng.random_range(20..=45) as f64,
            Recipe::SmallResize => rng.random_range(4..=12) as f64,
            Recipe::Delete => 0.0,
            Recipe::StrongRecolor => rng.random_range(80..=140) as f64,
            Recipe::SubtleRecolor => rng.random_range(6..=20) as f64,
            Recipe::TextureSwap => rng.random_range(1..=1_000_000) as f64,
            Recipe::Jitter => rng.random_range(0.2..0.8),
            Recipe::AntialiasNoise => rng.random_range(3..=10) as f64,
        };
        let mut magnitude = draw(rng);
        let direction = match self.kind() {
            _ if self == Recipe::LayoutDrift => Direction::Down,
            PerturbationKind::Shift | PerturbationKind::SubpixelJitter => {
                let all = [
                    Direction::Right,
                    Direction::Left,
                    Direction::Down,
                    Direction::Up,
                ];
                let fits = |d: Direction, m: f64| match d {
                    Direction::Right => e.x + e.width + m <= spec.width as f64,
                    Direction::Left => e.x - m >= 0.0,
                    Direction::Down => e.y + e.height + m <= spec.height as f64,
                    Direction::Up => e.y - m >= 0.0,
                };
                // keep clear of other elements so neighbouring regions don't merge
                let clear = |d: Direction, m: f64| {
                    let (dx, dy) = match d {
                        Direction::Right => (m, 0.0),
                        Direction::Left => (-m, 0.0),
                        Direction::Down => (0.0, m),
                        Direction::Up => (0.0, -m),
                    };
                    let gap = LAYOUT_GAP as f64;
                    spec.elements.iter().enumerate().all(|(i, o)| {
                        i == target
                            || !o.visible
                            || e.x + dx - gap >= o.x + o.width
                            || o.x >= e.x + dx + e.width + gap
                            || e.y + dy - gap >= o.y + o.height
                            || o.y >= e.y + dy + e.height + gap
                    })
                };
                let mut chosen = None;
                for attempt in 0..16 {
                    if attempt > 0 {
                        magnitude = draw(rng);
                    }
                    let free: Vec<Direction> = all
                        .into_iter()
                        .filter(|&d| fits(d, magnitude) && clear(d, magnitude))
                        .collect();
                    if !free.is_empty() {
                        chosen = Some(free[rng.random_range(0..free.len())]);
                        break;
                    }
                }
                chosen.unwrap_or_else(|| {
                    let ok: Vec<Direction> =
                        all.into_iter().filter(|&d| fits(d, magnitude)).collect();
                    if ok.is_empty() {
                        all[rng.random_range(0..4)]
                    } else {
                        ok[rng.random_range(0..ok.len())]
                    }
                })
            }
            PerturbationKind::Resize => {
                let grow = rng.random_bool(0.5);
                let horizontal = e.kind != ElementKind::Bar && rng.random_bool(0.5)
                    || e.kind == ElementKind::Bar;
                match (horizontal, grow) {
                    (true, true) => Direction::Right,
                    (true, false) => Direction::Left,
                    (false, true) => Direction::Down,
                    (false, false) => Direction::Up,
                }
            }
            PerturbationKind::Recolor => {
                // the direction that moves the colour furthest
                let c = e.color();
                let dark = mean_channel_delta(c, recolored(c, magnitude, Direction::Down));
                let light = mean_channel_delta(c, recolored(c, magnitude, Direction::Up));
                if dark >= light {
                    Direction::Down
                } else {
                    Direction::Up
                }
            }
            _ => Direction::Right,
        };
        Perturbation {
            kind: self.kind(),
            magnitude,
            target,
            direction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub width: u32,
    pub height: u32,
    pub min_elements: usize,
    pub max_elements: usize,
    /// One defect per defect page, cycling through this list.
    pub defect_recipes: Vec<Recipe>,
    /// `noise_per_page` edits on every page, cycling through this list.
    pub noise_recipes: Vec<Recipe>,
    pub noise_per_page: usize,
    /// Extra edits on pages whose configuration index is at least
    /// `layout_noise_from_config`: configurations with a layout engine
    /// different from the baseline's.
    pub layout_noise_recipes: Vec<Recipe>,
    pub layout_noise_per_page: usize,
    pub layout_noise_from_config: u8,
    /// Every `k`-th page carries noise only; 0 disables noise-only pages.
    pub noise_only_period: usize,
    /// Displace the whole page under test by a subpixel amount tied to its
    /// configuration index.
    pub page_jitter: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            width: 800,
            height: 1000,
            min_elements: 10,
            max_elements: 16,
            defect_recipes: vec![Recipe::LargeShift, Recipe::Delete, Recipe::StrongRecolor],
            noise_recipes: vec![Recipe::Jitter, Recipe::AntialiasNoise],
            noise_per_page: 2,
            layout_noise_recipes: vec![Recipe::LayoutDrift, Recipe::FontRendering],
            layout_noise_per_page: 2,
            layout_noise_from_config: 8,
            noise_only_period: 4,
            page_jitter: true,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 200 || self.height < 200 {
            return Err(Error::InvalidConfig(
                "synthetic pages must be at least 200x200".into(),
            ));
        }
        if self.min_elements == 0 || self.min_elements > self.max_elements {
            return Err(Error::InvalidConfig(
                "need 1 <= min_elements <= max_elements".into(),
            ));
        }
        let noise = self.noise_recipes.iter().chain(&self.layout_noise_recipes);
        if self
            .defect_recipes
            .iter()
            .any(|r| r.label() != BinaryLabel::Incompatibility)
            || noise
                .clone()
                .any(|r| r.label() != BinaryLabel::FalsePositive)
        {
            return Err(Error::InvalidConfig(
                "defect and noise recipe lists are mixed up".into(),
            ));
        }
        if self.edits_per_page() > self.min_elements {
            return Err(Error::InvalidConfig(
                "too few elements for the requested edits".into(),
            ));
        }
        if self.defect_recipes.is_empty() && self.noise_only_period != 1 {
            return Err(Error::InvalidConfig(
                "defect pages need at least one defect recipe".into(),
            ));
        }
        if (self.noise_per_page > 0 && self.noise_recipes.is_empty())
            || (self.layout_noise_per_page > 0 && self.layout_noise_recipes.is_empty())
        {
            return Err(Error::InvalidConfig(
                "noise edits requested without noise recipes".into(),
            ));
        }
        Ok(())
    }

    fn edits_per_page(&self) -> usize {
        1 + self.noise_per_page + self.layout_noise_per_page
    }

    pub fn is_noise_only(&self, index: usize) -> bool {
        self.noise_only_period > 0 && index % self.noise_only_period == self.noise_only_period - 1
    }

    /// Configuration indices cycle through 1..=14.
    pub fn config_index(&self, index: usize) -> u8 {
        (index % 14) as u8 + 1
    }

    /// Edits applied to page `index`: its defect, if any, then the noise.
    pub fn page_recipes(&self, index: usize) -> Vec<Recipe> {
        let mut out = Vec::new();
        if !self.is_noise_only(index) {
            let defect_pages_before = (0..index).filter(|&i| !self.is_noise_only(i)).count();
            out.push(self.defect_recipes[defect_pages_before % self.defect_recipes.len()]);
        }
        for k in 0..self.noise_per_page {
            out.push(
                self.noise_recipes[(index * self.noise_per_page + k) % self.noise_recipes.len()],
            );
        }
        if self.config_index(index) >= self.layout_noise_from_config {
            for k in 0..self.layout_noise_per_page {
                let r = (index * self.layout_noise_per_page + k) % self.layout_noise_recipes.len();
                out.push(self.layout_noise_recipes[r]);
            }
        }
        out
    }
}

/// Ground truth for one edited element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementLabel {
    pub element: usize,
    pub recipe: Recipe,
    pub label: BinaryLabel,
    pub severity: u8,
    pub baseline_rect: Rect,
    /// `None` when the element is gone from the page under test.
    pub test_rect: Option<Rect>,
}

impl ElementLabel {
    pub fn touches(&self, r: &Rect) -> bool {
        self.baseline_rect.overlap_area(r) > 0
            || self.test_rect.is_some_and(|t| t.overlap_area(r) > 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusPair {
    pub id: String,
    pub config_index: u8,
    pub baseline: PageSpec,
    pub under_test: PageSpec,
    pub perturbations: Vec<Perturbation>,
    pub labels: Vec<ElementLabel>,
}

impl CorpusPair {
    pub fn render(&self) -> (Raster, Raster) {
        (render(&self.baseline), render(&self.under_test))
    }

    pub fn has_defect(&self) -> bool {
        self.labels
            .iter()
            .any(|l| l.label == BinaryLabel::Incompatibility)
    }
}

fn tinted(rng: &mut ChaCha8Rng, gray: u8, spread: i32) -> [u8; 3] {
    std::array::from_fn(|_| (gray as i32 + rng.random_range(-spread..=spread)).clamp(0, 255) as u8)
}

/// Random non-overlapping layout.
pub fn random_page(rng: &mut ChaCha8Rng, cfg: &CorpusConfig, seed: u64) -> PageSpec {
    const MARGIN: u32 = 48;
    const GAP: u32 = LAYOUT_GAP;
    let bg = rng.random_range(238..=255u8);
    let mut spec = PageSpec::blank(cfg.width, cfg.height, bg, seed);
    let n = rng.random_range(cfg.min_elements..=cfg.max_elements);
    let mut placed: Vec<Rect> = Vec::new();
    let mut attempts = 0;
    while spec.elements.len() < n && attempts < 5000 {
        attempts += 1;
        let roll = rng.random_range(0..100);
        let (kind, w, h) = if roll < 45 {
            (
                ElementKind::TextBlock,
                rng.random_range(100..=250u32),
                rng.random_range(30..=160u32),
            )
        } else if roll < 80 {
            (
                ElementKind::Box,
                rng.random_range(60..=260u32),
                rng.random_range(40..=180u32),
            )
        } else {
            (
                ElementKind::Bar,
                rng.random_range(150..=cfg.width - 2 * MARGIN),
                rng.random_range(6..=16u32),
            )
        };
        let w = w.min(cfg.width - 2 * MARGIN);
        let h = h.min(cfg.height - 2 * MARGIN);
        let x = rng.random_range(MARGIN..=cfg.width - MARGIN - w);
        let y = rng.random_range(MARGIN..=cfg.height - MARGIN - h);
        let grown = Rect::new(
            x.saturating_sub(GAP),
            y.saturating_sub(GAP),
            w + 2 * GAP,
            h + 2 * GAP,
        );
        if placed.iter().any(|r| r.overlap_area(&grown) > 0) {
            continue;
        }
        let element = match kind {
            ElementKind::TextBlock => Element {
                kind,
                x: x as f64,
                y: y as f64,
                width: w as f64,
                height: h as f64,
                fill: None,
                border: None,
                texture: Some(Texture {
                    seed: rng.random(),
                    ink: {
                        let g = rng.random_range(15..=80);
                        tinted(rng, g, 12)
                    },
                    spacing_delta: 0.0,
                }),
                edge_noise: 0,
                visible: true,
            },
            ElementKind::Box => {
                let gray = rng.random_range(40..=170u8);
                let fill = tinted(rng, gray, 15);
                let border = rng.random_bool(0.3).then(|| Border {
                    color: tinted(rng, gray.saturating_sub(40), 10),
                    width: 2,
                });
                let texture = rng.random_bool(0.3).then(|| Texture {
                    seed: rng.random(),
                    ink: if gray < 110 {
                        [240, 240, 240]
                    } else {
                        [20, 20, 20]
                    },
                    spacing_delta: 0.0,
                });
                Element {
                    kind,
                    x: x as f64,
                    y: y as f64,
                    width: w as f64,
                    height: h as f64,
                    fill: Some(fill),
                    border,
                    texture,
                    edge_noise: 0,
                    visible: true,
                }
            }
            ElementKind::Bar => Element {
                kind,
                x: x as f64,
                y: y as f64,
                width: w as f64,
                height: h as f64,
                fill: {
                    let g = rng.random_range(30..=120);
                    Some(tinted(rng, g, 15))
                },
                border: None,
                texture: None,
                edge_noise: 0,
                visible: true,
            },
        };
        placed.push(Rect::new(x, y, w, h));
        spec.elements.push(element);
    }
    spec
}

fn page_offset(config_index: u8) -> (f64, f64) {
    let c = config_index as f64;
    (((c * 0.37) % 1.0) * 0.5, ((c * 0.61) % 1.0) * 0.5)
}

fn pick_target(
    rng: &mut ChaCha8Rng,
    spec: &PageSpec,
    used: &[usize],
    recipe: Recipe,
) -> Option<usize> {
    let free: Vec<usize> = (0..spec.elements.len())
        .filter(|i| !used.contains(i))
        .collect();
    let text: Vec<usize> = free
        .iter()
        .copied()
        .filter(|&i| spec.elements[i].texture.is_some())
        .collect();
    let pool = if recipe.prefers_text() && !text.is_empty() {
        text
    } else {
        free
    };
    (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
}

/// Builds pair `index` of the corpus for `seed`; independent of the corpus size.
pub fn gen_pair(index: usize, seed: u64, cfg: &CorpusConfig) -> Result<CorpusPair> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let page_seed = mix_seed(seed, index as u64);
    let baseline = loop {
        let spec = random_page(&mut rng, cfg, page_seed);
        if spec.elements.len() >= cfg.edits_per_page() {
            break spec;
        }
    };
    let recipes = cfg.page_recipes(index);
    let config_index = cfg.config_index(index);
    let mut under_test = baseline.clone();
    if cfg.page_jitter {
        under_test.offset = page_offset(config_index);
    }
    let mut used = Vec::new();
    // page-wide effects may overlap other noise but never the defect
    let mut defects = Vec::new();
    let mut perturbations = Vec::new();
    let mut labels = Vec::new();
    for recipe in recipes {
        let claimed = if recipe.expands() { &defects } else { &used };
        let Some(anchor) = pick_target(&mut rng, &baseline, claimed, recipe) else {
            if recipe.expands() {
                continue;
            }
            return Err(Error::InvalidConfig(
                "not enough elements for the edit mix".into(),
            ));
        };
        let p = recipe.sample(&baseline, anchor, &mut rng);
        let free = |i: usize| i != anchor && !claimed.contains(&i);
        let mut targets = vec![anchor];
        match recipe {
            Recipe::LayoutDrift => {
                let top = baseline.elements[anchor].y;
                targets.extend(
                    (0..baseline.elements.len())
                        .filter(|&i| free(i) && baseline.elements[i].y >= top),
                );
            }
            Recipe::FontRendering => {
                targets.extend(
                    (0..baseline.elements.len())
                        .filter(|&i| free(i) && baseline.elements[i].texture.is_some()),
                );
            }
            _ => {}
        }
        if recipe.label() == BinaryLabel::Incompatibility {
            defects.extend(&targets);
        }
        for target in targets {
            used.push(target);
            let p = Perturbation { target, ..p };
            let (next, label) = perturb(&under_test, &p)?;
            debug_assert_eq!(label, recipe.label());
            under_test = next;
            let after = &under_test.elements[target];
            labels.push(ElementLabel {
                element: target,
                recipe,
                label,
                severity: recipe.severity(),
                baseline_rect: baseline.elements[target].pixel_rect(baseline.offset),
                test_rect: after.visible.then(|| after.pixel_rect(under_test.offset)),
            });
            perturbations.push(p);
        }
    }
    Ok(CorpusPair {
        id: format!("pair_{index:05}"),
        config_index,
        baseline,
        under_test,
        perturbations,
        labels,
    })
}

pub fn gen_corpus(n_pages: usize, seed: u64, cfg: &CorpusConfig) -> Result<Vec<CorpusPair>> {
    if n_pages == 0 {
        return Err(Error::InvalidConfig(
            "corpus size must be at least 1".into(),
        ));
    }
    (0..n_pages).map(|i| gen_pair(i, seed, cfg)).collect()
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub config_index: u8,
    pub baseline: String,
    pub under_test: String,
    pub perturbations: Vec<Perturbation>,
    pub labels: Vec<ElementLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub config: CorpusConfig,
    pub pairs: Vec<ManifestEntry>,
}

impl CorpusManifest {
    /// Image paths are `<id>_baseline.png` and `<id>_test.png`, relative to the manifest.
    pub fn new(seed: u64, config: CorpusConfig, pairs: &[CorpusPair]) -> Self {
        CorpusManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            seed,
            config,
            pairs: pairs
                .iter()
                .map(|p| ManifestEntry {
                    id: p.id.clone(),
                    config_index: p.config_index,
                    baseline: format!("{}_baseline.png", p.id),
                    under_test: format!("{}_test.png", p.id),
                    perturbations: p.perturbations.clone(),
                    labels: p.labels.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: CorpusManifest = serde_json::from_str(s)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "manifest schema version {}",
                m.schema_version
            )));
        }
        Ok(m)
    }
}

/// Pair-level counts of one comparison against its ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairScore {
    pub flagged: usize,
    pub true_flagged: usize,
    pub defects: usize,
    pub detected: usize,
}

impl PairScore {
    pub fn add(&mut self, o: &PairScore) {
        self.flagged += o.flagged;
        self.true_flagged += o.true_flagged;
        self.defects += o.defects;
        self.detected += o.detected;
    }

    /// Flagged pairs touching a defect over all flagged pairs; 0 when nothing is flagged.
    pub fn precision(&self) -> f64 {
        if self.flagged == 0 {
            0.0
        } else {
            self.true_flagged as f64 / self.flagged as f64
        }
    }

    /// Defects touched by at least one flagged pair over all defects; 1 without defects.
    pub fn recall(&self) -> f64 {
        if self.defects == 0 {
            1.0
        } else {
            self.detected as f64 / self.defects as f64
        }
    }

    pub fn f_score(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn record_touches(rec: &PairRecord, l: &ElementLabel) -> bool {
    rec.baseline_bbox.is_some_and(|b| l.touches(&b)) || rec.test_bbox.is_some_and(|t| l.touches(&t))
}

/// Scores the final verdicts, or the bare-bones ones when `bare` is set.
pub fn score_report(report: &ComparisonReport, labels: &[ElementLabel], bare: bool) -> PairScore {
    let flagged: Vec<&PairRecord> = report
        .pairs
        .iter()
        .filter(|p| {
            let v = if bare { p.bare_verdict } else { p.verdict };
            v == Verdict::PotentialIncompatibility
        })
        .collect();
    let defects: Vec<&ElementLabel> = labels
        .iter()
        .filter(|l| l.label == BinaryLabel::Incompatibility)
        .collect();
    PairScore {
        flagged: flagged.len(),
        true_flagged: flagged
            .iter()
            .filter(|p| defects.iter().any(|l| record_touches(p, l)))
            .count(),
        defects: defects.len(),
        detected: defects
            .iter()
            .filter(|l| flagged.iter().any(|p| record_touches(p, l)))
            .count(),
    }
}

/// Ground truth for a flagged pair: incompatible if it touches a defect,
/// with the highest severity among the edits it touches (1 if none).
pub fn pair_truth(rec: &PairRecord, labels: &[ElementLabel]) -> (BinaryLabel, u8) {
    let touched: Vec<&ElementLabel> = labels.iter().filter(|l| record_touches(rec, l)).collect();
    let label = if touched
        .iter()
        .any(|l| l.label == BinaryLabel::Incompatibility)
    {
        BinaryLabel::Incompatibility
    } else {
        BinaryLabel::FalsePositive
    };
    let severity = touched
        .iter()
        .filter(|l| l.label == label)
        .map(|l| l.severity)
        .max()
        .unwrap_or(1);
    (label, severity)
}

/// Between 8 and 15 noisy ratings around `severity`: most agree, some are
/// one class off.
pub fn simulate_ratings(pair_id: &str, severity: u8, rng: &mut ChaCha8Rng) -> RatedPair {
    let n = rng.random_range(8..=15);
    let ratings: Vec<u8> = (0..n)
        .map(|_| {
            let roll = rng.random_range(0..10);
            let r = match roll {
                0 | 1 => severity as i32 - 1,
                2 | 3 => severity as i32 + 1,
                _ => severity as i32,
            };
            r.clamp(1, 4) as u8
        })
        .collect();
    let raters = (0..n).map(|i| format!("rater_{i:02}")).collect();
    RatedPair {
        pair_id: pair_id.to_string(),
        rater_ids: raters,
        ratings,
    }
}

/// Labelled samples from every bare-bones potential incompatibility of one pair.
pub fn samples_from_report(
    report: &ComparisonReport,
    pair: &CorpusPair,
    rater_seed: u64,
) -> Result<Vec<LabeledSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rater_seed, 0xA11CE));
    let mut out = Vec::new();
    for (k, rec) in report.pairs.iter().enumerate() {
        let Some(values) = &rec.features else {
            continue;
        };
        let (label, severity) = pair_truth(rec, &pair.labels);
        let rp = simulate_ratings(&format!("{}_{k}", pair.id), severity, &mut rng);
        let q = aggregate_ratings(&rp, 8, rng.random())?;
        let values: [f64; 17] =
            values
                .as_slice()
                .try_into()
                .map_err(|_| Error::DimensionMismatch {
                    expected: 17,
                    actual: values.len(),
                })?;
        let mut features = crate::classifier::FeatureVector17::new(values)?;
        features.null_side = match (rec.baseline_bbox, rec.test_bbox) {
            (Some(_), None) => crate::classifier::NullSide::UnderTest,
            (None, Some(_)) => crate::classifier::NullSide::Baseline,
            _ => crate::classifier::NullSide::Neither,
        };
        out.push(LabeledSample {
            features,
            binary_label: Some(label),
            quaternary_label: Some(q),
        });
    }
    Ok(out)
}

/// Compares corpus pairs `0, 1, ...` until both binary classes have at least
/// `per_class` samples or `max_pairs` pairs were used. At most
/// `max_per_page` samples are kept from any one pair, evenly spaced, so a
/// page whose segmentation falls apart cannot dominate the set.
pub fn harvest_samples(
    seed: u64,
    cfg: &CorpusConfig,
    compare: &CompareConfig,
    per_class: usize,
    max_pairs: usize,
    max_per_page: usize,
) -> Result<Vec<LabeledSample>> {
    use rayon::prelude::*;
    const BATCH: usize = 32;
    let mut out: Vec<LabeledSample> = Vec::new();
    let mut counts = [0usize; 2];
    let mut next = 0;
    while next < max_pairs && counts.iter().any(|&c| c < per_class) {
        let end = (next + BATCH).min(max_pairs);
        // pages are compared in parallel but consumed in index order
        let batch: Vec<Vec<LabeledSample>> = (next..end)
            .into_par_iter()
            .map(|i| {
                let pair = gen_pair(i, seed, cfg)?;
                let (b, t) = pair.render();
                let cmp = CompareConfig {
                    config_index: pair.config_index,
                    ..compare.clone()
                };
                let report = compare_pages(&b, &t, &cmp, None)?;
                samples_from_report(&report, &pair, mix_seed(seed, i as u64))
            })
            .collect::<Result<_>>()?;
        for samples in batch {
            if counts.iter().all(|&c| c >= per_class) {
                break;
            }
            let n = samples.len();
            let keep = n.min(max_per_page);
            for k in 0..keep {
                let s = samples[k * n / keep].clone();
                counts[s.binary_label.expect("set above").index()] += 1;
                out.push(s);
            }
        }
        next = end;
    }
    Ok(out)
}

/// Quaternary class of a severity, for tests and tooling.
pub fn severity_class(severity: u8) -> Result<Quaternary> {
    Quaternary::from_class(severity)
}
