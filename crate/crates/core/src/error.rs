use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster dimensions {width}x{height}x{channels} for {len} bytes")]
    InvalidDimensions {
        width: u32,
        height: u32,
        channels: u8,
        len: usize,
    },

    #[error("expected {expected} channel(s), got {actual}")]
    ChannelMismatch { expected: &'static str, actual: u8 },

    #[error("region of interest is empty")]
    EmptyRoi,

    #[error("region of interest has zero intensity mass")]
    ZeroMass,

    #[error("template {tw}x{th} at ({x}, {y}) does not fit inside {sw}x{sh} search image")]
    PlacementOutOfBounds {
        tw: u32,
        th: u32,
        x: u32,
        y: u32,
        sw: u32,
        sh: u32,
    },

    #[error("page widths differ: baseline {baseline}px, under test {under_test}px")]
    ResolutionMismatch { baseline: u32, under_test: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not enough {class} samples: need {needed}, found {available}")]
    InsufficientClass {
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("pair {pair_id} has {available} rating(s), {needed} required")]
    TooFewRatings {
        pair_id: String,
        needed: usize,
        available: usize,
    },

    #[error("rating {0} outside 1..=4")]
    InvalidRating(u8),

    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("pair has neither a baseline nor an under-test region")]
    EmptyPair,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
