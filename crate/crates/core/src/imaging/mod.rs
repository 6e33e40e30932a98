//! Pixel-level primitives: rasters and masks, grayscale conversion, Harris
//! corners, line dilation, blob labelling, histograms and SSD.

mod color;
mod components;
mod harris;
mod histogram;
mod morphology;
mod raster;
mod ssd;

pub use color::{luma, to_grayscale};
pub use components::{connected_components, label_components, Blob};
pub use harris::{harris_corners, harris_response, GradientKernel, HarrisParams};
pub use histogram::{bin_index, histogram10, histogram10_counts, HISTOGRAM_BINS};
pub use morphology::dilate_hv;
pub use raster::{BinaryMask, GrayView, Raster, Rect};
pub use ssd::{best_placement, ncc, ssd, Placement};
