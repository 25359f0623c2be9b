//! Synthetic shallow depth of field, dual-pixel (DP) view pairs and
//! rotated-kernel multi-view image motion from a single all-in-focus image
//! and a depth map.
//!
//! The pipeline is:
//!
//! 1. [`optics`] turns depth into a signed per-pixel blur radius.
//! 2. [`layering`] slices the image into depth layers ordered back to front.
//! 3. [`psf`] builds the per-layer blur kernels (disk, DP half-CoC, ramp).
//! 4. [`renderer`] blurs and composites the layers into views.
//! 5. [`io`] loads the inputs and writes frames, the bokeh image and a GIF.
//!
//! [`oracle`] is a brute-force reference renderer used by the test suites.

pub mod error;
pub mod io;
pub mod job;
pub mod layering;
pub mod optics;
pub mod oracle;
pub mod plane;
pub mod psf;
pub mod renderer;

pub use error::{Error, ErrorKind, Result};
pub use job::{prepare, PreparedScene, RenderJob};
pub use layering::{quantize_layers, DepthLayer, LayerStack, MAX_LAYERS};
pub use optics::{CameraParams, DefocusMap, DefocusModel, DepthMap, DepthMode, SegmentationMask};
pub use plane::Plane;
pub use psf::{Kernel, KernelFamily, PsfFamily};
pub use renderer::{render_bokeh, render_dp_pair, render_view, render_views, ViewSet};
