//! A fully specified render request and the input preparation it drives.

use std::path::PathBuf;

use crate::io::{self, ImagePlane};
use crate::layering::{quantize_layers, LayerStack, MAX_LAYERS};
use crate::optics::{self, CameraParams, DefocusMap, DefocusModel, DepthMode, SegmentationMask};
use crate::psf::PsfFamily;
use crate::{Error, Result};

pub const DEFAULT_VIEWS: usize = 8;
pub const DEFAULT_FPS: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderJob {
    pub image: PathBuf,
    pub depth: PathBuf,
    pub mask: Option<PathBuf>,
    pub mode: DepthMode,
    /// Required in physical mode.
    pub camera: Option<CameraParams>,
    /// Used in artistic mode.
    pub focus_disparity: f64,
    pub max_radius_px: f64,
    pub max_layers: usize,
    pub n_views: usize,
    pub psf: PsfFamily,
    pub out_dir: PathBuf,
    pub fps: u32,
    pub gif: bool,
    pub linearize: bool,
}

impl RenderJob {
    pub fn new(image: impl Into<PathBuf>, depth: impl Into<PathBuf>) -> Self {
        RenderJob {
            image: image.into(),
            depth: depth.into(),
            mask: None,
            mode: DepthMode::Artistic,
            camera: None,
            focus_disparity: 1.0,
            max_radius_px: optics::DEFAULT_MAX_RADIUS_PX,
            max_layers: MAX_LAYERS,
            n_views: DEFAULT_VIEWS,
            psf: PsfFamily::Dp,
            out_dir: PathBuf::from("out"),
            fps: DEFAULT_FPS,
            gif: false,
            linearize: true,
        }
    }

    /// Parameter checks that need no file access.
    pub fn validate_params(&self) -> Result<()> {
        if !(self.max_radius_px.is_finite() && self.max_radius_px >= 0.0) {
            return Err(Error::param(format!(
                "max radius must be non-negative, got {}",
                self.max_radius_px
            )));
        }
        if self.max_layers == 0 || self.max_layers > MAX_LAYERS {
            return Err(Error::param(format!(
                "max layers must be in 1..={MAX_LAYERS}, got {}",
                self.max_layers
            )));
        }
        crate::psf::view_angles(self.n_views)?;
        if !(1..=100).contains(&self.fps) {
            return Err(Error::param(format!(
                "fps must be in 1..=100, got {}",
                self.fps
            )));
        }
        match self.mode {
            DepthMode::Physical => match &self.camera {
                Some(cam) => cam.validate()?,
                None => return Err(Error::param(
                    "physical mode needs focal length, f-number, focus distance and pixels per mm",
                )),
            },
            DepthMode::Artistic => {
                if !(0.0..=1.0).contains(&self.focus_disparity) {
                    return Err(Error::param(format!(
                        "focus disparity must lie in [0, 1], got {}",
                        self.focus_disparity
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parameter checks plus existence of every referenced input file.
    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        let inputs = [Some(&self.image), Some(&self.depth), self.mask.as_ref()];
        for path in inputs.into_iter().flatten() {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }

    pub fn defocus_model(&self) -> Result<DefocusModel> {
        match self.mode {
            DepthMode::Physical => self
                .camera
                .map(DefocusModel::Physical)
                .ok_or_else(|| Error::param("physical mode needs camera parameters")),
            DepthMode::Artistic => Ok(DefocusModel::Artistic {
                focus_disparity: self.focus_disparity,
            }),
        }
    }
}

/// Loaded and validated inputs, ready to render.
#[derive(Clone, Debug)]
pub struct PreparedScene {
    pub image: ImagePlane,
    pub defocus: DefocusMap,
    pub mask: Option<SegmentationMask>,
    pub stack: LayerStack,
}

fn check_dims(what: &'static str, w: usize, h: usize, image: &ImagePlane) -> Result<()> {
    if w != image.plane.width() || h != image.plane.height() {
        return Err(Error::DimensionMismatch {
            what,
            got_w: w,
            got_h: h,
            want_w: image.plane.width(),
            want_h: image.plane.height(),
        });
    }
    Ok(())
}

/// Loads the inputs of `job`, checks that their dimensions agree, and
/// builds the defocus map and layer stack. Subject pixels are pinned.
pub fn prepare(job: &RenderJob) -> Result<PreparedScene> {
    job.validate()?;
    let image = io::load_image(&job.image, job.linearize)?;
    let depth = io::load_depth(&job.depth, job.mode)?;
    check_dims("depth map", depth.width(), depth.height(), &image)?;
    let mask = job.mask.as_ref().map(io::load_mask).transpose()?;
    if let Some(m) = &mask {
        check_dims("segmentation mask", m.width(), m.height(), &image)?;
    }
    let defocus = optics::defocus_map(
        &job.defocus_model()?,
        &depth,
        mask.as_ref(),
        job.max_radius_px,
    )?;
    let mut stack = quantize_layers(&image.plane, &defocus, job.max_layers)?;
    if let Some(m) = &mask {
        stack = stack.with_pinned(m)?;
    }
    Ok(PreparedScene {
        image,
        defocus,
        mask,
        stack,
    })
}
