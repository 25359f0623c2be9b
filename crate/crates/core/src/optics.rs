//! Thin-lens circle of confusion and depth → signed defocus radius.
//!
//! Sign convention used throughout the crate: a positive radius means the
//! scene point lies behind the focal plane, a negative radius means it lies
//! in front of it. The sign selects the orientation of the half-CoC kernel.

use rayon::prelude::*;

use crate::{Error, Result};

/// Default cap on the absolute blur radius, in pixels.
pub const DEFAULT_MAX_RADIUS_PX: f64 = 25.0;

/// Thin-lens camera parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraParams {
    pub focal_length_mm: f64,
    pub f_number: f64,
    pub focus_distance_mm: f64,
    /// Sensor-plane scale converting CoC millimetres into pixels.
    pub pixels_per_mm: f64,
}

impl CameraParams {
    pub fn new(
        focal_length_mm: f64,
        f_number: f64,
        focus_distance_mm: f64,
        pixels_per_mm: f64,
    ) -> Result<Self> {
        let params = CameraParams {
            focal_length_mm,
            f_number,
            focus_distance_mm,
            pixels_per_mm,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive(self.focal_length_mm, "focal length")?;
        positive(self.f_number, "f-number")?;
        positive(self.focus_distance_mm, "focus distance")?;
        positive(self.pixels_per_mm, "pixels per mm")?;
        if self.focus_distance_mm <= self.focal_length_mm {
            return Err(Error::param(format!(
                "focus distance ({} mm) must exceed the focal length ({} mm)",
                self.focus_distance_mm, self.focal_length_mm
            )));
        }
        Ok(())
    }
}

/// Lens-to-sensor distance `f·s / (s − f)` in mm.
pub fn image_distance(params: &CameraParams) -> Result<f64> {
    params.validate()?;
    let f = params.focal_length_mm;
    let s = params.focus_distance_mm;
    Ok(f * s / (s - f))
}

/// Aperture diameter `f / F` in mm.
pub fn aperture_diameter(params: &CameraParams) -> Result<f64> {
    params.validate()?;
    Ok(params.focal_length_mm / params.f_number)
}

/// Signed CoC radius in mm for a point at distance `d` mm.
///
/// Zero exactly at the focus distance, negative in front of it.
pub fn coc_radius_mm(params: &CameraParams, d: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidDepth(format!(
            "scene distance must be positive and finite, got {d}"
        )));
    }
    let q = aperture_diameter(params)?;
    let s_img = image_distance(params)?;
    let s = params.focus_distance_mm;
    Ok(q / 2.0 * (s_img / s) * ((d - s) / d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepthMode {
    /// Metric scene distance in mm.
    Physical,
    /// Normalized disparity in `[0, 1]`, larger is nearer.
    Artistic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    mode: DepthMode,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, mode: DepthMode) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDepth("depth map is empty".into()));
        }
        if values.len() != width * height {
            return Err(Error::InvalidDepth(format!(
                "depth map has {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        let bad = match mode {
            DepthMode::Physical => values.iter().position(|v| !(v.is_finite() && *v > 0.0)),
            DepthMode::Artistic => values.iter().position(|v| !(0.0..=1.0).contains(v)),
        };
        if let Some(i) = bad {
            let what = match mode {
                DepthMode::Physical => "metric depth must be positive and finite",
                DepthMode::Artistic => "disparity must lie in [0, 1]",
            };
            return Err(Error::InvalidDepth(format!(
                "{what}; got {} at ({}, {})",
                values[i],
                i % width,
                i / width
            )));
        }
        Ok(DepthMap {
            width,
            height,
            values,
            mode,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64, mode: DepthMode) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], mode)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mode(&self) -> DepthMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Per-pixel signed blur radius in pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DefocusMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DefocusMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::param(format!(
                "defocus map has {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "defocus radius must be finite, got {v}"
            )));
        }
        Ok(DefocusMap {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, radius: f64) -> Self {
        Self::new(width, height, vec![radius; width * height]).expect("finite radius")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values).expect("finite radii")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn flip_horizontal(&self) -> DefocusMap {
        let w = self.width;
        DefocusMap::from_fn(w, self.height, |x, y| self.get(w - 1 - x, y))
    }
}

/// Binary subject mask; `true` marks pixels that must stay sharp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationMask {
    width: usize,
    height: usize,
    subject: Vec<bool>,
}

impl SegmentationMask {
    pub fn new(width: usize, height: usize, subject: Vec<bool>) -> Result<Self> {
        if subject.len() != width * height {
            return Err(Error::param(format!(
                "mask has {} values, expected {}",
                subject.len(),
                width * height
            )));
        }
        Ok(SegmentationMask {
            width,
            height,
            subject,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut subject = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                subject.push(f(x, y));
            }
        }
        SegmentationMask {
            width,
            height,
            subject,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_subject(&self, x: usize, y: usize) -> bool {
        self.subject[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.subject
    }

    pub fn flip_horizontal(&self) -> SegmentationMask {
        let w = self.width;
        SegmentationMask::from_fn(w, self.height, |x, y| self.is_subject(w - 1 - x, y))
    }
}

/// How depth values become blur radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DefocusModel {
    Physical(CameraParams),
    /// `focus_disparity` is the normalized disparity rendered sharp.
    Artistic {
        focus_disparity: f64,
    },
}

/// Converts a depth map into a signed defocus map.
///
/// Physical depth goes through the thin-lens CoC and is clamped to
/// `±max_radius_px`. Artistic disparity is mapped linearly so that the
/// farthest possible offset from the focus disparity reaches
/// `max_radius_px`; nearer-than-focus (higher disparity) pixels come out
/// negative. Subject pixels of `seg_mask` are forced to exactly zero.
pub fn defocus_map(
    model: &DefocusModel,
    depth: &DepthMap,
    seg_mask: Option<&SegmentationMask>,
    max_radius_px: f64,
) -> Result<DefocusMap> {
    if !(max_radius_px.is_finite() && max_radius_px >= 0.0) {
        return Err(Error::param(format!(
            "max radius must be non-negative and finite, got {max_radius_px}"
        )));
    }
    if let Some(mask) = seg_mask {
        if mask.width() != depth.width() || mask.height() != depth.height() {
            return Err(Error::DimensionMismatch {
                what: "segmentation mask",
                got_w: mask.width(),
                got_h: mask.height(),
                want_w: depth.width(),
                want_h: depth.height(),
            });
        }
    }

    let mut values: Vec<f64> = match (model, depth.mode()) {
        (DefocusModel::Physical(params), DepthMode::Physical) => {
            params.validate()?;
            let scale = params.pixels_per_mm;
            depth
                .values()
                .par_iter()
                .map(|&d| {
                    coc_radius_mm(params, d)
                        .map(|r| (scale * r).clamp(-max_radius_px, max_radius_px))
                })
                .collect::<Result<_>>()?
        }
        (DefocusModel::Artistic { focus_disparity }, DepthMode::Artistic) => {
            let fd = *focus_disparity;
            if !(0.0..=1.0).contains(&fd) {
                return Err(Error::param(format!(
                    "focus disparity must lie in [0, 1], got {fd}"
                )));
            }
            let span = fd.max(1.0 - fd);
            depth
                .values()
                .par_iter()
                .map(|&disp| max_radius_px * (fd - disp) / span)
                .collect()
        }
        (DefocusModel::Physical(_), DepthMode::Artistic) => {
            return Err(Error::param(
                "physical defocus model needs a metric depth map",
            ));
        }
        (DefocusModel::Artistic { .. }, DepthMode::Physical) => {
            return Err(Error::param(
                "artistic defocus model needs a normalized disparity map",
            ));
        }
    };

    if let Some(mask) = seg_mask {
        for (v, &subject) in values.iter_mut().zip(mask.as_slice()) {
            if subject {
                *v = 0.0;
            }
        }
    }
    // canonical +0.0 for in-focus pixels
    for v in &mut values {
        if *v == 0.0 {
            *v = 0.0;
        }
    }
    DefocusMap::new(depth.width(), depth.height(), values)
}
