//! Depth-layer decomposition in signed-radius space.
//!
//! Each pixel belongs to exactly one layer (hard assignment), so coverage
//! masks partition the image and premultiplied colors sum back to the
//! input exactly. Layers are ordered back to front, which under the sign
//! convention of [`crate::optics`] is simply descending signed radius.

use std::collections::BTreeMap;

use crate::optics::SegmentationMask;
use crate::{DefocusMap, Error, Plane, Result};

/// Upper bound on the number of depth layers.
pub const MAX_LAYERS: usize = 500;

/// Radii closer than this are treated as the same blur when counting
/// distinct values.
pub const RADIUS_GRANULARITY: f64 = 0.25;

/// Inclusive pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    fn point(x: usize, y: usize) -> Rect {
        Rect {
            x0: x,
            y0: y,
            x1: x,
            y1: y,
        }
    }

    fn include(&mut self, x: usize, y: usize) {
        self.x0 = self.x0.min(x);
        self.y0 = self.y0.min(y);
        self.x1 = self.x1.max(x);
        self.y1 = self.y1.max(y);
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    /// Grow by `margin` on every side, clipped to a `width × height` image.
    pub fn dilate(&self, margin: usize, width: usize, height: usize) -> Rect {
        Rect {
            x0: self.x0.saturating_sub(margin),
            y0: self.y0.saturating_sub(margin),
            x1: (self.x1 + margin).min(width - 1),
            y1: (self.y1 + margin).min(height - 1),
        }
    }
}

/// One radius slice of the image.
///
/// Coverage is binary: 1 on `pixels`, 0 elsewhere. `colors` holds the
/// image samples of those pixels (`channels` per pixel, pixel-major), which
/// is the premultiplied color plane restricted to the layer's support.
#[derive(Clone, Debug)]
pub struct DepthLayer {
    radius_px: f64,
    pixels: Vec<u32>,
    colors: Vec<f64>,
    bbox: Rect,
}

impl DepthLayer {
    pub fn radius_px(&self) -> f64 {
        self.radius_px
    }

    /// Linear indices `y * width + x` of covered pixels, ascending.
    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }

    pub fn colors(&self) -> &[f64] {
        &self.colors
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Layers ordered back to front (index 0 is farthest).
#[derive(Clone, Debug)]
pub struct LayerStack {
    width: usize,
    height: usize,
    channels: usize,
    layers: Vec<DepthLayer>,
    bin_width: f64,
    pinned: Option<Vec<bool>>,
}

impl LayerStack {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn layers(&self) -> &[DepthLayer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Spacing between representative radii; zero for a single layer.
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn max_abs_radius(&self) -> f64 {
        self.layers
            .iter()
            .fold(0.0, |m, l| m.max(l.radius_px.abs()))
    }

    /// Marks subject pixels that every rendered view must reproduce
    /// unchanged, regardless of what nearer layers spill over them.
    pub fn with_pinned(mut self, mask: &SegmentationMask) -> Result<Self> {
        if mask.width() != self.width || mask.height() != self.height {
            return Err(Error::DimensionMismatch {
                what: "segmentation mask",
                got_w: mask.width(),
                got_h: mask.height(),
                want_w: self.width,
                want_h: self.height,
            });
        }
        self.pinned = Some(mask.as_slice().to_vec());
        Ok(self)
    }

    pub fn pinned(&self) -> Option<&[bool]> {
        self.pinned.as_deref()
    }

    /// Dense coverage mask of layer `i`.
    pub fn coverage_plane(&self, i: usize) -> Plane {
        let mut plane = Plane::new(self.width, self.height, 1);
        let data = plane.data_mut();
        for &p in &self.layers[i].pixels {
            data[p as usize] = 1.0;
        }
        plane
    }

    /// Dense premultiplied color plane of layer `i`.
    pub fn color_plane(&self, i: usize) -> Plane {
        let n = self.width * self.height;
        let layer = &self.layers[i];
        let mut plane = Plane::new(self.width, self.height, self.channels);
        let data = plane.data_mut();
        for (k, &p) in layer.pixels.iter().enumerate() {
            for c in 0..self.channels {
                data[c * n + p as usize] = layer.colors[k * self.channels + c];
            }
        }
        plane
    }
}

/// Maps a signed radius to a layer index and provides representatives.
enum Binning {
    /// One layer per occupied 0.25 px cell.
    Cells { index: BTreeMap<i64, usize> },
    /// Uniform grid `origin + k·step`, `k` relative to `k_min`.
    Grid {
        origin: f64,
        step: f64,
        k_min: i64,
        count: usize,
    },
}

fn cell_of(r: f64) -> i64 {
    (r / RADIUS_GRANULARITY).round() as i64
}

impl Binning {
    fn bin(&self, r: f64) -> usize {
        match self {
            Binning::Cells { index } => index[&cell_of(r)],
            Binning::Grid {
                origin,
                step,
                k_min,
                count,
            } => {
                let k = ((r - origin) / step).round() as i64;
                (k - k_min).clamp(0, *count as i64 - 1) as usize
            }
        }
    }
}

/// Grid over `[min, max]` with at most `bins` centres. When the range
/// straddles zero the grid is anchored at zero so that in-focus pixels get
/// an exact zero representative.
fn uniform_grid(min: f64, max: f64, bins: usize) -> Binning {
    let range = max - min;
    if !(min < 0.0 && max > 0.0) {
        return Binning::Grid {
            origin: min,
            step: range / (bins - 1) as f64,
            k_min: 0,
            count: bins,
        };
    }
    let count_for = |step: f64| {
        let k_min = (min / step).round() as i64;
        let k_max = (max / step).round() as i64;
        (k_min, (k_max - k_min + 1) as usize)
    };
    // smallest step whose anchored grid fits the layer budget
    let mut hi = range / (bins.saturating_sub(2).max(1)) as f64;
    while count_for(hi).1 > bins {
        hi *= 2.0;
    }
    let mut lo = range / bins as f64;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if count_for(mid).1 <= bins {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (k_min, count) = count_for(hi);
    Binning::Grid {
        origin: 0.0,
        step: hi,
        k_min,
        count,
    }
}

/// Splits `image` into back-to-front depth layers by signed blur radius.
///
/// With at most `max_layers` distinct radii (counted at 0.25 px
/// granularity) every occupied cell becomes its own layer, represented by
/// the midpoint of its members' radii; the cell around zero is represented
/// by exactly 0. Beyond that budget the radius range is covered by a
/// uniform grid of `max_layers` centres (anchored at zero when the range
/// straddles the focal plane). Empty bins are dropped.
pub fn quantize_layers(
    image: &Plane,
    defocus: &DefocusMap,
    max_layers: usize,
) -> Result<LayerStack> {
    if max_layers == 0 {
        return Err(Error::param("max_layers must be at least 1"));
    }
    if image.width() != defocus.width() || image.height() != defocus.height() {
        return Err(Error::DimensionMismatch {
            what: "defocus map",
            got_w: defocus.width(),
            got_h: defocus.height(),
            want_w: image.width(),
            want_h: image.height(),
        });
    }
    let (width, height, channels) = (image.width(), image.height(), image.channels());
    let radii = defocus.values();
    if radii.is_empty() {
        return Err(Error::param("image is empty"));
    }

    let mut cells: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &r in radii {
        cells
            .entry(cell_of(r))
            .and_modify(|(lo, hi)| {
                *lo = lo.min(r);
                *hi = hi.max(r);
            })
            .or_insert((r, r));
    }
    let min_r = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_r = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let (binning, reps, bin_width) = if cells.len() <= max_layers {
        let mut index = BTreeMap::new();
        let mut reps = Vec::with_capacity(cells.len());
        for (i, (&cell, &(lo, hi))) in cells.iter().enumerate() {
            index.insert(cell, i);
            reps.push(if cell == 0 { 0.0 } else { 0.5 * (lo + hi) });
        }
        let bin_width = if cells.len() > 1 {
            RADIUS_GRANULARITY
        } else {
            0.0
        };
        (Binning::Cells { index }, reps, bin_width)
    } else if max_layers == 1 {
        let straddles = min_r < 0.0 && max_r > 0.0;
        let rep = if straddles {
            0.0
        } else {
            0.5 * (min_r + max_r)
        };
        let grid = Binning::Grid {
            origin: rep,
            step: 1.0,
            k_min: 0,
            count: 1,
        };
        let width = 2.0 * (max_r - rep).max(rep - min_r);
        (grid, vec![rep], width)
    } else {
        let grid = uniform_grid(min_r, max_r, max_layers);
        let Binning::Grid {
            origin,
            step,
            k_min,
            count,
        } = grid
        else {
            unreachable!()
        };
        let reps = (0..count)
            .map(|i| {
                let k = k_min + i as i64;
                if origin == 0.0 {
                    k as f64 * step
                } else if i + 1 == count && k_min == 0 {
                    max_r
                } else {
                    origin + k as f64 * step
                }
            })
            .collect();
        (grid, reps, step)
    };

    let n_bins = reps.len();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); n_bins];
    for (p, &r) in radii.iter().enumerate() {
        members[binning.bin(r)].push(p as u32);
    }

    let n = width * height;
    let src = image.data();
    let mut layers: Vec<DepthLayer> = members
        .into_iter()
        .zip(reps)
        .filter(|(px, _)| !px.is_empty())
        .map(|(pixels, radius_px)| {
            let first = pixels[0] as usize;
            let mut bbox = Rect::point(first % width, first / width);
            let mut colors = Vec::with_capacity(pixels.len() * channels);
            for &p in &pixels {
                let p = p as usize;
                bbox.include(p % width, p / width);
                for c in 0..channels {
                    colors.push(src[c * n + p]);
                }
            }
            DepthLayer {
                radius_px,
                pixels,
                colors,
                bbox,
            }
        })
        .collect();
    layers.sort_by(|a, b| b.radius_px.total_cmp(&a.radius_px));

    Ok(LayerStack {
        width,
        height,
        channels,
        layers,
        bin_width,
        pinned: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_image(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, 3, |x, y, c| {
            ((x * 3 + y * 5 + c * 7) % 11) as f64 / 10.0
        })
    }

    fn check_partition(stack: &LayerStack, image: &Plane) {
        let mut cov = Plane::new(image.width(), image.height(), 1);
        let mut col = Plane::new(image.width(), image.height(), image.channels());
        for i in 0..stack.len() {
            for (a, b) in cov
                .data_mut()
                .iter_mut()
                .zip(stack.coverage_plane(i).data())
            {
                *a += b;
            }
            for (a, b) in col.data_mut().iter_mut().zip(stack.color_plane(i).data()) {
                *a += b;
            }
        }
        assert!(cov.data().iter().all(|&v| v == 1.0));
        assert!(col.bit_eq(image));
    }

    #[test]
    fn constant_map_gives_one_layer() {
        let img = ramp_image(6, 5);
        let stack = quantize_layers(&img, &DefocusMap::constant(6, 5, 3.0), MAX_LAYERS).unwrap();
        assert_eq!(stack.len(), 1);
        assert_eq!(stack.layers()[0].radius_px(), 3.0);
        assert_eq!(stack.layers()[0].len(), 30);
        check_partition(&stack, &img);
    }

    #[test]
    fn two_values_back_to_front() {
        let img = ramp_image(8, 4);
        let map = DefocusMap::from_fn(8, 4, |x, _| if x < 4 { 0.0 } else { 8.0 });
        let stack = quantize_layers(&img, &map, MAX_LAYERS).unwrap();
        let radii: Vec<f64> = stack.layers().iter().map(|l| l.radius_px()).collect();
        assert_eq!(radii, vec![8.0, 0.0]);
        check_partition(&stack, &img);
    }

    #[test]
    fn thousand_radii_capped_at_500() {
        let (w, h) = (40, 25);
        let img = ramp_image(w, h);
        let map = DefocusMap::from_fn(w, h, |x, y| (y * w + x) as f64 * 0.25);
        let stack = quantize_layers(&img, &map, MAX_LAYERS).unwrap();
        assert_eq!(stack.len(), 500);
        check_partition(&stack, &img);

        // straddling the focal plane, zero must stay an exact representative
        let map = DefocusMap::from_fn(w, h, |x, y| (y * w + x) as f64 * 0.25 - 100.0);
        let stack = quantize_layers(&img, &map, MAX_LAYERS).unwrap();
        assert!(stack.len() <= 500 && stack.len() >= 499, "{}", stack.len());
        assert!(stack.layers().iter().any(|l| l.radius_px() == 0.0));
        check_partition(&stack, &img);
    }

    #[test]
    fn front_layers_come_last() {
        let img = ramp_image(5, 1);
        let map = DefocusMap::new(5, 1, vec![-1.0, 4.0, 0.0, -6.0, 2.0]).unwrap();
        let stack = quantize_layers(&img, &map, MAX_LAYERS).unwrap();
        let radii: Vec<f64> = stack.layers().iter().map(|l| l.radius_px()).collect();
        assert_eq!(radii, vec![4.0, 2.0, 0.0, -1.0, -6.0]);
    }

    #[test]
    fn errors() {
        let img = ramp_image(4, 4);
        assert!(matches!(
            quantize_layers(&img, &DefocusMap::constant(4, 3, 1.0), 10),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(quantize_layers(&img, &DefocusMap::constant(4, 4, 1.0), 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_quantization_error(
            vals in proptest::collection::vec(-30.0f64..30.0, 48),
            max_layers in 1usize..40,
        ) {
            let img = ramp_image(8, 6);
            let map = DefocusMap::new(8, 6, vals.clone()).unwrap();
            let stack = quantize_layers(&img, &map, max_layers).unwrap();
            prop_assert!(stack.len() <= max_layers);
            check_partition(&stack, &img);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if stack.len() > 1 {
                prop_assert!(stack.bin_width() <= max - min + 1e-12);
            }
            for layer in stack.layers() {
                for &p in layer.pixels() {
                    let err = (layer.radius_px() - vals[p as usize]).abs();
                    prop_assert!(err <= stack.bin_width() / 2.0 + 1e-9,
                        "err {} width {}", err, stack.bin_width());
                }
            }
            for pair in stack.layers().windows(2) {
                prop_assert!(pair[0].radius_px() > pair[1].radius_px());
            }
        }
    }
}
