//! Seeded synthetic scenes for benchmarks, demos and tests.

use std::path::{Path, PathBuf};

use dpview::io::{self, Encoding};
use dpview::{DefocusMap, Plane, Result, SegmentationMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth color texture with seeded sinusoids plus mild noise.
pub fn texture(width: usize, height: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 3]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(0.02..0.2),
                rng.gen_range(0.02..0.2),
                rng.gen_range(0.0..6.3),
            ]
        })
        .collect();
    let noise: Vec<f64> = (0..width * height * 3)
        .map(|_| rng.gen_range(-0.05..0.05))
        .collect();
    Plane::from_fn(width, height, 3, |x, y, c| {
        let [fx, fy, ph] = waves[c];
        let v = 0.5 + 0.4 * (fx * x as f64 + fy * y as f64 + ph).sin();
        (v + noise[(c * height + y) * width + x]).clamp(0.0, 1.0)
    })
}

/// Defocus map with `layers` distinct radii whose magnitudes span
/// `[radius/2, radius]` with alternating sign, assigned to pixels by a seeded
/// draw so every layer covers the whole frame. One layer uses `radius`.
pub fn layered_defocus(
    width: usize,
    height: usize,
    radius: f64,
    layers: usize,
    seed: u64,
) -> DefocusMap {
    let layers = layers.max(1);
    let levels: Vec<f64> = (0..layers)
        .map(|i| {
            if layers == 1 {
                return radius;
            }
            let mag = radius * (0.5 + 0.5 * i as f64 / (layers - 1) as f64);
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<f64> = (0..width * height)
        .map(|_| levels[rng.gen_range(0..layers)])
        .collect();
    DefocusMap::new(width, height, picks).expect("sizes agree")
}

/// Background with a vertical disparity ramp and a few isolated bright dots,
/// plus an in-focus elliptical subject covered by the mask.
#[derive(Clone, Debug)]
pub struct Portrait {
    pub image: Plane,
    pub disparity: Vec<f64>,
    pub mask: SegmentationMask,
    /// Dot centers in pixels.
    pub dots: Vec<(f64, f64)>,
    pub dot_radius: f64,
}

pub const BACKGROUND_LEVEL: f64 = 0.04;

pub fn portrait(width: usize, height: usize, seed: u64) -> Portrait {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = (width as f64 * 0.5, height as f64 * 0.62);
    let (ax, ay) = (width as f64 * 0.18, height as f64 * 0.3);
    let inside = |x: usize, y: usize| {
        let (dx, dy) = ((x as f64 + 0.5 - cx) / ax, (y as f64 + 0.5 - cy) / ay);
        dx * dx + dy * dy <= 1.0
    };
    let mask = SegmentationMask::from_fn(width, height, inside);

    let dot_radius = 1.5;
    let spacing = (width / 4).max(8) as f64;
    let dots: Vec<(f64, f64)> = (0..3)
        .map(|i| {
            (
                spacing * (i as f64 + 0.5) + width as f64 * 0.125,
                height as f64 * 0.16,
            )
        })
        .collect();

    let skin = texture(width, height, rng.gen());
    let image = Plane::from_fn(width, height, 3, |x, y, c| {
        if inside(x, y) {
            return skin.get(x, y, c);
        }
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let lit = dots
            .iter()
            .any(|&(dx, dy)| (px - dx).powi(2) + (py - dy).powi(2) <= dot_radius * dot_radius);
        if lit {
            0.95
        } else {
            BACKGROUND_LEVEL
        }
    });
    let disparity = (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            if inside(x, y) {
                1.0
            } else {
                0.6 * y as f64 / (height - 1).max(1) as f64
            }
        })
        .collect();
    Portrait {
        image,
        disparity,
        mask,
        dots,
        dot_radius,
    }
}

impl Portrait {
    /// Writes `image.png` (sRGB), `depth.png` (16-bit disparity) and
    /// `mask.png` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<[PathBuf; 3]> {
        std::fs::create_dir_all(dir).map_err(|source| dpview::Error::Io {
            path: dir.into(),
            source,
        })?;
        let (w, h) = (self.image.width(), self.image.height());
        let image = dir.join("image.png");
        let depth = dir.join("depth.png");
        let mask = dir.join("mask.png");
        io::write_png(&image, &self.image, Encoding::Srgb)?;
        io::write_gray16_png(&depth, w, h, &self.disparity)?;
        let m = Plane::from_fn(
            w,
            h,
            1,
            |x, y, _| if self.mask.is_subject(x, y) { 1.0 } else { 0.0 },
        );
        io::write_png(&mask, &m, Encoding::Linear)?;
        Ok([image, depth, mask])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_seeded() {
        assert!(texture(16, 8, 3).bit_eq(&texture(16, 8, 3)));
        assert!(!texture(16, 8, 3).bit_eq(&texture(16, 8, 4)));
        let a = portrait(64, 64, 1);
        let b = portrait(64, 64, 1);
        assert!(a.image.bit_eq(&b.image));
        assert_eq!(a.disparity, b.disparity);
    }

    #[test]
    fn layers_span_the_radius_band() {
        let map = layered_defocus(40, 40, 8.0, 5, 1);
        let mut levels: Vec<f64> = map.values().to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels, vec![-7.0, -5.0, 4.0, 6.0, 8.0]);
        assert!(layered_defocus(10, 2, 3.0, 1, 0)
            .values()
            .iter()
            .all(|&r| r == 3.0));
    }

    #[test]
    fn dots_sit_on_dark_background_outside_subject() {
        let p = portrait(128, 128, 7);
        for &(x, y) in &p.dots {
            assert!(!p.mask.is_subject(x as usize, y as usize));
            assert_eq!(p.image.get(x as usize, y as usize, 0), 0.95);
        }
    }
}
