use crate::{Error, Result};

/// A planar image of `f64` samples.
///
/// Samples are stored channel-major: channel `c` occupies
/// `data[c * width * height..(c + 1) * width * height]`, row-major inside.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        assert!(channels > 0, "plane needs at least one channel");
        Plane {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::param("plane needs at least one channel"));
        }
        if data.len() != width * height * channels {
            return Err(Error::param(format!(
                "plane data has {} samples, expected {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Plane {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a plane from `f(x, y, channel)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut plane = Self::new(width, height, channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    plane.set(x, y, c, f(x, y, c));
                }
            }
        }
        plane
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.pixel_count() + y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        let n = self.pixel_count();
        self.data[c * n + y * self.width + x] = value;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixel_count();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Mirror about the central column.
    pub fn flip_horizontal(&self) -> Plane {
        let w = self.width;
        Plane::from_fn(w, self.height, self.channels, |x, y, c| {
            self.get(w - 1 - x, y, c)
        })
    }

    /// Largest absolute per-sample difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert!(self.same_shape(other), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when every sample matches bit for bit.
    pub fn bit_eq(&self, other: &Plane) -> bool {
        self.same_shape(other)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Element-wise `(self + other) / 2`.
    pub fn mean_with(&self, other: &Plane) -> Plane {
        assert!(self.same_shape(other), "shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a + b) * 0.5)
            .collect();
        Plane { data, ..*self }
    }
}
