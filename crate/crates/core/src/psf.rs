//! Blur kernels: uniform disk, directional ramp masks, DP half-CoC kernels,
//! the full-square ramp variant and rotated banks for multi-view rendering.
//!
//! Grid convention: `x` grows rightward, `y` grows downward, the origin is
//! the centre cell, and an angle `θ` is measured clockwise from `+x` (which
//! is counter-clockwise in the usual maths sense, since `y` points down).
//! A ramp mask at angle `θ` falls off *towards* `θ`, so `θ = 0` gives the
//! left DP kernel whose weight decreases to the right.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// Uniform disk.
    Disk,
    /// Disk windowed by a linear ramp (half-CoC).
    Dp,
    /// Linear ramp over the full square support.
    Ramp,
    /// Uniform square, the direction-free counterpart of `Ramp`.
    Box,
}

/// Directional kernel shapes selectable for view synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum PsfFamily {
    #[default]
    Dp,
    Ramp,
}

impl PsfFamily {
    /// Directional kernel at `theta_deg`.
    pub fn kernel(self, radius_px: f64, theta_deg: f64) -> Kernel {
        match self {
            PsfFamily::Dp => dp_kernel(radius_px, theta_deg),
            PsfFamily::Ramp => ramp_psf(radius_px, theta_deg),
        }
    }

    /// The average of the kernels at `θ` and `θ + 180`, independent of `θ`.
    pub fn symmetric(self, radius_px: f64) -> Kernel {
        match self {
            PsfFamily::Dp => disk(radius_px.abs()),
            PsfFamily::Ramp => box_kernel(radius_px.abs()),
        }
    }

    pub fn kernel_family(self) -> KernelFamily {
        match self {
            PsfFamily::Dp => KernelFamily::Dp,
            PsfFamily::Ramp => KernelFamily::Ramp,
        }
    }
}

impl fmt::Display for PsfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsfFamily::Dp => "dp",
            PsfFamily::Ramp => "ramp",
        })
    }
}

impl FromStr for PsfFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dp" => Ok(PsfFamily::Dp),
            "ramp" => Ok(PsfFamily::Ramp),
            other => Err(Error::param(format!(
                "unknown psf family '{other}' (use dp or ramp)"
            ))),
        }
    }
}

/// Square, odd-sided, non-negative kernel whose weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    side: usize,
    weights: Vec<f64>,
    radius_px: f64,
    theta_deg: f64,
    family: KernelFamily,
}

/// One row of non-zero kernel weights, used by the scatter renderer.
#[derive(Clone, Debug)]
pub struct KernelRow {
    pub dy: isize,
    pub dx0: isize,
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn identity() -> Kernel {
        disk(0.0)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn half(&self) -> usize {
        self.side / 2
    }

    /// Row-major weights, `side * side` of them.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radius_px(&self) -> f64 {
        self.radius_px
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn is_identity(&self) -> bool {
        self.side == 1
    }

    /// Weight at offset `(dx, dy)` from the centre; zero outside the grid.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let h = self.half() as isize;
        if dx.abs() > h || dy.abs() > h {
            return 0.0;
        }
        self.weights[((dy + h) as usize) * self.side + (dx + h) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Non-empty rows, each trimmed to the span of non-zero weights.
    pub fn rows(&self) -> Vec<KernelRow> {
        let h = self.half() as isize;
        self.weights
            .chunks_exact(self.side)
            .enumerate()
            .filter_map(|(j, row)| {
                let first = row.iter().position(|&w| w != 0.0)?;
                let last = row.iter().rposition(|&w| w != 0.0)?;
                Some(KernelRow {
                    dy: j as isize - h,
                    dx0: first as isize - h,
                    weights: row[first..=last].to_vec(),
                })
            })
            .collect()
    }

    /// Plain-text dump, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {:?} radius={} theta={} side={}",
            self.family, self.radius_px, self.theta_deg, self.side
        );
        for row in self.weights.chunks_exact(self.side) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:.6e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// 8-bit grayscale rendering with the largest weight mapped to white.
    pub fn to_gray8(&self) -> Vec<u8> {
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        self.weights
            .iter()
            .map(|&w| {
                if max > 0.0 {
                    (w / max * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect()
    }
}

/// `2·ceil(|r|) + 1`.
pub fn kernel_side(radius_px: f64) -> usize {
    assert!(radius_px.is_finite(), "kernel radius must be finite");
    2 * radius_px.abs().ceil() as usize + 1
}

/// Unit direction for an angle in degrees. `direction(θ + 180)` is the exact
/// negation of `direction(θ)`, and multiples of 90 are exact.
fn direction(theta_deg: f64) -> (f64, f64) {
    let t = theta_deg.rem_euclid(360.0);
    if t >= 180.0 {
        let (c, s) = direction(t - 180.0);
        return (-c, -s);
    }
    if t == 0.0 {
        (1.0, 0.0)
    } else if t == 90.0 {
        (0.0, 1.0)
    } else {
        let rad = t.to_radians();
        (rad.cos(), rad.sin())
    }
}

fn normalize_angle(theta_deg: f64) -> f64 {
    let t = theta_deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

fn ramp_with_scale(side: usize, theta_deg: f64, scale: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    assert!(side % 2 == 1, "ramp mask side must be odd, got {side}");
    let h = (side / 2) as isize;
    let (c, s) = direction(theta_deg);
    let top = scale(h as f64, c, s);
    let denom = 2.0 * top;
    let mut out = Vec::with_capacity(side * side);
    for y in -h..=h {
        for x in -h..=h {
            let p = x as f64 * c + y as f64 * s;
            out.push((top - p) / denom);
        }
    }
    out
}

/// Linear ramp `(h + 1 − p) / (2(h + 1))` with `p = x·cos θ + y·sin θ`.
///
/// `M_θ + M_{θ+180} = 1`. Values lie strictly inside `(0, 1)` on every cell
/// within distance `h` of the centre, which covers any disk kernel of this
/// side; square corners at oblique angles can fall outside.
pub fn ramp_mask(side: usize, theta_deg: f64) -> Vec<f64> {
    ramp_with_scale(side, theta_deg, |h, _, _| h + 1.0)
}

/// Ramp with the scale `h + 1` replaced by `h·(|cos θ| + |sin θ|) + 1`, the
/// largest projection over the square plus one, so the whole square stays
/// inside `(0, 1)`. Identical to [`ramp_mask`] on the axes.
pub fn square_ramp_mask(side: usize, theta_deg: f64) -> Vec<f64> {
    ramp_with_scale(side, theta_deg, |h, c, s| h * (c.abs() + s.abs()) + 1.0)
}

fn disk_support(side: usize, radius_px: f64) -> Vec<bool> {
    let h = (side / 2) as isize;
    let r2 = radius_px * radius_px;
    let mut out = Vec::with_capacity(side * side);
    for y in -h..=h {
        for x in -h..=h {
            out.push(((x * x + y * y) as f64) <= r2);
        }
    }
    out
}

/// Divides by the total. The total is accumulated over the sorted weights so
/// that any grid symmetry (flip, 180° turn) yields a bitwise-identical
/// normalizer.
fn normalize(mut weights: Vec<f64>) -> Vec<f64> {
    let mut sorted = weights.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    assert!(total > 0.0, "kernel has no support");
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Uniform disk over cells whose centre lies within `radius_px`.
pub fn disk(radius_px: f64) -> Kernel {
    let r = radius_px.abs();
    let side = kernel_side(r);
    let weights = disk_support(side, r)
        .into_iter()
        .map(|inside| if inside { 1.0 } else { 0.0 })
        .collect();
    Kernel {
        side,
        weights: normalize(weights),
        radius_px: r,
        theta_deg: 0.0,
        family: KernelFamily::Disk,
    }
}

/// Uniform square of side `2·ceil(|r|) + 1`.
pub fn box_kernel(radius_px: f64) -> Kernel {
    let r = radius_px.abs();
    let side = kernel_side(r);
    Kernel {
        side,
        weights: normalize(vec![1.0; side * side]),
        radius_px: r,
        theta_deg: 0.0,
        family: KernelFamily::Box,
    }
}

/// Front-of-focus radii turn the ramp around.
fn effective_angle(radius_px: f64, theta_deg: f64) -> f64 {
    if radius_px < 0.0 {
        normalize_angle(theta_deg + 180.0)
    } else {
        normalize_angle(theta_deg)
    }
}

/// DP half-CoC kernel: `disk(|r|) ∘ ramp_mask(θ')`, renormalized, where
/// `θ' = θ` behind the focal plane and `θ + 180` in front of it.
pub fn dp_kernel(radius_px: f64, theta_deg: f64) -> Kernel {
    let r = radius_px.abs();
    let side = kernel_side(r);
    let angle = effective_angle(radius_px, theta_deg);
    let weights = ramp_mask(side, angle)
        .into_iter()
        .zip(disk_support(side, r))
        .map(|(m, inside)| if inside { m } else { 0.0 })
        .collect();
    Kernel {
        side,
        weights: normalize(weights),
        radius_px,
        theta_deg: normalize_angle(theta_deg),
        family: KernelFamily::Dp,
    }
}

/// [`square_ramp_mask`] over the whole square support, renormalized. Sign
/// handling as in [`dp_kernel`].
pub fn ramp_psf(radius_px: f64, theta_deg: f64) -> Kernel {
    let side = kernel_side(radius_px);
    let angle = effective_angle(radius_px, theta_deg);
    Kernel {
        side,
        weights: normalize(square_ramp_mask(side, angle)),
        radius_px,
        theta_deg: normalize_angle(theta_deg),
        family: KernelFamily::Ramp,
    }
}

fn remap(k: &Kernel, theta_deg: f64, src: impl Fn(usize, usize) -> usize) -> Kernel {
    let n = k.side;
    let mut weights = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            weights.push(k.weights[src(x, y)]);
        }
    }
    Kernel {
        weights,
        theta_deg,
        ..k.clone()
    }
}

/// Mirror about the central column. The ramp direction `θ` becomes `180 − θ`.
pub fn flip_horizontal(k: &Kernel) -> Kernel {
    let n = k.side;
    let theta = match k.family {
        KernelFamily::Disk | KernelFamily::Box => k.theta_deg,
        _ => normalize_angle(180.0 - k.theta_deg),
    };
    remap(k, theta, |x, y| y * n + (n - 1 - x))
}

/// Reverse the grid in both axes.
pub fn rotate_180(k: &Kernel) -> Kernel {
    let n = k.side;
    let theta = match k.family {
        KernelFamily::Disk | KernelFamily::Box => k.theta_deg,
        _ => normalize_angle(k.theta_deg + 180.0),
    };
    remap(k, theta, |x, y| (n - 1 - y) * n + (n - 1 - x))
}

/// `k·360/n` for `k = 0..n`. `n` must be even so every view has an
/// opposite partner.
pub fn view_angles(n_views: usize) -> Result<Vec<f64>> {
    if n_views < 2 || !n_views.is_multiple_of(2) {
        return Err(Error::param(format!(
            "number of views must be an even integer >= 2, got {n_views}"
        )));
    }
    Ok((0..n_views)
        .map(|k| (k as f64 * 360.0) / n_views as f64)
        .collect())
}

/// Directional kernels at `k·360/n`, each built analytically at its angle.
pub fn kernel_bank(radius_px: f64, n_views: usize, family: PsfFamily) -> Result<Vec<Kernel>> {
    Ok(view_angles(n_views)?
        .into_iter()
        .map(|theta| family.kernel(radius_px, theta))
        .collect())
}
