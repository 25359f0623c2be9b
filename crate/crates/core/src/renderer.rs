//! Layered defocus rendering.
//!
//! A *raw composite* at angle `θ` blurs every layer's color and coverage
//! with that layer's directional kernel and stacks the results back to
//! front with premultiplied OVER, then divides by the accumulated
//! coverage. Raw composites are not linear in the kernel near occlusion
//! boundaries, so the raw views at `θ` and `θ + 180` do not average to the
//! disk-blurred bokeh there. Views are therefore assembled as
//!
//! ```text
//! view(θ) = bokeh + (raw(θ) − raw(θ + 180)) / 2
//! ```
//!
//! where `bokeh` is the raw composite with the direction-free kernel
//! (disk for DP, uniform square for ramp). On a single layer this is the
//! plain convolution with the directional kernel. For any scene the
//! opposite-view average is the bokeh image.

use rayon::prelude::*;

use crate::layering::{LayerStack, Rect};
use crate::psf::{Kernel, KernelRow, PsfFamily};
use crate::{psf, Error, Plane, Result};

/// Accumulated coverage below this falls back to the input pixel.
pub const ALPHA_FLOOR: f64 = 1e-4;

/// Correlation with replicate-edge padding:
/// `out(x, y) = Σ k(dx, dy) · in(clamp(x + dx), clamp(y + dy))`.
pub fn convolve(plane: &Plane, kernel: &Kernel) -> Plane {
    if kernel.is_identity() {
        return plane.clone();
    }
    let (w, h) = (plane.width(), plane.height());
    let rows = kernel.rows();
    let mut out = Plane::new(w, h, plane.channels());
    for c in 0..plane.channels() {
        let src = plane.channel(c);
        let dst = out.channel_mut(c);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for row in &rows {
                    let sy = (y as isize + row.dy).clamp(0, h as isize - 1) as usize;
                    let line = &src[sy * w..(sy + 1) * w];
                    for (j, &wt) in row.weights.iter().enumerate() {
                        let sx = (x as isize + row.dx0 + j as isize).clamp(0, w as isize - 1);
                        acc += wt * line[sx as usize];
                    }
                }
                dst[y * w + x] = acc;
            }
        }
    }
    out
}

/// The `n` rendered views plus the combined bokeh image.
#[derive(Clone, Debug)]
pub struct ViewSet {
    pub views: Vec<Plane>,
    /// `angles[k] = k·360/n`, degrees clockwise from `+x`.
    pub angles: Vec<f64>,
    pub bokeh: Plane,
    pub family: PsfFamily,
}

impl ViewSet {
    pub fn n(&self) -> usize {
        self.views.len()
    }

    /// Index of the view rendered at the opposite angle of view `k`.
    pub fn opposite(&self, k: usize) -> usize {
        (k + self.n() / 2) % self.n()
    }
}

fn check_inputs(image: &Plane, stack: &LayerStack) -> Result<()> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    if image.width() != stack.width() || image.height() != stack.height() {
        return Err(Error::DimensionMismatch {
            what: "layer stack",
            got_w: stack.width(),
            got_h: stack.height(),
            want_w: image.width(),
            want_h: image.height(),
        });
    }
    if image.channels() != stack.channels() {
        return Err(Error::param(format!(
            "layer stack has {} channels, image has {}",
            stack.channels(),
            image.channels()
        )));
    }
    Ok(())
}

/// Raw back-to-front composite where layer `i` is blurred with
/// `kernel_for(radius_i)`.
pub fn composite_with(
    image: &Plane,
    stack: &LayerStack,
    kernel_for: impl Fn(f64) -> Kernel,
) -> Result<Plane> {
    check_inputs(image, stack)?;
    let kernels: Vec<Kernel> = stack
        .layers()
        .iter()
        .map(|l| kernel_for(l.radius_px()))
        .collect();
    match image.channels() {
        1 => Ok(composite_n::<2>(image, stack, &kernels)),
        2 => Ok(composite_n::<3>(image, stack, &kernels)),
        3 => Ok(composite_n::<4>(image, stack, &kernels)),
        4 => Ok(composite_n::<5>(image, stack, &kernels)),
        c => Err(Error::param(format!("unsupported channel count {c}"))),
    }
}

/// Raw directional composite at `theta_deg` (no symmetrization).
pub fn composite_view(
    image: &Plane,
    stack: &LayerStack,
    theta_deg: f64,
    family: PsfFamily,
) -> Result<Plane> {
    composite_with(image, stack, |r| family.kernel(r, theta_deg))
}

fn symmetric_composite(image: &Plane, stack: &LayerStack, family: PsfFamily) -> Result<Plane> {
    composite_with(image, stack, |r| family.symmetric(r))
}

/// `bokeh + (raw − raw_opposite) / 2`.
fn assemble_view(bokeh: &Plane, raw: &Plane, raw_opposite: &Plane) -> Plane {
    let data = bokeh
        .data()
        .iter()
        .zip(raw.data())
        .zip(raw_opposite.data())
        .map(|((b, a), o)| b + (a - o) * 0.5)
        .collect();
    Plane::from_vec(bokeh.width(), bokeh.height(), bokeh.channels(), data).expect("shapes agree")
}

/// One view with every layer's kernel pointed at `theta_deg`.
pub fn render_view(
    image: &Plane,
    stack: &LayerStack,
    theta_deg: f64,
    family: PsfFamily,
) -> Result<Plane> {
    let bokeh = symmetric_composite(image, stack, family)?;
    let raw = composite_view(image, stack, theta_deg, family)?;
    let opposite = composite_view(image, stack, theta_deg + 180.0, family)?;
    Ok(assemble_view(&bokeh, &raw, &opposite))
}

/// Left (θ = 0) and right (θ = 180) DP sub-aperture views.
pub fn render_dp_pair(image: &Plane, stack: &LayerStack) -> Result<(Plane, Plane)> {
    let family = PsfFamily::Dp;
    let (bokeh, (left, right)) = rayon::join(
        || symmetric_composite(image, stack, family),
        || {
            rayon::join(
                || composite_view(image, stack, 0.0, family),
                || {
                    composite_with(image, stack, |r| {
                        psf::flip_horizontal(&psf::dp_kernel(r, 0.0))
                    })
                },
            )
        },
    );
    let (bokeh, left, right) = (bokeh?, left?, right?);
    Ok((
        assemble_view(&bokeh, &left, &right),
        assemble_view(&bokeh, &right, &left),
    ))
}

/// Synthetic shallow depth of field: the average of the DP pair, which is
/// the disk-kernel composite.
pub fn render_bokeh(image: &Plane, stack: &LayerStack) -> Result<Plane> {
    symmetric_composite(image, stack, PsfFamily::Dp)
}

/// Renders `n_views` views at `k·360/n_views` and the bokeh image. Views
/// are rendered in parallel; output is identical to a sequential run.
pub fn render_views(
    image: &Plane,
    stack: &LayerStack,
    n_views: usize,
    family: PsfFamily,
) -> Result<ViewSet> {
    let angles = psf::view_angles(n_views)?;
    check_inputs(image, stack)?;
    let (bokeh, raws) = rayon::join(
        || symmetric_composite(image, stack, family),
        || {
            angles
                .par_iter()
                .map(|&theta| composite_view(image, stack, theta, family))
                .collect::<Result<Vec<_>>>()
        },
    );
    let (bokeh, raws) = (bokeh?, raws?);
    let half = n_views / 2;
    let views = (0..n_views)
        .map(|k| assemble_view(&bokeh, &raws[k], &raws[(k + half) % n_views]))
        .collect();
    Ok(ViewSet {
        views,
        angles,
        bokeh,
        family,
    })
}

/// Scatters one layer's premultiplied color and coverage (`N − 1` color
/// channels plus coverage) through `rows` into `buf`, which covers `rect`.
///
/// Output pixel `p` receives `w(k) · value(p + k)`, with out-of-image
/// positions `p + k` taking the value of the nearest edge pixel, which is
/// exactly correlation with replicate padding.
#[allow(clippy::too_many_arguments)]
fn scatter_layer<const N: usize>(
    pixels: &[u32],
    colors: &[f64],
    rows: &[KernelRow],
    half: isize,
    width: usize,
    height: usize,
    rect: Rect,
    buf: &mut [f64],
) {
    let (w, h) = (width as isize, height as isize);
    let (rx0, ry0, rx1, ry1) = (
        rect.x0 as isize,
        rect.y0 as isize,
        rect.x1 as isize,
        rect.y1 as isize,
    );
    let rw = rect.width();
    let nc = N - 1;
    for (i, &p) in pixels.iter().enumerate() {
        let x = (p as usize % width) as isize;
        let y = (p as usize / width) as isize;
        let mut v = [1.0; N];
        v[..nc].copy_from_slice(&colors[i * nc..(i + 1) * nc]);

        let (px_lo, px_hi) = (
            if x == 0 { -half } else { x },
            if x == w - 1 { x + half } else { x },
        );
        let (py_lo, py_hi) = (
            if y == 0 { -half } else { y },
            if y == h - 1 { y + half } else { y },
        );
        for py in py_lo..=py_hi {
            for px in px_lo..=px_hi {
                for row in rows {
                    let oy = py - row.dy;
                    if oy < ry0 || oy > ry1 {
                        continue;
                    }
                    let len = row.weights.len() as isize;
                    // ox = px - dx0 - j must land in [rx0, rx1]
                    let j_lo = (px - row.dx0 - rx1).max(0);
                    let j_hi = (px - row.dx0 - rx0).min(len - 1);
                    if j_lo > j_hi {
                        continue;
                    }
                    let line = (oy - ry0) as usize * rw;
                    for j in j_lo..=j_hi {
                        let ox = px - row.dx0 - j;
                        let wt = row.weights[j as usize];
                        let idx = (line + (ox - rx0) as usize) * N;
                        let cell = &mut buf[idx..idx + N];
                        for c in 0..N {
                            cell[c] += wt * v[c];
                        }
                    }
                }
            }
        }
    }
}

fn composite_n<const N: usize>(image: &Plane, stack: &LayerStack, kernels: &[Kernel]) -> Plane {
    let (w, h) = (image.width(), image.height());
    let nc = N - 1;
    let mut acc = vec![0.0f64; w * h * N];
    let mut buf: Vec<f64> = Vec::new();

    for (layer, kernel) in stack.layers().iter().zip(kernels) {
        if kernel.is_identity() {
            // full coverage: b + (1 - 1)·acc = b
            for (i, &p) in layer.pixels().iter().enumerate() {
                let cell = &mut acc[p as usize * N..(p as usize + 1) * N];
                cell[..nc].copy_from_slice(&layer.colors()[i * nc..(i + 1) * nc]);
                cell[nc] = 1.0;
            }
            continue;
        }
        let half = kernel.half();
        let rect = layer.bbox().dilate(half, w, h);
        buf.clear();
        buf.resize(rect.width() * rect.height() * N, 0.0);
        scatter_layer::<N>(
            layer.pixels(),
            layer.colors(),
            &kernel.rows(),
            half as isize,
            w,
            h,
            rect,
            &mut buf,
        );
        let rw = rect.width();
        for ry in 0..rect.height() {
            let y = rect.y0 + ry;
            for rx in 0..rw {
                let b = &buf[(ry * rw + rx) * N..(ry * rw + rx + 1) * N];
                let alpha = b[nc];
                if alpha == 0.0 {
                    continue;
                }
                let keep = 1.0 - alpha;
                let p = y * w + rect.x0 + rx;
                let cell = &mut acc[p * N..(p + 1) * N];
                for c in 0..N {
                    cell[c] = b[c] + keep * cell[c];
                }
            }
        }
    }

    let n = w * h;
    let pinned = stack.pinned();
    let src = image.data();
    let mut out = Plane::new(w, h, nc);
    let dst = out.data_mut();
    for p in 0..n {
        let cell = &acc[p * N..(p + 1) * N];
        let alpha = cell[nc];
        let keep_input = pinned.is_some_and(|m| m[p]) || alpha <= ALPHA_FLOOR;
        for c in 0..nc {
            dst[c * n + p] = if keep_input {
                src[c * n + p]
            } else if alpha == 1.0 {
                cell[c]
            } else {
                cell[c] / alpha
            };
        }
    }
    out
}
