//! Brute-force reference renderer for tiny scenes.
//!
//! Every source pixel `q` contributes to output `p` with the weight its own
//! kernel (built from `defocus(q)`) assigns to the offset `q − p`, the same
//! stencil orientation as [`crate::renderer::convolve`]. Contributions are
//! normalized by their total weight. There is no layering and no occlusion,
//! so agreement with the layered renderer is only expected on scenes where
//! occlusion cannot matter: constant defocus, or content regions separated
//! by more than the sum of their kernel radii. Sources outside the image are
//! not padded, so comparisons should use an interior crop.

use std::collections::HashMap;

use crate::psf::{self, Kernel, KernelFamily};
use crate::{DefocusMap, Error, Plane, Result};

pub const MAX_ORACLE_SIDE: usize = 64;

fn kernel_for(family: KernelFamily, radius: f64, theta: f64) -> Kernel {
    match family {
        KernelFamily::Disk => psf::disk(radius.abs()),
        KernelFamily::Box => psf::box_kernel(radius.abs()),
        KernelFamily::Dp => psf::dp_kernel(radius, theta),
        KernelFamily::Ramp => psf::ramp_psf(radius, theta),
    }
}

pub fn gather_render(
    image: &Plane,
    defocus: &DefocusMap,
    theta_deg: f64,
    family: KernelFamily,
) -> Result<Plane> {
    let (w, h) = (image.width(), image.height());
    if w > MAX_ORACLE_SIDE || h > MAX_ORACLE_SIDE {
        return Err(Error::TooLarge(w, h));
    }
    if defocus.width() != w || defocus.height() != h {
        return Err(Error::DimensionMismatch {
            what: "defocus map",
            got_w: defocus.width(),
            got_h: defocus.height(),
            want_w: w,
            want_h: h,
        });
    }

    let mut cache: HashMap<u64, Kernel> = HashMap::new();
    for &r in defocus.values() {
        cache
            .entry(r.to_bits())
            .or_insert_with(|| kernel_for(family, r, theta_deg));
    }
    let reach = cache.values().map(|k| k.half()).max().unwrap_or(0) as isize;

    let mut out = Plane::new(w, h, image.channels());
    let mut num = vec![0.0; image.channels()];
    for py in 0..h as isize {
        for px in 0..w as isize {
            num.iter_mut().for_each(|v| *v = 0.0);
            let mut den = 0.0;
            for qy in (py - reach).max(0)..=(py + reach).min(h as isize - 1) {
                for qx in (px - reach).max(0)..=(px + reach).min(w as isize - 1) {
                    let (qxu, qyu) = (qx as usize, qy as usize);
                    let k = &cache[&defocus.get(qxu, qyu).to_bits()];
                    let wt = k.weight(qx - px, qy - py);
                    if wt == 0.0 {
                        continue;
                    }
                    den += wt;
                    for (c, v) in num.iter_mut().enumerate() {
                        *v += wt * image.get(qxu, qyu, c);
                    }
                }
            }
            for (c, v) in num.iter().enumerate() {
                let value = if den > 0.0 {
                    v / den
                } else {
                    image.get(px as usize, py as usize, c)
                };
                out.set(px as usize, py as usize, c, value);
            }
        }
    }
    Ok(out)
}
