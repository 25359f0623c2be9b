//! Input decoding (image, depth, mask) and output encoding (PNG frames,
//! animated GIF, PFM).

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::job::RenderJob;
use crate::optics::{DepthMap, DepthMode, SegmentationMask};
use crate::psf::Kernel;
use crate::renderer::ViewSet;
use crate::{Error, Plane, Result};

/// How stored sample values relate to linear light.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    /// Stored with the sRGB transfer curve; decoded to linear on load.
    Srgb,
    /// Stored values are used as-is.
    Linear,
}

impl Encoding {
    pub fn from_linearize(linearize: bool) -> Self {
        if linearize {
            Encoding::Srgb
        } else {
            Encoding::Linear
        }
    }
}

/// A decoded image: linear-light samples in `[0, 1]` plus the encoding
/// they were stored with.
#[derive(Clone, Debug)]
pub struct ImagePlane {
    pub plane: Plane,
    pub encoding: Encoding,
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Mask values at or above this 8-bit level mark subject pixels.
pub const MASK_THRESHOLD: u8 = 128;

fn open_image(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: format!("{other:?} images are not accepted (use PNG or binary PPM/PGM)"),
            })
        }
        None => {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: "unrecognized image signature".into(),
            })
        }
    }
    reader.decode().map_err(|e| Error::Corrupt {
        path: path.into(),
        reason: e.to_string(),
    })
}

fn is_pfm(path: &Path) -> Result<bool> {
    let mut magic = [0u8; 2];
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    match file.read_exact(&mut magic) {
        Ok(()) => Ok(&magic == b"Pf" || &magic == b"PF"),
        Err(_) => Ok(false),
    }
}

/// Decodes an 8/16-bit PNG or binary PPM/PGM into `[0, 1]`, optionally
/// linearizing with the sRGB curve. Alpha channels are dropped.
pub fn load_image(path: impl AsRef<Path>, linearize: bool) -> Result<ImagePlane> {
    let path = path.as_ref();
    let img = open_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = !img.color().has_color();
    let (channels, samples): (usize, Vec<f64>) =
        if img.color().bytes_per_pixel() / img.color().channel_count() > 1 {
            if gray {
                let buf = img.to_luma16();
                (
                    1,
                    buf.into_raw()
                        .into_iter()
                        .map(|v| v as f64 / 65535.0)
                        .collect(),
                )
            } else {
                let buf = img.to_rgb16();
                (
                    3,
                    buf.into_raw()
                        .into_iter()
                        .map(|v| v as f64 / 65535.0)
                        .collect(),
                )
            }
        } else if gray {
            let buf = img.to_luma8();
            (
                1,
                buf.into_raw()
                    .into_iter()
                    .map(|v| v as f64 / 255.0)
                    .collect(),
            )
        } else {
            let buf = img.to_rgb8();
            (
                3,
                buf.into_raw()
                    .into_iter()
                    .map(|v| v as f64 / 255.0)
                    .collect(),
            )
        };
    let n = w * h;
    let mut data = vec![0.0; n * channels];
    for (i, &v) in samples.iter().enumerate() {
        let v = if linearize { srgb_to_linear(v) } else { v };
        data[(i % channels) * n + i / channels] = v;
    }
    Ok(ImagePlane {
        plane: Plane::from_vec(w, h, channels, data)?,
        encoding: Encoding::from_linearize(linearize),
    })
}

/// Loads a depth map: 16-bit (or 8-bit) grayscale PNG as normalized
/// disparity in artistic mode, PFM as millimetres in physical mode.
pub fn load_depth(path: impl AsRef<Path>, mode: DepthMode) -> Result<DepthMap> {
    let path = path.as_ref();
    let pfm = is_pfm(path)?;
    match (mode, pfm) {
        (DepthMode::Physical, true) => {
            let (w, h, values) = read_pfm(path)?;
            let values = values.into_iter().map(f64::from).collect();
            DepthMap::new(w, h, values, DepthMode::Physical)
        }
        (DepthMode::Artistic, false) => {
            let img = open_image(path)?;
            let (w, h) = (img.width() as usize, img.height() as usize);
            let values = match img {
                DynamicImage::ImageLuma16(buf) => buf
                    .into_raw()
                    .into_iter()
                    .map(|v| v as f64 / 65535.0)
                    .collect(),
                DynamicImage::ImageLuma8(buf) => buf
                    .into_raw()
                    .into_iter()
                    .map(|v| v as f64 / 255.0)
                    .collect(),
                other => {
                    return Err(Error::UnsupportedFormat {
                        path: path.into(),
                        reason: format!(
                            "disparity maps must be single-channel, got {:?}",
                            other.color()
                        ),
                    })
                }
            };
            DepthMap::new(w, h, values, DepthMode::Artistic)
        }
        (DepthMode::Physical, false) => Err(Error::param(format!(
            "{}: physical mode expects a PFM depth map in mm",
            path.display()
        ))),
        (DepthMode::Artistic, true) => Err(Error::param(format!(
            "{}: artistic mode expects a grayscale PNG disparity map, got PFM",
            path.display()
        ))),
    }
}

/// Loads an 8-bit grayscale mask; values `>= 128` mark the subject.
pub fn load_mask(path: impl AsRef<Path>) -> Result<SegmentationMask> {
    let path = path.as_ref();
    let img = open_image(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let subject = img
        .into_raw()
        .into_iter()
        .map(|v| v >= MASK_THRESHOLD)
        .collect();
    SegmentationMask::new(w, h, subject)
}

/// Reads a grayscale (`Pf`) or color (`PF`, first channel kept) PFM. A
/// negative scale means little-endian samples. Rows are returned top-down.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: &str| Error::Corrupt {
        path: path.into(),
        reason: reason.into(),
    };
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt("truncated PFM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = match fields[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(corrupt("bad PFM magic")),
    };
    let w: usize = fields[1].parse().map_err(|_| corrupt("bad PFM width"))?;
    let h: usize = fields[2].parse().map_err(|_| corrupt("bad PFM height"))?;
    let scale: f32 = fields[3].parse().map_err(|_| corrupt("bad PFM scale"))?;
    let little = scale < 0.0;
    let need = w * h * channels * 4;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| corrupt("truncated PFM raster"))?;
    let mut values = vec![0f32; w * h];
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            let at = ((row * w + x) * channels) * 4;
            let b = [raster[at], raster[at + 1], raster[at + 2], raster[at + 3]];
            values[y * w + x] = if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
        }
    }
    Ok((w, h, values))
}

/// Writes a little-endian grayscale PFM (bottom row first).
pub fn write_pfm(path: &Path, width: usize, height: usize, values: &[f32]) -> Result<()> {
    assert_eq!(values.len(), width * height);
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for row in (0..height).rev() {
        for v in &values[row * width..(row + 1) * width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a 16-bit grayscale PNG of normalized values in `[0, 1]`.
pub fn write_gray16_png(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), width * height);
    let raw: Vec<u16> = values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(width as u32, height as u32, raw)
        .expect("buffer size");
    save(path, DynamicImage::ImageLuma16(buf))
}

/// 8-bit interleaved samples; `Srgb` re-applies the transfer curve.
pub fn encode_8bit(plane: &Plane, encoding: Encoding) -> Vec<u8> {
    let n = plane.pixel_count();
    let channels = plane.channels();
    let data = plane.data();
    let mut out = Vec::with_capacity(n * channels);
    for p in 0..n {
        for c in 0..channels {
            let v = data[c * n + p].clamp(0.0, 1.0);
            let v = match encoding {
                Encoding::Srgb => linear_to_srgb(v),
                Encoding::Linear => v,
            };
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

fn save(path: &Path, img: DynamicImage) -> Result<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Internal(format!("{}: {other}", path.display())),
        })
}

/// Writes an 8-bit grayscale or RGB PNG.
pub fn write_png(path: &Path, plane: &Plane, encoding: Encoding) -> Result<()> {
    let (w, h) = (plane.width() as u32, plane.height() as u32);
    let bytes = encode_8bit(plane, encoding);
    let img = match plane.channels() {
        1 => DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, bytes).expect("size")),
        3 => DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, bytes).expect("size")),
        c => return Err(Error::param(format!("cannot write a {c}-channel PNG"))),
    };
    save(path, img)
}

/// Grayscale PNG of a kernel, largest weight white.
pub fn write_kernel_png(path: &Path, kernel: &Kernel) -> Result<()> {
    let side = kernel.side() as u32;
    let img = image::GrayImage::from_raw(side, side, kernel.to_gray8()).expect("size");
    save(path, DynamicImage::ImageLuma8(img))
}

/// GIF frame delay in centiseconds: `floor(100 / fps)`.
pub fn gif_delay_cs(fps: u32) -> u16 {
    (100 / fps.max(1)) as u16
}

struct ColorBox {
    colors: Vec<[u8; 3]>,
}

impl ColorBox {
    fn widest_channel(&self) -> (usize, u8) {
        (0..3)
            .map(|c| {
                let lo = self.colors.iter().map(|p| p[c]).min().unwrap_or(0);
                let hi = self.colors.iter().map(|p| p[c]).max().unwrap_or(0);
                (c, hi - lo)
            })
            .max_by_key(|&(c, range)| (range, std::cmp::Reverse(c)))
            .unwrap()
    }

    fn mean(&self) -> [u8; 3] {
        let mut sum = [0u64; 3];
        for p in &self.colors {
            for c in 0..3 {
                sum[c] += p[c] as u64;
            }
        }
        let n = self.colors.len().max(1) as u64;
        [0, 1, 2].map(|c| ((sum[c] + n / 2) / n) as u8)
    }
}

/// Median-cut palette of at most `max_colors` entries from RGB pixels.
pub fn median_cut_palette(rgb: &[u8], max_colors: usize) -> Vec<[u8; 3]> {
    let colors: Vec<[u8; 3]> = rgb.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    if colors.is_empty() {
        return vec![[0, 0, 0]];
    }
    let mut boxes = vec![ColorBox { colors }];
    while boxes.len() < max_colors {
        let Some((idx, channel)) = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.colors.len() > 1)
            .map(|(i, b)| (i, b.widest_channel()))
            .filter(|(_, (_, range))| *range > 0)
            .max_by_key(|&(i, (_, range))| (range, std::cmp::Reverse(i)))
            .map(|(i, (c, _))| (i, c))
        else {
            break;
        };
        let mut b = boxes.swap_remove(idx);
        b.colors
            .sort_unstable_by_key(|p| (p[channel], p[0], p[1], p[2]));
        let upper = b.colors.split_off(b.colors.len() / 2);
        boxes.push(b);
        boxes.push(ColorBox { colors: upper });
    }
    boxes.iter().map(ColorBox::mean).collect()
}

fn nearest(palette: &[[u8; 3]], p: [u8; 3]) -> u8 {
    let mut best = (u32::MAX, 0usize);
    for (i, q) in palette.iter().enumerate() {
        let d: u32 = (0..3)
            .map(|c| {
                let diff = p[c] as i32 - q[c] as i32;
                (diff * diff) as u32
            })
            .sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1 as u8
}

fn to_rgb(bytes: &[u8], channels: usize) -> Vec<u8> {
    match channels {
        3 => bytes.to_vec(),
        _ => bytes.iter().flat_map(|&v| [v, v, v]).collect(),
    }
}

/// Writes an infinitely looping GIF with one global median-cut palette
/// computed from `palette_source`. Frames are full replacements.
pub fn write_gif(
    path: &Path,
    frames: &[&Plane],
    palette_source: &Plane,
    encoding: Encoding,
    fps: u32,
) -> Result<()> {
    let (w, h) = (palette_source.width(), palette_source.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::param("image too large for GIF"));
    }
    let channels = palette_source.channels();
    let palette = median_cut_palette(
        &to_rgb(&encode_8bit(palette_source, encoding), channels),
        256,
    );
    let flat: Vec<u8> = palette.iter().flatten().copied().collect();

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let gif_err = |e: gif::EncodingError| match e {
        gif::EncodingError::Io(io) => Error::io(path, io),
        other => Error::Internal(format!("{}: {other}", path.display())),
    };
    let mut encoder =
        gif::Encoder::new(BufWriter::new(file), w as u16, h as u16, &flat).map_err(gif_err)?;
    encoder.set_repeat(gif::Repeat::Infinite).map_err(gif_err)?;
    let delay = gif_delay_cs(fps);
    let mut lookup: HashMap<[u8; 3], u8> = HashMap::new();
    for frame in frames {
        let rgb = to_rgb(&encode_8bit(frame, encoding), frame.channels());
        let indices: Vec<u8> = rgb
            .chunks_exact(3)
            .map(|p| {
                let key = [p[0], p[1], p[2]];
                *lookup.entry(key).or_insert_with(|| nearest(&palette, key))
            })
            .collect();
        let mut f = gif::Frame::from_indexed_pixels(w as u16, h as u16, indices, None);
        f.delay = delay;
        f.dispose = gif::DisposalMethod::Keep;
        encoder.write_frame(&f).map_err(gif_err)?;
    }
    let mut inner = encoder.into_inner().map_err(gif_err)?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes named planes into `dir`, returning the paths in order.
pub fn write_named(
    dir: &Path,
    planes: &[(&str, &Plane)],
    encoding: Encoding,
) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    planes
        .iter()
        .map(|(name, plane)| {
            let path = dir.join(name);
            write_png(&path, plane, encoding)?;
            Ok(path)
        })
        .collect()
}

/// Writes `bokeh.png`, `view_000.png` … and, when enabled, `motion.gif`
/// cycling the views in ascending angle order.
pub fn write_outputs(set: &ViewSet, job: &RenderJob) -> Result<Vec<PathBuf>> {
    let encoding = Encoding::from_linearize(job.linearize);
    let names: Vec<String> = (0..set.n()).map(|k| format!("view_{k:03}.png")).collect();
    let mut planes: Vec<(&str, &Plane)> = vec![("bokeh.png", &set.bokeh)];
    planes.extend(names.iter().map(String::as_str).zip(&set.views));
    let mut manifest = write_named(&job.out_dir, &planes, encoding)?;
    if job.gif {
        let path = job.out_dir.join("motion.gif");
        let frames: Vec<&Plane> = set.views.iter().collect();
        write_gif(&path, &frames, &set.bokeh, encoding, job.fps)?;
        manifest.push(path);
    }
    Ok(manifest)
}
