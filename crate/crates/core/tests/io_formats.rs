use std::fs;

use dpview::io::{self, Encoding};
use dpview::job::{prepare, RenderJob};
use dpview::{render_views, DepthMode, Error, Plane, PsfFamily};
use image::{GrayImage, ImageBuffer, Luma, RgbImage};
use tempfile::tempdir;

fn gradient_rgb(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        image::Rgb([
            (x * 9 % 256) as u8,
            (y * 11 % 256) as u8,
            ((x + y) * 5 % 256) as u8,
        ])
    })
}

#[test]
fn png_values_decode_and_linearize() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("px.png");
    GrayImage::from_raw(3, 1, vec![0, 188, 255])
        .unwrap()
        .save(&path)
        .unwrap();
    let raw = io::load_image(&path, false).unwrap();
    assert_eq!(raw.encoding, Encoding::Linear);
    assert_eq!(raw.plane.channels(), 1);
    assert_eq!(raw.plane.data(), &[0.0, 188.0 / 255.0, 1.0]);
    let lin = io::load_image(&path, true).unwrap();
    assert_eq!(lin.plane.get(0, 0, 0), 0.0);
    assert!((lin.plane.get(1, 0, 0) - 0.5029).abs() < 1e-4);
    assert!((lin.plane.get(2, 0, 0) - 1.0).abs() < 1e-12);
}

#[test]
fn ppm_and_pgm_are_accepted() {
    let dir = tempdir().unwrap();
    let ppm = dir.path().join("a.ppm");
    let img = gradient_rgb(5, 4);
    img.save(&ppm).unwrap();
    let loaded = io::load_image(&ppm, false).unwrap();
    assert_eq!(
        (
            loaded.plane.width(),
            loaded.plane.height(),
            loaded.plane.channels()
        ),
        (5, 4, 3)
    );
    assert_eq!(
        loaded.plane.get(2, 3, 1),
        img.get_pixel(2, 3)[1] as f64 / 255.0
    );

    let pgm = dir.path().join("a.pgm");
    GrayImage::from_pixel(2, 2, Luma([77])).save(&pgm).unwrap();
    let loaded = io::load_image(&pgm, false).unwrap();
    assert_eq!(loaded.plane.data(), &[77.0 / 255.0; 4]);
}

#[test]
fn sixteen_bit_rgb_png() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("deep.png");
    let buf: ImageBuffer<image::Rgb<u16>, Vec<u16>> =
        ImageBuffer::from_pixel(2, 1, image::Rgb([0, 32768, 65535]));
    buf.save(&path).unwrap();
    let loaded = io::load_image(&path, false).unwrap();
    assert_eq!(loaded.plane.get(1, 0, 2), 1.0);
    assert_eq!(loaded.plane.get(0, 0, 1), 32768.0 / 65535.0);
}

#[test]
fn unsupported_and_corrupt_inputs() {
    let dir = tempdir().unwrap();
    let junk = dir.path().join("junk.dat");
    fs::write(&junk, b"definitely not an image").unwrap();
    let err = io::load_image(&junk, true).unwrap_err();
    assert!(matches!(err, Error::UnsupportedFormat { .. }), "{err}");
    assert!(err.to_string().contains("junk.dat"));

    let fake = dir.path().join("fake.png");
    fs::write(&fake, b"definitely not an image").unwrap();
    assert!(matches!(
        io::load_image(&fake, true),
        Err(Error::Corrupt { .. })
    ));

    let truncated = dir.path().join("cut.png");
    gradient_rgb(16, 16).save(&truncated).unwrap();
    let bytes = fs::read(&truncated).unwrap();
    fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    let err = io::load_image(&truncated, true).unwrap_err();
    assert!(matches!(err, Error::Corrupt { .. }), "{err}");

    let missing = dir.path().join("nope.png");
    let err = io::load_image(&missing, true).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nope.png"));
}

#[test]
fn sixteen_bit_disparity() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("d.png");
    io::write_gray16_png(&path, 3, 1, &[0.0, 0.5, 1.0]).unwrap();
    let depth = io::load_depth(&path, DepthMode::Artistic).unwrap();
    assert_eq!(depth.values()[0], 0.0);
    assert_eq!(depth.values()[2], 1.0);
    assert!((depth.values()[1] - 0.5).abs() < 1.0 / 65535.0);
}

#[test]
fn pfm_round_trip_and_mode_checks() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("d.pfm");
    let values = [1500.0f32, 900.0, 2500.0, 1200.5, 3000.0, 800.0];
    io::write_pfm(&path, 3, 2, &values).unwrap();
    let (w, h, back) = io::read_pfm(&path).unwrap();
    assert_eq!((w, h), (3, 2));
    assert_eq!(back, values);
    let depth = io::load_depth(&path, DepthMode::Physical).unwrap();
    assert_eq!(depth.get(0, 0), 1500.0);
    assert_eq!(depth.get(1, 1), 3000.0);

    assert!(matches!(
        io::load_depth(&path, DepthMode::Artistic),
        Err(Error::InvalidParameter(_))
    ));
    let png = dir.path().join("d.png");
    io::write_gray16_png(&png, 1, 1, &[0.5]).unwrap();
    assert!(matches!(
        io::load_depth(&png, DepthMode::Physical),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn big_endian_pfm() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("be.pfm");
    let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
    for v in [1000.0f32, 2000.0] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(&path, bytes).unwrap();
    assert_eq!(io::read_pfm(&path).unwrap().2, vec![1000.0, 2000.0]);
}

#[test]
fn nonpositive_metric_depth_is_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.pfm");
    io::write_pfm(&path, 2, 1, &[1000.0, -3.0]).unwrap();
    assert!(matches!(
        io::load_depth(&path, DepthMode::Physical),
        Err(Error::InvalidDepth(_))
    ));
    io::write_pfm(&path, 2, 1, &[1000.0, f32::NAN]).unwrap();
    assert!(io::load_depth(&path, DepthMode::Physical).is_err());
}

#[test]
fn mask_threshold_is_inclusive() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.png");
    GrayImage::from_raw(4, 1, vec![0, 127, 128, 255])
        .unwrap()
        .save(&path)
        .unwrap();
    let mask = io::load_mask(&path).unwrap();
    assert_eq!(mask.as_slice(), &[false, false, true, true]);
}

#[test]
fn eight_bit_round_trip_within_one_level() {
    let dir = tempdir().unwrap();
    let plane = Plane::from_fn(17, 9, 3, |x, y, c| {
        ((x * 31 + y * 17 + c * 7) % 101) as f64 / 100.0
    });
    for encoding in [Encoding::Srgb, Encoding::Linear] {
        let path = dir.path().join("rt.png");
        io::write_png(&path, &plane, encoding).unwrap();
        let back = io::load_image(&path, encoding == Encoding::Srgb)
            .unwrap()
            .plane;
        for (a, b) in plane.data().iter().zip(back.data()) {
            let (ea, eb) = match encoding {
                Encoding::Srgb => (io::linear_to_srgb(*a), io::linear_to_srgb(*b)),
                Encoding::Linear => (*a, *b),
            };
            assert!((ea - eb).abs() <= 0.5 / 255.0 + 1e-9);
        }
    }
}

fn write_scene(dir: &std::path::Path, w: u32, h: u32) -> RenderJob {
    let image = dir.join("img.png");
    let depth = dir.join("depth.png");
    gradient_rgb(w, h).save(&image).unwrap();
    let disparity: Vec<f64> = (0..w * h)
        .map(|i| (i % w) as f64 / (w - 1) as f64)
        .collect();
    io::write_gray16_png(&depth, w as usize, h as usize, &disparity).unwrap();
    let mut job = RenderJob::new(image, depth);
    job.max_radius_px = 3.0;
    job.out_dir = dir.join("out");
    job
}

#[test]
fn output_manifest_counts_and_gif() {
    let dir = tempdir().unwrap();
    let mut job = write_scene(dir.path(), 24, 16);
    let scene = prepare(&job).unwrap();
    let set = render_views(&scene.image.plane, &scene.stack, 8, PsfFamily::Dp).unwrap();

    let manifest = io::write_outputs(&set, &job).unwrap();
    assert_eq!(manifest.len(), 9);
    assert!(manifest[0].ends_with("bokeh.png"));
    assert!(manifest[1].ends_with("view_000.png"));
    assert!(manifest[8].ends_with("view_007.png"));

    job.gif = true;
    let manifest = io::write_outputs(&set, &job).unwrap();
    assert_eq!(manifest.len(), 10);
    let gif_path = manifest.last().unwrap();
    assert!(gif_path.ends_with("motion.gif"));

    let mut opts = gif::DecodeOptions::new();
    opts.set_color_output(gif::ColorOutput::Indexed);
    let mut decoder = opts.read_info(fs::File::open(gif_path).unwrap()).unwrap();
    assert_eq!((decoder.width(), decoder.height()), (24, 16));
    assert!(decoder.global_palette().is_some());
    assert_eq!(decoder.repeat(), gif::Repeat::Infinite);
    let mut frames = 0;
    while let Some(frame) = decoder.read_next_frame().unwrap() {
        assert_eq!(frame.delay, 12);
        frames += 1;
    }
    assert_eq!(frames, 8);

    let view0 = io::load_image(&manifest[1], true).unwrap().plane;
    for (a, b) in view0.data().iter().zip(set.views[0].data()) {
        assert!((io::linear_to_srgb(*a) - io::linear_to_srgb(*b)).abs() <= 1.0 / 255.0);
    }
}

#[test]
fn prepare_rejects_mismatched_dimensions_and_missing_files() {
    let dir = tempdir().unwrap();
    let mut job = write_scene(dir.path(), 12, 10);
    let mask = dir.path().join("mask.png");
    GrayImage::new(11, 10).save(&mask).unwrap();
    job.mask = Some(mask);
    let err = prepare(&job).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");

    job.mask = None;
    job.depth = dir.path().join("absent.png");
    let err = prepare(&job).unwrap_err();
    assert!(err.to_string().contains("absent.png"));
}

#[test]
fn prepare_pins_subject_pixels() {
    let dir = tempdir().unwrap();
    let mut job = write_scene(dir.path(), 20, 12);
    let mask = dir.path().join("mask.png");
    GrayImage::from_fn(20, 12, |x, _| {
        Luma([if (8..12).contains(&x) { 255 } else { 0 }])
    })
    .save(&mask)
    .unwrap();
    job.mask = Some(mask);
    let scene = prepare(&job).unwrap();
    let m = scene.mask.as_ref().unwrap();
    for y in 0..12 {
        for x in 0..20 {
            if m.is_subject(x, y) {
                assert_eq!(scene.defocus.get(x, y), 0.0);
            }
        }
    }
    assert!(scene.stack.pinned().is_some());
}
