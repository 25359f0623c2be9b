//! Subcommand implementations. Each returns the paths it wrote.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dpview::io::{self, Encoding};
use dpview::psf::{self, PsfFamily};
use dpview::{
    prepare, quantize_layers, render_bokeh, render_dp_pair, render_views, Error, RenderJob, Result,
};

use crate::scene;

pub fn bokeh(job: &RenderJob) -> Result<Vec<PathBuf>> {
    let scene = prepare(job)?;
    let out = render_bokeh(&scene.image.plane, &scene.stack)?;
    io::write_named(
        &job.out_dir,
        &[("bokeh.png", &out)],
        Encoding::from_linearize(job.linearize),
    )
}

pub fn dp_pair(job: &RenderJob) -> Result<Vec<PathBuf>> {
    let scene = prepare(job)?;
    let (left, right) = render_dp_pair(&scene.image.plane, &scene.stack)?;
    io::write_named(
        &job.out_dir,
        &[("left.png", &left), ("right.png", &right)],
        Encoding::from_linearize(job.linearize),
    )
}

pub fn nimat(job: &RenderJob) -> Result<Vec<PathBuf>> {
    let scene = prepare(job)?;
    let set = render_views(&scene.image.plane, &scene.stack, job.n_views, job.psf)?;
    io::write_outputs(&set, job)
}

/// Writes a kernel as an 8-bit PNG scaled to its peak and as a text grid.
pub fn kernel(
    radius_px: f64,
    theta_deg: f64,
    family: PsfFamily,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let k = family.kernel(radius_px, theta_deg);
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.into(),
            source,
        })?;
    }
    io::write_kernel_png(out, &k)?;
    let text = out.with_extension("txt");
    std::fs::write(&text, k.to_text()).map_err(|source| Error::Io {
        path: text.clone(),
        source,
    })?;
    Ok(vec![out.to_path_buf(), text])
}

/// Writes a seeded portrait scene (`image.png`, `depth.png`, `mask.png`).
pub fn synth(dir: &Path, width: usize, height: usize, seed: u64) -> Result<Vec<PathBuf>> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidParameter(format!(
            "synthetic scenes need at least 16x16 pixels, got {width}x{height}"
        )));
    }
    Ok(scene::portrait(width, height, seed).write(dir)?.to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub size: usize,
    pub radius: f64,
    pub layers: usize,
    pub views: usize,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub config: BenchConfig,
    pub layers_built: usize,
    pub millis: f64,
}

/// Times layering plus view rendering for every configuration, keeping the
/// fastest of `repeats` runs, and prints one table row per configuration.
pub fn bench(
    configs: &[BenchConfig],
    repeats: usize,
    family: PsfFamily,
    seed: u64,
    out: &mut impl Write,
) -> Result<Vec<BenchRow>> {
    let write_err = |source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    writeln!(
        out,
        "{:>6} {:>7} {:>7} {:>6} {:>8} {:>10}",
        "size", "radius", "layers", "views", "built", "ms"
    )
    .map_err(write_err)?;
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        psf::view_angles(cfg.views)?;
        if cfg.size == 0 || cfg.layers == 0 || cfg.radius.is_nan() || cfg.radius < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "invalid bench configuration {cfg:?}"
            )));
        }
        let image = scene::texture(cfg.size, cfg.size, seed);
        let defocus = scene::layered_defocus(cfg.size, cfg.size, cfg.radius, cfg.layers, seed);
        let mut best = f64::INFINITY;
        let mut built = 0;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let stack = quantize_layers(&image, &defocus, dpview::MAX_LAYERS)?;
            let set = render_views(&image, &stack, cfg.views, family)?;
            best = best.min(start.elapsed().as_secs_f64() * 1e3);
            built = stack.len();
            std::hint::black_box(set);
        }
        writeln!(
            out,
            "{:>6} {:>7} {:>7} {:>6} {:>8} {:>10.2}",
            cfg.size, cfg.radius, cfg.layers, cfg.views, built, best
        )
        .map_err(write_err)?;
        rows.push(BenchRow {
            config: cfg.clone(),
            layers_built: built,
            millis: best,
        });
    }
    Ok(rows)
}
