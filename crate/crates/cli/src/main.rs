use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpview::{ErrorKind, PsfFamily, Result};
use dpview_cli::commands::{self, BenchConfig};
use dpview_cli::config::Config;

/// Synthetic depth of field, dual-pixel view pairs and rotating multi-view
/// motion from one image and a depth map.
#[derive(Parser)]
#[command(name = "dpview", version)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the shallow depth-of-field image (bokeh.png).
    Bokeh(JobArgs),
    /// Render the left/right dual-pixel views (left.png, right.png).
    DpPair(JobArgs),
    /// Render N rotated views, the bokeh image and optionally motion.gif.
    Nimat(NimatArgs),
    /// Time rendering on seeded synthetic scenes.
    Bench(BenchArgs),
    /// Export one blur kernel as PNG and text.
    Kernel(KernelArgs),
    /// Write a seeded portrait scene (image.png, depth.png, mask.png).
    Synth(SynthArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Config file of `key = value` lines; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// All-in-focus input image (8/16-bit PNG or binary PPM/PGM).
    #[arg(long, value_name = "FILE")]
    image: Option<PathBuf>,
    /// Depth map: 16-bit grayscale PNG disparity (artistic) or PFM in mm (physical).
    #[arg(long, value_name = "FILE")]
    depth: Option<PathBuf>,
    /// Subject mask, 8-bit grayscale; values >= 128 stay sharp.
    #[arg(long, value_name = "FILE")]
    mask: Option<PathBuf>,
    /// Depth interpretation: physical or artistic [default: artistic].
    #[arg(long)]
    mode: Option<String>,
    /// Focal length in mm (physical mode).
    #[arg(long, value_name = "MM")]
    focal_length: Option<f64>,
    /// Aperture f-number (physical mode).
    #[arg(long, value_name = "N")]
    f_number: Option<f64>,
    /// Focus distance in mm (physical mode).
    #[arg(long, value_name = "MM")]
    focus_distance: Option<f64>,
    /// Sensor pixels per mm (physical mode).
    #[arg(long, value_name = "PX")]
    pixels_per_mm: Option<f64>,
    /// Disparity in [0, 1] that stays in focus (artistic mode) [default: 1.0].
    #[arg(long, value_name = "D")]
    focus_disparity: Option<f64>,
    /// Largest blur radius in pixels [default: 25].
    #[arg(long, value_name = "PX")]
    max_radius: Option<f64>,
    /// Depth layer budget, 1 to 500 [default: 500].
    #[arg(long, value_name = "N")]
    max_layers: Option<usize>,
    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Treat input and output samples as linear instead of sRGB [default: sRGB, linearized].
    #[arg(long)]
    no_linearize: bool,
}

#[derive(Args)]
struct NimatArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Number of views, even [default: 8].
    #[arg(long, value_name = "N")]
    views: Option<usize>,
    /// Kernel family: dp or ramp [default: dp].
    #[arg(long)]
    psf: Option<String>,
    /// GIF frame rate, 1 to 100 [default: 8].
    #[arg(long)]
    fps: Option<u32>,
    /// Also write motion.gif [default: off].
    #[arg(long)]
    gif: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Square image sides in pixels.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    sizes: Vec<usize>,
    /// Maximum blur radii in pixels.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    radii: Vec<f64>,
    /// Distinct depth layers in the scene.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    layers: Vec<usize>,
    /// View counts (even).
    #[arg(long, value_delimiter = ',', default_value = "8")]
    views: Vec<usize>,
    /// Kernel family: dp or ramp.
    #[arg(long, default_value = "dp")]
    psf: String,
    /// Timed runs per configuration; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Scene seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct KernelArgs {
    /// Signed radius in pixels (negative = in front of focus).
    #[arg(long, allow_hyphen_values = true)]
    radius: f64,
    /// Fall-off direction in degrees, clockwise from +x.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Kernel family: dp or ramp.
    #[arg(long, default_value = "dp")]
    psf: String,
    /// Output PNG; a .txt grid is written beside it.
    #[arg(long, default_value = "kernel.png")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long, default_value = "scene")]
    out: PathBuf,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl JobArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = Vec::new();
        let path = |v: &PathBuf| v.display().to_string();
        if let Some(v) = &self.image {
            p.push(("image", path(v)));
        }
        if let Some(v) = &self.depth {
            p.push(("depth", path(v)));
        }
        if let Some(v) = &self.mask {
            p.push(("mask", path(v)));
        }
        if let Some(v) = &self.mode {
            p.push(("mode", v.clone()));
        }
        let numbers = [
            ("focal-length", self.focal_length),
            ("f-number", self.f_number),
            ("focus-distance", self.focus_distance),
            ("pixels-per-mm", self.pixels_per_mm),
            ("focus-disparity", self.focus_disparity),
            ("max-radius", self.max_radius),
        ];
        for (key, v) in numbers {
            if let Some(v) = v {
                p.push((key, v.to_string()));
            }
        }
        if let Some(v) = self.max_layers {
            p.push(("max-layers", v.to_string()));
        }
        if let Some(v) = &self.out {
            p.push(("out", path(v)));
        }
        if self.no_linearize {
            p.push(("linearize", "false".into()));
        }
        p
    }

    fn config(&self, extra: Vec<(&'static str, String)>) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(file) = &self.config {
            cfg.apply_file(file)?;
        }
        cfg.apply_pairs(self.pairs())?;
        cfg.apply_pairs(extra)?;
        Ok(cfg)
    }
}

impl NimatArgs {
    fn extra(&self) -> Vec<(&'static str, String)> {
        let mut p = Vec::new();
        if let Some(v) = self.views {
            p.push(("views", v.to_string()));
        }
        if let Some(v) = &self.psf {
            p.push(("psf", v.clone()));
        }
        if let Some(v) = self.fps {
            p.push(("fps", v.to_string()));
        }
        if self.gif {
            p.push(("gif", "true".into()));
        }
        p
    }
}

fn run(cli: Cli) -> Result<()> {
    let manifest = match cli.command {
        Command::Bokeh(args) => commands::bokeh(&args.config(Vec::new())?.to_job()?)?,
        Command::DpPair(args) => commands::dp_pair(&args.config(Vec::new())?.to_job()?)?,
        Command::Nimat(args) => commands::nimat(&args.job.config(args.extra())?.to_job()?)?,
        Command::Kernel(args) => {
            let family: PsfFamily = args.psf.parse()?;
            commands::kernel(args.radius, args.theta, family, &args.out)?
        }
        Command::Synth(args) => commands::synth(&args.out, args.width, args.height, args.seed)?,
        Command::Bench(args) => {
            let family: PsfFamily = args.psf.parse()?;
            let mut configs = Vec::new();
            for &size in &args.sizes {
                for &radius in &args.radii {
                    for &layers in &args.layers {
                        for &views in &args.views {
                            configs.push(BenchConfig {
                                size,
                                radius,
                                layers,
                                views,
                            });
                        }
                    }
                }
            }
            commands::bench(
                &configs,
                args.repeats,
                family,
                args.seed,
                &mut std::io::stdout().lock(),
            )?;
            Vec::new()
        }
    };
    for path in manifest {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::Internal => 3,
            })
        }
    }
}
