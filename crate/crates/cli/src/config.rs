//! `key = value` job configuration shared by config files and flags.
//!
//! Flags are lowered to the same key/value pairs as file lines and applied
//! after them, so a flag always overrides the file and both paths go through
//! one parser.

use std::fs;
use std::path::{Path, PathBuf};

use dpview::optics::DEFAULT_MAX_RADIUS_PX;
use dpview::{CameraParams, DepthMode, Error, PsfFamily, RenderJob, Result, MAX_LAYERS};

pub const KEYS: &[&str] = &[
    "image",
    "depth",
    "mask",
    "mode",
    "focal-length",
    "f-number",
    "focus-distance",
    "pixels-per-mm",
    "focus-disparity",
    "max-radius",
    "max-layers",
    "views",
    "psf",
    "fps",
    "gif",
    "linearize",
    "out",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub image: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub mode: DepthMode,
    pub focal_length_mm: Option<f64>,
    pub f_number: Option<f64>,
    pub focus_distance_mm: Option<f64>,
    pub pixels_per_mm: Option<f64>,
    pub focus_disparity: f64,
    pub max_radius_px: f64,
    pub max_layers: usize,
    pub views: usize,
    pub psf: PsfFamily,
    pub fps: u32,
    pub gif: bool,
    pub linearize: bool,
    pub out: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            image: None,
            depth: None,
            mask: None,
            mode: DepthMode::Artistic,
            focal_length_mm: None,
            f_number: None,
            focus_distance_mm: None,
            pixels_per_mm: None,
            focus_disparity: 1.0,
            max_radius_px: DEFAULT_MAX_RADIUS_PX,
            max_layers: MAX_LAYERS,
            views: 8,
            psf: PsfFamily::Dp,
            fps: 8,
            gif: false,
            linearize: true,
            out: PathBuf::from("out"),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(format!("{key}: cannot parse {value:?} as a number")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(invalid(format!(
            "{key}: expected true/false, got {value:?}"
        ))),
    }
}

pub fn parse_mode(value: &str) -> Result<DepthMode> {
    match value.to_ascii_lowercase().as_str() {
        "physical" => Ok(DepthMode::Physical),
        "artistic" => Ok(DepthMode::Artistic),
        _ => Err(invalid(format!(
            "mode: expected physical or artistic, got {value:?}"
        ))),
    }
}

impl Config {
    /// Applies one setting. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "image" => self.image = Some(value.into()),
            "depth" => self.depth = Some(value.into()),
            "mask" => self.mask = (!value.is_empty()).then(|| value.into()),
            "mode" => self.mode = parse_mode(value)?,
            "focal-length" => self.focal_length_mm = Some(number(&key, value)?),
            "f-number" => self.f_number = Some(number(&key, value)?),
            "focus-distance" => self.focus_distance_mm = Some(number(&key, value)?),
            "pixels-per-mm" => self.pixels_per_mm = Some(number(&key, value)?),
            "focus-disparity" => self.focus_disparity = number(&key, value)?,
            "max-radius" => self.max_radius_px = number(&key, value)?,
            "max-layers" => self.max_layers = number(&key, value)?,
            "views" => self.views = number(&key, value)?,
            "psf" => self.psf = value.parse()?,
            "fps" => self.fps = number(&key, value)?,
            "gif" => self.gif = boolean(&key, value)?,
            "linearize" => self.linearize = boolean(&key, value)?,
            "out" => self.out = value.into(),
            _ => return Err(invalid(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("{origin}:{}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| invalid(format!("{origin}:{}: {}", n + 1, strip(e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_pairs<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a str, String)>,
    ) -> Result<()> {
        for (key, value) in pairs {
            self.set(key, &value)?;
        }
        Ok(())
    }

    fn camera(&self) -> Result<Option<CameraParams>> {
        let parts = [
            self.focal_length_mm,
            self.f_number,
            self.focus_distance_mm,
            self.pixels_per_mm,
        ];
        match parts {
            [Some(f), Some(n), Some(s), Some(ppm)] => Ok(Some(CameraParams::new(f, n, s, ppm)?)),
            [None, None, None, None] => Ok(None),
            _ => Err(invalid(
                "camera needs all of focal-length, f-number, focus-distance and pixels-per-mm"
                    .into(),
            )),
        }
    }

    /// Builds and validates the job; checks parameters before files.
    pub fn to_job(&self) -> Result<RenderJob> {
        let image = self
            .image
            .clone()
            .ok_or_else(|| invalid("missing required setting: image".into()))?;
        let depth = self
            .depth
            .clone()
            .ok_or_else(|| invalid("missing required setting: depth".into()))?;
        let job = RenderJob {
            image,
            depth,
            mask: self.mask.clone(),
            mode: self.mode,
            camera: self.camera()?,
            focus_disparity: self.focus_disparity,
            max_radius_px: self.max_radius_px,
            max_layers: self.max_layers,
            n_views: self.views,
            psf: self.psf,
            out_dir: self.out.clone(),
            fps: self.fps,
            gif: self.gif,
            linearize: self.linearize,
        };
        job.validate()?;
        Ok(job)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidParameter(msg) => msg,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_comments_and_both_key_styles() {
        let mut c = Config::default();
        c.apply_text(
            "# job\nimage = a.png\ndepth=d.png  # trailing\n\nmax_radius = 12\nfocus-disparity = 0.9\ngif = on\npsf = ramp\n",
            "test",
        )
        .unwrap();
        assert_eq!(c.image, Some(PathBuf::from("a.png")));
        assert_eq!(c.max_radius_px, 12.0);
        assert_eq!(c.focus_disparity, 0.9);
        assert!(c.gif);
        assert_eq!(c.psf, PsfFamily::Ramp);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail_with_line() {
        let mut c = Config::default();
        let err = c.apply_text("image = a\nradius = 3\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("cfg:2"), "{err}");
        assert!(err.to_string().contains("radius"));
        assert!(c.apply_text("views = many", "cfg").is_err());
        assert!(c.apply_text("no equals sign", "cfg").is_err());
        assert!(c.apply_text("psf = gauss", "cfg").is_err());
    }

    #[test]
    fn every_key_is_accepted() {
        let mut c = Config::default();
        for key in KEYS {
            let value = match *key {
                "mode" => "physical",
                "psf" => "dp",
                "gif" | "linearize" => "true",
                "image" | "depth" | "mask" | "out" => "x",
                _ => "2",
            };
            c.set(key, value).unwrap();
        }
    }

    #[test]
    fn partial_camera_is_rejected() {
        let mut c = Config::default();
        c.apply_text(
            "image = a\ndepth = b\nmode = physical\nfocal-length = 50",
            "cfg",
        )
        .unwrap();
        assert!(matches!(c.to_job(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn parameters_are_checked_before_files() {
        let mut c = Config::default();
        c.apply_text(
            "image = /no/such.png\ndepth = /no/such.png\nviews = 7",
            "cfg",
        )
        .unwrap();
        assert!(matches!(c.to_job(), Err(Error::InvalidParameter(_))));
        c.set("views", "8").unwrap();
        assert!(matches!(c.to_job(), Err(Error::Io { .. })));
    }
}
