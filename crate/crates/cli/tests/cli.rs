use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpview_cli::scene;
use tempfile::{tempdir, TempDir};

fn dpview(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpview"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_owned)
        .collect()
}

struct Fixture {
    dir: TempDir,
    image: PathBuf,
    depth: PathBuf,
    mask: PathBuf,
}

impl Fixture {
    fn new(w: usize, h: usize) -> Fixture {
        let dir = tempdir().unwrap();
        let [image, depth, mask] = scene::portrait(w, h, 5).write(dir.path()).unwrap();
        Fixture {
            dir,
            image,
            depth,
            mask,
        }
    }

    fn p(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bokeh_writes_only_bokeh() {
    let f = Fixture::new(48, 40);
    let out_dir = f.p("o");
    let out = dpview(&[
        "bokeh",
        "--image",
        s(&f.image),
        "--depth",
        s(&f.depth),
        "--mode",
        "artistic",
        "--focus-disparity",
        "0.9",
        "--max-radius",
        "12",
        "--out",
        &out_dir,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout_lines(&out), vec![format!("{out_dir}/bokeh.png")]);
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 1);
}

#[test]
fn missing_depth_names_the_path() {
    let f = Fixture::new(20, 20);
    let missing = f.p("nowhere/depth.png");
    let out = dpview(&[
        "bokeh",
        "--image",
        s(&f.image),
        "--depth",
        &missing,
        "--out",
        &f.p("o"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&missing));
}

#[test]
fn odd_view_count_is_a_validation_error() {
    let f = Fixture::new(20, 20);
    let out = dpview(&[
        "nimat",
        "--views",
        "7",
        "--image",
        s(&f.image),
        "--depth",
        s(&f.depth),
        "--out",
        &f.p("o"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!Path::new(&f.p("o")).exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(
        dpview(&["bokeh", "--max-radius", "lots"]).status.code(),
        Some(1)
    );
    assert_eq!(dpview(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        dpview(&["bokeh", "--depth", "d.png"]).status.code(),
        Some(1)
    );
    assert_eq!(dpview(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_states_defaults() {
    let help = String::from_utf8_lossy(&dpview(&["nimat", "--help"]).stdout).to_string();
    for needle in [
        "[default: 8]",
        "[default: dp]",
        "[default: 25]",
        "linearized",
    ] {
        assert!(help.contains(needle), "help lacks {needle}:\n{help}");
    }
}

#[test]
fn zero_radius_reproduces_input() {
    let f = Fixture::new(32, 24);
    let out = dpview(&[
        "bokeh",
        "--image",
        s(&f.image),
        "--depth",
        s(&f.depth),
        "--max-radius",
        "0",
        "--out",
        &f.p("o"),
    ]);
    assert!(out.status.success());
    let a = image::open(&f.image).unwrap().to_rgb8();
    let b = image::open(f.p("o/bokeh.png")).unwrap().to_rgb8();
    for (x, y) in a.pixels().zip(b.pixels()) {
        for c in 0..3 {
            assert!((x[c] as i32 - y[c] as i32).abs() <= 1);
        }
    }
}

#[test]
fn config_file_and_flags_agree() {
    let f = Fixture::new(40, 32);
    let cfg = f.p("job.conf");
    fs::write(
        &cfg,
        format!(
            "# job\nimage = {}\ndepth = {}\nmask = {}\nmax_radius = 6\nviews = 4\npsf = ramp\nfps = 10\ngif = true\nout = {}\n",
            s(&f.image),
            s(&f.depth),
            s(&f.mask),
            f.p("a")
        ),
    )
    .unwrap();
    let a = dpview(&["nimat", "--config", &cfg]);
    let b = dpview(&[
        "nimat",
        "--image",
        s(&f.image),
        "--depth",
        s(&f.depth),
        "--mask",
        s(&f.mask),
        "--max-radius",
        "6",
        "--views",
        "4",
        "--psf",
        "ramp",
        "--fps",
        "10",
        "--gif",
        "--out",
        &f.p("b"),
    ]);
    assert!(a.status.success() && b.status.success());
    let (la, lb) = (stdout_lines(&a), stdout_lines(&b));
    assert_eq!(la.len(), 6);
    for (x, y) in la.iter().zip(&lb) {
        assert_eq!(Path::new(x).file_name(), Path::new(y).file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{x}");
    }

    let c = dpview(&[
        "nimat",
        "--config",
        &cfg,
        "--views",
        "2",
        "--out",
        &f.p("c"),
    ]);
    assert_eq!(stdout_lines(&c).len(), 4);

    fs::write(&cfg, "image = x\nblur = 3\n").unwrap();
    let bad = dpview(&["nimat", "--config", &cfg]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("blur"));
}

#[test]
fn dp_pair_is_deterministic_and_in_focus_pair_is_equal() {
    let f = Fixture::new(40, 30);
    let run = |out: &str, radius: &str| {
        let o = dpview(&[
            "dp-pair",
            "--image",
            s(&f.image),
            "--depth",
            s(&f.depth),
            "--max-radius",
            radius,
            "--out",
            out,
        ]);
        assert!(o.status.success());
        stdout_lines(&o)
    };
    let a = run(&f.p("a"), "5");
    let b = run(&f.p("b"), "5");
    assert!(a[0].ends_with("left.png") && a[1].ends_with("right.png"));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_ne!(fs::read(&a[0]).unwrap(), fs::read(&a[1]).unwrap());
    let z = run(&f.p("z"), "0");
    assert_eq!(fs::read(&z[0]).unwrap(), fs::read(&z[1]).unwrap());
}

#[test]
fn physical_mode_with_pfm_depth() {
    let f = Fixture::new(24, 16);
    let pfm = f.p("depth.pfm");
    let values: Vec<f32> = (0..24 * 16)
        .map(|i| 800.0 + (i % 24) as f32 * 100.0)
        .collect();
    dpview::io::write_pfm(Path::new(&pfm), 24, 16, &values).unwrap();
    let out = dpview(&[
        "bokeh",
        "--image",
        s(&f.image),
        "--depth",
        &pfm,
        "--mode",
        "physical",
        "--focal-length",
        "50",
        "--f-number",
        "1.8",
        "--focus-distance",
        "1500",
        "--pixels-per-mm",
        "200",
        "--out",
        &f.p("o"),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let partial = dpview(&[
        "bokeh",
        "--image",
        s(&f.image),
        "--depth",
        &pfm,
        "--mode",
        "physical",
        "--focal-length",
        "50",
    ]);
    assert_eq!(partial.status.code(), Some(1));
}

#[test]
fn kernel_and_bench_commands() {
    let f = Fixture::new(16, 16);
    let k = dpview(&[
        "kernel",
        "--radius",
        "-3",
        "--theta",
        "45",
        "--out",
        &f.p("k/k.png"),
    ]);
    assert!(k.status.success());
    assert!(Path::new(&f.p("k/k.txt")).exists());

    let b = dpview(&[
        "bench",
        "--sizes",
        "32",
        "--radii",
        "0,2",
        "--layers",
        "2",
        "--views",
        "2",
        "--repeats",
        "1",
    ]);
    assert!(b.status.success());
    let lines = stdout_lines(&b);
    assert_eq!(lines.len(), 3);
    assert!(lines[0].trim_start().starts_with("size"));
}
